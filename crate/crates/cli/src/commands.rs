//! Subcommand implementations: panel validation, ensemble training, rolling
//! backtests, baseline runs, and pairwise predictive-ability comparisons.
//! Every command is deterministic given identical inputs, flags, and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cesrnn_core::baselines;
use cesrnn_core::gw::{gw_test, MIN_OBSERVATIONS};
use cesrnn_core::metrics::{compute_metrics, EvalPoint};
use cesrnn_core::network::PriceBundle;
use cesrnn_core::panel::{split_test, validate_panel, Day, SeriesPanel, Severity};
use cesrnn_core::tape::ParamStore;
use cesrnn_core::trainer::{
    backtest, train_member, BacktestReport, ForecastRow, TrainedMember, TrainingConfig,
};
use rayon::prelude::*;

use crate::config::{self, Overrides, RunConfig};
use crate::{checkpoint, dataio, report, CliError};

/// Reference model for `baseline`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BaselineModel {
    /// Forecast day `t+k` with the observed price of day `t+k-h`.
    Naive,
    /// Flat forecast from a fixed-coefficient smoothing recursion.
    Es,
}

fn parse_day(what: &str, s: &str) -> Result<Day, CliError> {
    Day::from_str(s).map_err(|e| CliError::Usage(format!("--{what}: {e}")))
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Days of each coin usable for training: everything strictly before
/// `train_until`, or the whole series when unset.
fn train_lengths(panel: &SeriesPanel, train_until: Option<Day>) -> Vec<usize> {
    panel
        .coins
        .iter()
        .map(|c| match train_until {
            Some(day) => day.since(c.start).clamp(0, c.len() as i64) as usize,
            None => c.len(),
        })
        .collect()
}

fn print_pooled_summary(report: &BacktestReport) {
    match &report.pooled {
        Some(m) => println!(
            "pooled over {} steps: mape {:.4}%  rmse {:.4}  mpe {:+.4}%  \
             coverage {:.2}%  crossings {:.2}%",
            m.count, m.mape, m.rmse, m.mpe, m.coverage, m.crossing_rate
        ),
        None => println!("no fully observed forecast steps in the requested range"),
    }
}

/// Writes the three output tables of a forecasting run and returns their
/// manifest entries.
fn write_run_outputs(
    out_dir: &Path,
    panel: &SeriesPanel,
    report: &BacktestReport,
    h: usize,
) -> Result<Vec<(String, PathBuf)>, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| crate::io_err("creating output directory", out_dir, e))?;
    let forecasts = out_dir.join("forecasts.csv");
    let metrics = out_dir.join("metrics.csv");
    let losses = out_dir.join("losses.csv");
    report::write_forecasts(&forecasts, panel, report, h)?;
    report::write_metrics(&metrics, panel, report)?;
    dataio::write_losses(&losses, &report::anchor_losses(panel, report, h))?;
    Ok(vec![
        ("forecasts.csv".to_string(), forecasts),
        ("metrics.csv".to_string(), metrics),
        ("losses.csv".to_string(), losses),
    ])
}

/// Loads and validates a panel, printing the report. Fails (exit 2) on any
/// fatal defect.
pub fn cmd_validate(
    data_dir: &Path,
    config_file: Option<&Path>,
    overrides: &Overrides,
) -> Result<(), CliError> {
    let cfg = config::resolve(config_file, overrides)?;
    let (panel, warnings) = dataio::load_panel(data_dir, &cfg.schema)?;
    print_warnings(&warnings);
    let vr = validate_panel(&panel, cfg.min_history);
    for s in &vr.summaries {
        println!("coin {}: {} days ({}..{})", s.id, s.days, s.start, s.end);
    }
    println!(
        "{} exogenous variable(s): {}",
        panel.exo_names.len(),
        if panel.exo_names.is_empty() { "-".to_string() } else { panel.exo_names.join(", ") }
    );
    let mut fatal = 0usize;
    for issue in &vr.issues {
        match issue.severity {
            Severity::Fatal => {
                fatal += 1;
                println!("fatal [{}]: {}", issue.coin, issue.message);
            }
            Severity::Warning => println!("warning [{}]: {}", issue.coin, issue.message),
        }
    }
    if fatal > 0 {
        return Err(CliError::Data(format!("validation found {fatal} fatal defect(s)")));
    }
    println!("panel OK: {} coin(s)", panel.coins.len());
    Ok(())
}

/// Trains the ensemble and writes a run directory: resolved config echo,
/// one checkpoint per member, the training log, and a sha256 manifest over
/// inputs and outputs.
pub fn cmd_train(
    data_dir: &Path,
    out_dir: &Path,
    config_file: Option<&Path>,
    overrides: &Overrides,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let mut cfg = config::resolve(config_file, overrides)?;
    let (panel, warnings) = dataio::load_panel(data_dir, &cfg.schema)?;
    print_warnings(&warnings);
    cfg.training.net.n_exo = panel.exo_names.len();
    cfg.training.validate()?;
    if panel.coin(&cfg.training.context_id).is_none() {
        let ids: Vec<&str> = panel.coins.iter().map(|c| c.id.as_str()).collect();
        return Err(CliError::Data(format!(
            "context series '{}' is not in the panel (coins: {})",
            cfg.training.context_id,
            ids.join(", ")
        )));
    }
    // Pin the exact coin set into the echoed config so a later backtest
    // reloads the panel the checkpoints were trained on.
    cfg.schema.coins = Some(panel.coins.iter().map(|c| c.id.clone()).collect());
    let train_len = train_lengths(&panel, cfg.train_until);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build worker pool: {e}")))?;
    let n_members = cfg.training.ensemble_size as u64;
    let training = &cfg.training;
    let members: Vec<TrainedMember> = pool.install(|| {
        (0..n_members)
            .into_par_iter()
            .map(|k| train_member(&panel, &train_len, training, training.seed + k))
            .collect::<Result<Vec<_>, _>>()
    })?;

    fs::create_dir_all(out_dir).map_err(|e| crate::io_err("creating run directory", out_dir, e))?;
    let config_path = out_dir.join("config.txt");
    fs::write(&config_path, config::echo(&cfg))
        .map_err(|e| crate::io_err("writing config echo", &config_path, e))?;
    let log_path = out_dir.join("train_log.csv");
    report::write_train_log(&log_path, &members)?;

    let mut manifest_files: Vec<(String, PathBuf)> = vec![
        ("config.txt".to_string(), config_path),
        ("train_log.csv".to_string(), log_path),
    ];
    for coin in &panel.coins {
        let file = format!("{}.csv", coin.id);
        manifest_files.push((format!("data/{file}"), data_dir.join(file)));
    }
    for (k, member) in members.iter().enumerate() {
        let name = format!("member_{k}.ckpt");
        let path = out_dir.join(&name);
        checkpoint::save(&member.store, &path)?;
        manifest_files.push((name, path));
    }
    report::write_manifest(&out_dir.join("manifest.txt"), &manifest_files)?;

    for (k, member) in members.iter().enumerate() {
        if let Some(last) = member.log.last() {
            println!(
                "member {k}: {} updates, final loss {:.6}",
                member.log.len(),
                last.loss
            );
        }
    }
    println!(
        "trained {} member(s) on {} coin(s); run written to {}",
        members.len(),
        panel.coins.len(),
        out_dir.display()
    );
    Ok(())
}

/// Checkpoints of a run directory, ordered by member index.
fn member_checkpoints(run_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries =
        fs::read_dir(run_dir).map_err(|e| crate::io_err("reading run directory", run_dir, e))?;
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries.filter_map(Result::ok) {
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(k) = name
            .strip_prefix("member_")
            .and_then(|r| r.strip_suffix(".ckpt"))
            .and_then(|r| r.parse::<usize>().ok())
        {
            found.push((k, entry.path()));
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(CliError::Data(format!(
            "no member checkpoints (member_<k>.ckpt) in {}",
            run_dir.display()
        )));
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Rolls a trained run over `[from, to]`, writing forecast, metrics, and loss
/// tables plus a manifest over inputs and outputs. The run's echoed config is
/// authoritative for schema and engine settings. With `retrain_every =
/// Some(k)` the saved checkpoints are ignored and the ensemble is retrained
/// before every `k`-day segment on the data preceding it.
pub fn cmd_backtest(
    run_dir: &Path,
    data_dir: &Path,
    from: &str,
    to: &str,
    out_dir: Option<&Path>,
    retrain_every: Option<usize>,
) -> Result<(), CliError> {
    let from = parse_day("from", from)?;
    let to = parse_day("to", to)?;
    let mut cfg: RunConfig = config::read_run_config(run_dir)?;
    let out = match out_dir {
        Some(p) => {
            if p.exists() && fs::canonicalize(p).ok() == fs::canonicalize(run_dir).ok() {
                return Err(CliError::Usage(format!(
                    "--out {} is the run directory itself; its training manifest would be \
                     overwritten — pick a subdirectory or another path",
                    p.display()
                )));
            }
            p.to_path_buf()
        }
        None => run_dir.join(format!("backtest_{from}_{to}")),
    };
    let (panel, warnings) = dataio::load_panel(data_dir, &cfg.schema)?;
    print_warnings(&warnings);
    cfg.training.net.n_exo = panel.exo_names.len();
    let ckpt_paths: Option<Vec<PathBuf>> = match retrain_every {
        None => Some(member_checkpoints(run_dir)?),
        Some(_) => None,
    };
    let (report, n_members) = match retrain_every {
        Some(every) => {
            let (report, segments) = backtest_with_retraining(&panel, &cfg.training, from, to, every)?;
            println!(
                "retrained {} member(s) before each of {segments} segment(s) of {every} day(s)",
                cfg.training.ensemble_size
            );
            (report, cfg.training.ensemble_size)
        }
        None => {
            match cfg.train_until {
                None => eprintln!(
                    "warning: run has no train_until; training saw the whole panel, \
                     including this test range"
                ),
                Some(day) if from < day => eprintln!(
                    "warning: test range starts {from} but training used data up to {day}; \
                     results before {day} are in-sample"
                ),
                Some(_) => {}
            }
            let members: Vec<ParamStore> = ckpt_paths
                .as_deref()
                .unwrap()
                .iter()
                .map(|p| checkpoint::load(p))
                .collect::<Result<_, _>>()?;
            let n = members.len();
            (backtest(&panel, &members, &cfg.training, from, to)?, n)
        }
    };
    let mut manifest_files = write_run_outputs(&out, &panel, &report, cfg.training.net.h)?;
    for coin in &panel.coins {
        let file = format!("{}.csv", coin.id);
        manifest_files.push((format!("data/{file}"), data_dir.join(file)));
    }
    manifest_files.push(("run/config.txt".to_string(), run_dir.join("config.txt")));
    for p in ckpt_paths.iter().flatten() {
        let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
        manifest_files.push((format!("run/{name}"), p.clone()));
    }
    report::write_manifest(&out.join("manifest.txt"), &manifest_files)?;
    println!(
        "{} forecast anchor(s) over {} member(s); tables written to {}",
        report.rows.len(),
        n_members,
        out.display()
    );
    print_pooled_summary(&report);
    Ok(())
}

/// Rolling-origin re-estimation: splits `[from, to]` into consecutive
/// `every`-day segments, trains a fresh ensemble on the data strictly before
/// each segment (same member seeds each time, so the roll is deterministic),
/// and scores the merged forecast table. Returns the report and the number
/// of segments rolled.
fn backtest_with_retraining(
    panel: &SeriesPanel,
    cfg: &TrainingConfig,
    from: Day,
    to: Day,
    every: usize,
) -> Result<(BacktestReport, usize), CliError> {
    if every == 0 {
        return Err(CliError::Usage("--retrain-every must be at least 1".to_string()));
    }
    let mut rows: Vec<ForecastRow> = Vec::new();
    let mut member_point: Vec<Vec<(usize, usize, Vec<f64>)>> =
        vec![Vec::new(); cfg.ensemble_size];
    let mut segments = 0usize;
    let mut seg_start = from;
    while seg_start <= to {
        let seg_end = Day(to.0.min(seg_start.offset(every as i64 - 1).0));
        let train_len = train_lengths(panel, Some(seg_start));
        let members: Vec<ParamStore> = (0..cfg.ensemble_size as u64)
            .map(|k| train_member(panel, &train_len, cfg, cfg.seed + k).map(|m| m.store))
            .collect::<Result<_, _>>()?;
        let seg = backtest(panel, &members, cfg, seg_start, seg_end)?;
        rows.extend(seg.rows);
        for (mi, losses) in seg.member_point.into_iter().enumerate() {
            member_point[mi].extend(losses);
        }
        segments += 1;
        seg_start = seg_end.succ();
    }
    rows.sort_by_key(|r| (r.coin, r.anchor.0));
    for losses in &mut member_point {
        losses.sort_by_key(|&(coin, t, _)| (coin, t));
    }

    // Re-score the merged table: per-segment summaries don't pool.
    let h = cfg.net.h;
    let mut per_coin_points: Vec<Vec<EvalPoint>> = vec![Vec::new(); panel.coins.len()];
    for r in &rows {
        if r.truncated {
            continue;
        }
        let prices = &panel.coins[r.coin].prices;
        for k in 0..h {
            per_coin_points[r.coin].push(EvalPoint {
                actual: prices[r.t + 1 + k],
                point: r.bundle.point[k],
                lower: r.bundle.lower[k],
                upper: r.bundle.upper[k],
            });
        }
    }
    let per_coin: Vec<_> = per_coin_points.iter().map(|p| compute_metrics(p)).collect();
    let pooled_points: Vec<EvalPoint> = per_coin_points.into_iter().flatten().collect();
    let pooled = compute_metrics(&pooled_points);
    Ok((BacktestReport { rows, per_coin, pooled, member_point }, segments))
}

/// Runs a reference model over the same rolling protocol as `backtest` and
/// writes the same tables. Baselines are point forecasts: the interval
/// columns repeat the point, so their coverage reads near zero by design.
#[allow(clippy::too_many_arguments)]
pub fn cmd_baseline(
    data_dir: &Path,
    model: BaselineModel,
    from: &str,
    to: &str,
    es_alpha: f64,
    out_dir: &Path,
    config_file: Option<&Path>,
    overrides: &Overrides,
) -> Result<(), CliError> {
    let from = parse_day("from", from)?;
    let to = parse_day("to", to)?;
    let cfg = config::resolve(config_file, overrides)?;
    let (panel, warnings) = dataio::load_panel(data_dir, &cfg.schema)?;
    print_warnings(&warnings);
    let n = cfg.training.net.n;
    let h = cfg.training.net.h;
    let (_, test_view) = split_test(&panel, from, to, n, h)?;

    let mut rows = Vec::new();
    let mut per_coin_points: Vec<Vec<EvalPoint>> = vec![Vec::new(); panel.coins.len()];
    for (c, anchors) in test_view.anchors.iter().enumerate() {
        let prices = &panel.coins[c].prices;
        for a in anchors {
            let point = match model {
                BaselineModel::Naive => baselines::naive_forecast(prices, a.t, h)?,
                BaselineModel::Es => baselines::simple_es_forecast(prices, a.t, h, es_alpha)?,
            };
            if !a.truncated {
                for (k, f) in point.iter().enumerate() {
                    per_coin_points[c].push(EvalPoint {
                        actual: prices[a.t + 1 + k],
                        point: *f,
                        lower: *f,
                        upper: *f,
                    });
                }
            }
            rows.push(ForecastRow {
                coin: c,
                anchor: a.day,
                t: a.t,
                truncated: a.truncated,
                bundle: PriceBundle {
                    point: point.clone(),
                    lower: point.clone(),
                    upper: point,
                    delta_alpha: 0.0,
                    level: prices[a.t],
                },
            });
        }
    }
    let per_coin = per_coin_points.iter().map(|p| compute_metrics(p)).collect();
    let pooled_points: Vec<EvalPoint> = per_coin_points.into_iter().flatten().collect();
    let report = BacktestReport {
        rows,
        per_coin,
        pooled: compute_metrics(&pooled_points),
        member_point: Vec::new(),
    };
    let mut manifest_files = write_run_outputs(out_dir, &panel, &report, h)?;
    let config_path = out_dir.join("config.txt");
    fs::write(&config_path, config::echo(&cfg))
        .map_err(|e| crate::io_err("writing config echo", &config_path, e))?;
    manifest_files.push(("config.txt".to_string(), config_path));
    for coin in &panel.coins {
        let file = format!("{}.csv", coin.id);
        manifest_files.push((format!("data/{file}"), data_dir.join(file)));
    }
    report::write_manifest(&out_dir.join("manifest.txt"), &manifest_files)?;
    println!(
        "{} baseline anchor(s); tables written to {}",
        report.rows.len(),
        out_dir.display()
    );
    print_pooled_summary(&report);
    Ok(())
}

type LossMap = BTreeMap<String, BTreeMap<Day, f64>>;

fn group_losses(path: &Path) -> Result<LossMap, CliError> {
    let mut map: LossMap = BTreeMap::new();
    for row in dataio::read_losses(path)? {
        if map.entry(row.coin.clone()).or_default().insert(row.anchor, row.loss).is_some() {
            return Err(CliError::Format(format!(
                "{}: duplicate entry for coin '{}' on {}",
                path.display(),
                row.coin,
                row.anchor
            )));
        }
    }
    Ok(map)
}

/// Compares two per-anchor loss tables coin by coin with the conditional
/// predictive ability test, aligning on common (coin, date) pairs.
pub fn cmd_gw(path_a: &Path, path_b: &Path, alpha: f64) -> Result<(), CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "--alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let a = group_losses(path_a)?;
    let b = group_losses(path_b)?;
    println!("A = {}", path_a.display());
    println!("B = {}", path_b.display());
    println!("coin,n,stat,p_value,mean_delta,favored");
    let mut compared = 0usize;
    let (mut favors_a, mut favors_b) = (0usize, 0usize);
    for (coin, losses_a) in &a {
        let Some(losses_b) = b.get(coin) else {
            println!("# coin '{coin}' only in A; skipped");
            continue;
        };
        let mut va = Vec::new();
        let mut vb = Vec::new();
        for (day, la) in losses_a {
            if let Some(lb) = losses_b.get(day) {
                va.push(*la);
                vb.push(*lb);
            }
        }
        if va.len() < MIN_OBSERVATIONS {
            println!(
                "# coin '{coin}' skipped: {} common anchor(s), test needs {MIN_OBSERVATIONS}",
                va.len()
            );
            continue;
        }
        let r = gw_test(&va, &vb, alpha)?;
        let favored = if r.favors_first() {
            favors_a += 1;
            "A"
        } else if r.favors_second() {
            favors_b += 1;
            "B"
        } else {
            "neither"
        };
        compared += 1;
        println!(
            "{coin},{},{:.6},{:.6},{:.6},{favored}",
            r.n, r.stat, r.p_value, r.mean_delta
        );
    }
    for coin in b.keys() {
        if !a.contains_key(coin) {
            println!("# coin '{coin}' only in B; skipped");
        }
    }
    if compared == 0 {
        return Err(CliError::Data(
            "the loss tables share no coin with enough common anchors to compare".to_string(),
        ));
    }
    println!(
        "summary: A favored on {favors_a}, B on {favors_b}, neither on {} of {compared} \
         coin(s) at alpha={alpha}",
        compared - favors_a - favors_b
    );
    Ok(())
}
