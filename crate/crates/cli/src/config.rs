//! Run configuration: flat key=value files, flag overrides, and the resolved
//! echo written into every run directory.
//!
//! Precedence is flags over file over defaults. The resolved configuration is
//! re-serialized deterministically so a run directory always records exactly
//! what it ran with.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use cesrnn_core::panel::Day;
use cesrnn_core::trainer::{Aggregation, Schedule, TrainingConfig};

use crate::CliError;

/// How gaps in a coin's calendar are handled at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillPolicy {
    /// Insert missing days by repeating the previous row.
    Ffill,
    /// Drop the coin from the panel.
    Exclude,
}

impl FromStr for FillPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ffill" => Ok(FillPolicy::Ffill),
            "exclude" => Ok(FillPolicy::Exclude),
            other => Err(format!("unknown fill_policy '{other}' (expected ffill|exclude)")),
        }
    }
}

/// CSV ingestion schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaConfig {
    pub price_column: String,
    pub excluded_columns: Vec<String>,
    pub fill_policy: FillPolicy,
    /// Optional allow-list of coin ids (file stems). `None` loads every CSV.
    pub coins: Option<Vec<String>>,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            price_column: String::from("avg_price_per_day"),
            excluded_columns: Vec::new(),
            fill_policy: FillPolicy::Ffill,
            coins: None,
        }
    }
}

/// Everything a run resolves before computing: engine and training settings
/// plus ingestion schema and split bookkeeping.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub training: TrainingConfig,
    pub schema: SchemaConfig,
    /// First day excluded from training (training uses days strictly before
    /// it); `None` trains on the full panel.
    pub train_until: Option<Day>,
    /// Minimum days of history `validate` demands per coin.
    pub min_history: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            training: TrainingConfig::default(),
            schema: SchemaConfig::default(),
            train_until: None,
            min_history: 60,
        }
    }
}

/// Flag-level overrides, all optional; `None` keeps the file/default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub horizon: Option<usize>,
    pub ensemble: Option<usize>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub updates: Option<usize>,
    pub context: Option<String>,
    pub train_until: Option<String>,
    pub min_history: Option<usize>,
}

fn parse_key<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::Usage(format!("config key '{key}': {e}")))
}

/// Parses `from:value` comma pairs, e.g. `1:2,6:4`.
fn parse_schedule(key: &str, value: &str) -> Result<Schedule, CliError> {
    let mut pairs = Vec::new();
    for part in value.split(',') {
        let (from, v) = part.split_once(':').ok_or_else(|| {
            CliError::Usage(format!(
                "config key '{key}': entry '{part}' is not of the form epoch:value"
            ))
        })?;
        pairs.push((parse_key::<usize>(key, from.trim())?, parse_key::<usize>(key, v.trim())?));
    }
    let sched = Schedule(pairs);
    sched.validate(key).map_err(CliError::from)?;
    Ok(sched)
}

fn schedule_to_string(s: &Schedule) -> String {
    s.0.iter().map(|(f, v)| format!("{f}:{v}")).collect::<Vec<_>>().join(",")
}

fn comma_list(value: &str) -> Vec<String> {
    value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// Reads a flat key=value file: one pair per line, `#` comments, blank lines
/// ignored.
pub fn read_pairs(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| crate::io_err("reading config", path, e))?;
    let mut pairs = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Format(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                lineno + 1
            ))
        })?;
        pairs.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(pairs)
}

/// Applies one configuration key. Unknown keys are usage errors so typos
/// cannot silently fall back to defaults.
fn apply_pair(cfg: &mut RunConfig, key: &str, value: &str) -> Result<(), CliError> {
    let t = &mut cfg.training;
    match key {
        "price_column" => cfg.schema.price_column = value.to_string(),
        "excluded_columns" => cfg.schema.excluded_columns = comma_list(value),
        "fill_policy" => {
            cfg.schema.fill_policy = value.parse().map_err(CliError::Usage)?;
        }
        "coins" => cfg.schema.coins = Some(comma_list(value)),
        "context_series" => t.context_id = value.to_string(),
        "n" => t.net.n = parse_key(key, value)?,
        "horizon" => t.net.h = parse_key(key, value)?,
        "d_embed" => t.net.d_embed = parse_key(key, value)?,
        "u" => t.net.u = parse_key(key, value)?,
        "s1" => t.net.s1 = parse_key(key, value)?,
        "s2" => t.net.s2 = parse_key(key, value)?,
        "level_warmup" => t.net.level_warmup = parse_key(key, value)?,
        "epochs" => t.epochs = parse_key(key, value)?,
        "updates_per_epoch" => t.updates_per_epoch = parse_key(key, value)?,
        "learning_rate" => t.learning_rate = parse_key(key, value)?,
        "lr_halve_every" => t.lr_halve_every = parse_key(key, value)?,
        "ensemble" => t.ensemble_size = parse_key(key, value)?,
        "seed" => t.seed = parse_key(key, value)?,
        "batch_schedule" => t.batch_schedule = parse_schedule(key, value)?,
        "steps_schedule" => t.steps_schedule = parse_schedule(key, value)?,
        "aggregation" => {
            t.aggregation = match value {
                "mean" => Aggregation::Mean,
                "median" => Aggregation::Median,
                other => {
                    return Err(CliError::Usage(format!(
                        "config key 'aggregation': unknown mode '{other}' (expected mean|median)"
                    )))
                }
            };
        }
        "q_lower" => t.quantiles.lower = parse_key(key, value)?,
        "q_upper" => t.quantiles.upper = parse_key(key, value)?,
        "q_center" => t.quantiles.center = parse_key(key, value)?,
        "gamma" => t.quantiles.gamma = parse_key(key, value)?,
        "train_until" => {
            cfg.train_until = Some(Day::from_str(value).map_err(CliError::Usage)?);
        }
        "min_history" => cfg.min_history = parse_key(key, value)?,
        other => {
            return Err(CliError::Usage(format!("unknown config key '{other}'")));
        }
    }
    Ok(())
}

/// Builds the resolved configuration: defaults, then the optional file, then
/// flag overrides. The engine horizon also re-derives the updates-per-epoch
/// default unless a file or flag pinned it.
pub fn resolve(
    file: Option<&Path>,
    overrides: &Overrides,
) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let mut updates_pinned = false;
    if let Some(path) = file {
        for (key, value) in read_pairs(path)? {
            if key == "updates_per_epoch" {
                updates_pinned = true;
            }
            apply_pair(&mut cfg, &key, &value)?;
        }
    }
    let o = overrides;
    if let Some(h) = o.horizon {
        cfg.training.net.h = h;
        if !updates_pinned {
            cfg.training.updates_per_epoch = cesrnn_core::trainer::default_updates_per_epoch(h);
        }
    }
    if let Some(v) = o.ensemble {
        cfg.training.ensemble_size = v;
    }
    if let Some(v) = o.seed {
        cfg.training.seed = v;
    }
    if let Some(v) = o.epochs {
        cfg.training.epochs = v;
    }
    if let Some(v) = o.updates {
        cfg.training.updates_per_epoch = v;
    }
    if let Some(v) = &o.context {
        cfg.training.context_id = v.clone();
    }
    if let Some(v) = &o.train_until {
        cfg.train_until = Some(Day::from_str(v).map_err(CliError::Usage)?);
    }
    if let Some(v) = o.min_history {
        cfg.min_history = v;
    }
    cfg.training.validate().map_err(CliError::from)?;
    Ok(cfg)
}

/// Serializes the resolved configuration as the same flat key=value format,
/// deterministically ordered. Reading it back through `resolve` reproduces
/// the configuration exactly.
pub fn echo(cfg: &RunConfig) -> String {
    let t = &cfg.training;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("aggregation", match t.aggregation {
        Aggregation::Mean => "mean".to_string(),
        Aggregation::Median => "median".to_string(),
    });
    kv("batch_schedule", schedule_to_string(&t.batch_schedule));
    if let Some(coins) = &cfg.schema.coins {
        kv("coins", coins.join(","));
    }
    kv("context_series", t.context_id.clone());
    kv("d_embed", t.net.d_embed.to_string());
    kv("ensemble", t.ensemble_size.to_string());
    kv("epochs", t.epochs.to_string());
    if !cfg.schema.excluded_columns.is_empty() {
        kv("excluded_columns", cfg.schema.excluded_columns.join(","));
    }
    kv("fill_policy", match cfg.schema.fill_policy {
        FillPolicy::Ffill => "ffill".to_string(),
        FillPolicy::Exclude => "exclude".to_string(),
    });
    kv("gamma", t.quantiles.gamma.to_string());
    kv("horizon", t.net.h.to_string());
    kv("learning_rate", t.learning_rate.to_string());
    kv("level_warmup", t.net.level_warmup.to_string());
    kv("lr_halve_every", t.lr_halve_every.to_string());
    kv("min_history", cfg.min_history.to_string());
    kv("n", t.net.n.to_string());
    kv("price_column", cfg.schema.price_column.clone());
    kv("q_center", t.quantiles.center.to_string());
    kv("q_lower", t.quantiles.lower.to_string());
    kv("q_upper", t.quantiles.upper.to_string());
    kv("s1", t.net.s1.to_string());
    kv("s2", t.net.s2.to_string());
    kv("seed", t.seed.to_string());
    kv("steps_schedule", schedule_to_string(&t.steps_schedule));
    if let Some(day) = cfg.train_until {
        kv("train_until", day.to_string());
    }
    kv("u", t.net.u.to_string());
    kv("updates_per_epoch", t.updates_per_epoch.to_string());
    out
}

/// Reads a run directory's echoed configuration back.
pub fn read_run_config(run_dir: &Path) -> Result<RunConfig, CliError> {
    let path = run_dir.join("config.txt");
    if !path.is_file() {
        return Err(CliError::Data(format!(
            "run directory {} has no config.txt (not a training run?)",
            run_dir.display()
        )));
    }
    resolve(Some(&path), &Overrides::default())
}
