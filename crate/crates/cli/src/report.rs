//! Run-directory outputs: forecast, metrics, and training-log CSV tables,
//! per-anchor loss extraction for predictive-ability comparisons, and a
//! sha256 manifest covering inputs and outputs so a backtest is auditable.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cesrnn_core::metrics::MetricsRow;
use cesrnn_core::panel::SeriesPanel;
use cesrnn_core::trainer::{BacktestReport, TrainedMember};
use sha2::{Digest, Sha256};

use crate::dataio::LossRow;
use crate::{io_err, CliError};

/// Writes `coin,anchor_date,step,point,lower,upper,actual` — one row per
/// forecast step per anchor. `actual` is empty where the panel has no
/// observation yet (rows past the series end).
pub fn write_forecasts(
    path: &Path,
    panel: &SeriesPanel,
    report: &BacktestReport,
    h: usize,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    w.write_record(["coin", "anchor_date", "step", "point", "lower", "upper", "actual"])
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for row in &report.rows {
        let coin = &panel.coins[row.coin];
        for k in 0..h {
            let actual = coin
                .prices
                .get(row.t + 1 + k)
                .map(|v| v.to_string())
                .unwrap_or_default();
            w.write_record([
                coin.id.as_str(),
                &row.anchor.to_string(),
                &(k + 1).to_string(),
                &row.bundle.point[k].to_string(),
                &row.bundle.lower[k].to_string(),
                &row.bundle.upper[k].to_string(),
                &actual,
            ])
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        }
    }
    w.flush().map_err(|e| io_err("writing forecast table", path, e))
}

fn metrics_record(coin: &str, m: &MetricsRow) -> Vec<String> {
    vec![
        coin.to_string(),
        m.mape.to_string(),
        m.rmse.to_string(),
        m.mpe.to_string(),
        m.stdpe.to_string(),
        m.coverage.to_string(),
        m.crossing_rate.to_string(),
        m.count.to_string(),
    ]
}

/// Writes per-coin accuracy rows plus a pooled `ALL` row. Coins that scored
/// no steps (all anchors truncated) are omitted.
pub fn write_metrics(
    path: &Path,
    panel: &SeriesPanel,
    report: &BacktestReport,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    w.write_record(["coin", "mape", "rmse", "mpe", "stdpe", "coverage", "crossing_rate", "count"])
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for (coin, metrics) in panel.coins.iter().zip(&report.per_coin) {
        if let Some(m) = metrics {
            w.write_record(metrics_record(&coin.id, m))
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        }
    }
    if let Some(m) = &report.pooled {
        w.write_record(metrics_record("ALL", m))
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| io_err("writing metrics table", path, e))
}

/// Per-anchor losses of the aggregated forecast: mean absolute percentage
/// error over the `h` steps. Truncated anchors are skipped (no full actual
/// window), matching what the accuracy metrics score.
pub fn anchor_losses(panel: &SeriesPanel, report: &BacktestReport, h: usize) -> Vec<LossRow> {
    let mut out = Vec::new();
    for row in &report.rows {
        if row.truncated {
            continue;
        }
        let prices = &panel.coins[row.coin].prices;
        let mean_ape = (0..h)
            .map(|k| {
                let actual = prices[row.t + 1 + k];
                100.0 * ((actual - row.bundle.point[k]) / actual).abs()
            })
            .sum::<f64>()
            / h as f64;
        out.push(LossRow {
            coin: panel.coins[row.coin].id.clone(),
            anchor: row.anchor,
            loss: mean_ape,
        });
    }
    out
}

/// Writes `member,epoch,update,j,steps,lr,loss` for the whole ensemble,
/// members in training order.
pub fn write_train_log(path: &Path, members: &[TrainedMember]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    w.write_record(["member", "epoch", "update", "j", "steps", "lr", "loss"])
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for (k, member) in members.iter().enumerate() {
        for row in &member.log {
            w.write_record([
                k.to_string(),
                row.epoch.to_string(),
                row.update.to_string(),
                row.j.to_string(),
                row.steps.to_string(),
                row.lr.to_string(),
                row.loss.to_string(),
            ])
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        }
    }
    w.flush().map_err(|e| io_err("writing training log", path, e))
}

/// Hex sha256 of one file.
pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| io_err("hashing file", path, e))?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(hex)
}

/// Writes `<sha256>  <label>` lines, sorted by label, covering the given
/// files — typically the input CSVs plus every run output.
pub fn write_manifest(path: &Path, files: &[(String, PathBuf)]) -> Result<(), CliError> {
    let mut entries: Vec<&(String, PathBuf)> = files.iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::new();
    for (label, file) in entries {
        let _ = writeln!(out, "{}  {label}", sha256_file(file)?);
    }
    fs::write(path, out).map_err(|e| io_err("writing manifest", path, e))
}
