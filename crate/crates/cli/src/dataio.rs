//! CSV panel ingestion: one file per coin, `date` first, price column by
//! name, everything else exogenous unless excluded. Calendar gaps are
//! forward-filled or drop the coin, per config, with warnings naming the
//! exact dates. Also the loss-table CSV format shared by `backtest`,
//! `baseline`, and `gw`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cesrnn_core::panel::{CoinSeries, Day, SeriesPanel};

use crate::config::{FillPolicy, SchemaConfig};
use crate::{io_err, CliError};

/// One coin file parsed but not yet gap-checked: strictly ascending dates
/// with one value row (all non-date columns) per date.
struct RawSeries {
    id: String,
    dates: Vec<Day>,
    rows: Vec<Vec<f64>>,
    /// Non-date header names, in file order.
    columns: Vec<String>,
}

fn coin_files(dir: &Path, schema: &SchemaConfig) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| io_err("reading data directory", dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!(
            "no CSV files found in {} (expected one <coin_id>.csv per series)",
            dir.display()
        )));
    }
    if let Some(wanted) = &schema.coins {
        let stems: Vec<String> = files
            .iter()
            .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .collect();
        for coin in wanted {
            if !stems.contains(coin) {
                return Err(CliError::Data(format!(
                    "coin '{coin}' is configured but {} has no {coin}.csv",
                    dir.display()
                )));
            }
        }
        files.retain(|p| {
            p.file_stem()
                .map(|s| wanted.iter().any(|c| **c == *s.to_string_lossy()))
                .unwrap_or(false)
        });
    }
    Ok(files)
}

fn parse_coin_file(path: &Path) -> Result<RawSeries, CliError> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if stem.is_empty() || stem.chars().any(char::is_whitespace) {
        return Err(CliError::Data(format!(
            "{}: file stem '{stem}' is not a usable coin id",
            path.display()
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?
        .clone();
    if headers.is_empty() || &headers[0] != "date" {
        return Err(CliError::Format(format!(
            "{}: first header column must be 'date', got '{}'",
            path.display(),
            headers.get(0).unwrap_or("")
        )));
    }
    if headers.len() < 2 {
        return Err(CliError::Format(format!(
            "{}: header has no value columns after 'date'",
            path.display()
        )));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let date = Day::from_str(&record[0]).map_err(|e| {
            CliError::Format(format!("{} line {line}: {e}", path.display()))
        })?;
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(CliError::Format(format!(
                    "{} line {line}: dates must be strictly ascending ({date} follows {prev})",
                    path.display()
                )));
            }
        }
        let mut row = Vec::with_capacity(columns.len());
        for (field, name) in record.iter().skip(1).zip(&columns) {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Format(format!(
                    "{} line {line}, column '{name}': non-numeric value '{field}'",
                    path.display()
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Format(format!(
                    "{} line {line}, column '{name}': non-finite value '{field}'",
                    path.display()
                )));
            }
            row.push(v);
        }
        dates.push(date);
        rows.push(row);
    }
    if dates.is_empty() {
        return Err(CliError::Format(format!("{}: no data rows", path.display())));
    }
    Ok(RawSeries { id: stem, dates, rows, columns })
}

/// Fills calendar gaps per policy, keeping dates and rows parallel. Returns
/// `None` when the coin is excluded. Appends one warning per gap.
fn apply_fill_policy(
    mut raw: RawSeries,
    policy: FillPolicy,
    warnings: &mut Vec<String>,
) -> Option<RawSeries> {
    let mut gaps = Vec::new();
    for pair in raw.dates.windows(2) {
        let missing = pair[1].since(pair[0]) - 1;
        if missing > 0 {
            gaps.push((pair[0].succ(), pair[1].offset(-1), missing));
        }
    }
    if gaps.is_empty() {
        return Some(raw);
    }
    match policy {
        FillPolicy::Exclude => {
            for (from, to, k) in &gaps {
                warnings.push(format!(
                    "series '{}': gap {from}..{to} ({k} days); series excluded",
                    raw.id
                ));
            }
            None
        }
        FillPolicy::Ffill => {
            let mut dates = Vec::new();
            let mut rows = Vec::new();
            for (date, row) in raw.dates.iter().zip(&raw.rows) {
                while dates.last().is_some_and(|&prev: &Day| prev.succ() < *date) {
                    dates.push(dates.last().unwrap().succ());
                    rows.push(rows.last().cloned().unwrap());
                }
                dates.push(*date);
                rows.push(row.clone());
            }
            for (from, to, k) in &gaps {
                warnings.push(format!(
                    "series '{}': gap {from}..{to} ({k} days) forward-filled",
                    raw.id
                ));
            }
            raw.dates = dates;
            raw.rows = rows;
            Some(raw)
        }
    }
}

/// Loads every coin CSV under `dir` into a panel, returning the panel and
/// human-readable warnings (filled gaps, excluded coins). Schema errors and
/// missing coins are data errors; malformed cells and broken calendars are
/// format errors.
pub fn load_panel(
    dir: &Path,
    schema: &SchemaConfig,
) -> Result<(SeriesPanel, Vec<String>), CliError> {
    let files = coin_files(dir, schema)?;
    let mut warnings = Vec::new();
    let mut panel = SeriesPanel::default();
    let mut schema_columns: Option<Vec<String>> = None;
    let mut excluded_seen = vec![false; schema.excluded_columns.len()];
    for path in &files {
        let raw = parse_coin_file(path)?;
        match &schema_columns {
            None => schema_columns = Some(raw.columns.clone()),
            Some(expected) if *expected != raw.columns => {
                return Err(CliError::Data(format!(
                    "coin '{}' has columns [{}] but the panel schema is [{}]",
                    raw.id,
                    raw.columns.join(", "),
                    expected.join(", ")
                )));
            }
            Some(_) => {}
        }
        let price_idx = raw
            .columns
            .iter()
            .position(|c| *c == schema.price_column)
            .ok_or_else(|| {
                CliError::Data(format!(
                    "{}: price column '{}' not found (columns: {})",
                    path.display(),
                    schema.price_column,
                    raw.columns.join(", ")
                ))
            })?;
        for (flag, name) in excluded_seen.iter_mut().zip(&schema.excluded_columns) {
            *flag |= raw.columns.contains(name);
        }
        let exo_cols: Vec<usize> = raw
            .columns
            .iter()
            .enumerate()
            .filter(|(i, c)| *i != price_idx && !schema.excluded_columns.contains(c))
            .map(|(i, _)| i)
            .collect();
        let exo_names: Vec<String> =
            exo_cols.iter().map(|&i| raw.columns[i].clone()).collect();
        if panel.coins.is_empty() {
            panel.exo_names = exo_names;
        }
        let Some(raw) = apply_fill_policy(raw, schema.fill_policy, &mut warnings) else {
            continue;
        };
        let prices: Vec<f64> = raw.rows.iter().map(|r| r[price_idx]).collect();
        let exo: Vec<Vec<f64>> = exo_cols
            .iter()
            .map(|&col| raw.rows.iter().map(|r| r[col]).collect())
            .collect();
        panel.coins.push(CoinSeries { id: raw.id, start: raw.dates[0], prices, exo });
    }
    for (seen, name) in excluded_seen.iter().zip(&schema.excluded_columns) {
        if !seen {
            warnings.push(format!("excluded column '{name}' does not appear in any file"));
        }
    }
    if panel.coins.is_empty() {
        return Err(CliError::Data(
            "every series was excluded; nothing left to load".to_string(),
        ));
    }
    Ok((panel, warnings))
}

/// Writes a panel back out as one CSV per coin, using `price_column` as the
/// price header. Inverse of `load_panel` for gap-free panels.
pub fn export_panel(
    dir: &Path,
    panel: &SeriesPanel,
    price_column: &str,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err("creating data directory", dir, e))?;
    for coin in &panel.coins {
        let path = dir.join(format!("{}.csv", coin.id));
        let mut w = csv::Writer::from_path(&path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let mut header = vec!["date".to_string(), price_column.to_string()];
        header.extend(panel.exo_names.iter().cloned());
        w.write_record(&header)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        for t in 0..coin.len() {
            let mut row = vec![coin.start.offset(t as i64).to_string()];
            row.push(coin.prices[t].to_string());
            for series in &coin.exo {
                row.push(series[t].to_string());
            }
            w.write_record(&row)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        }
        w.flush().map_err(|e| io_err("writing coin file", &path, e))?;
    }
    Ok(())
}

/// One per-anchor loss observation as exchanged between commands.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRow {
    pub coin: String,
    pub anchor: Day,
    pub loss: f64,
}

/// Writes the `coin,anchor_date,loss` table.
pub fn write_losses(path: &Path, rows: &[LossRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    w.write_record(["coin", "anchor_date", "loss"])
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for row in rows {
        w.write_record([&row.coin, &row.anchor.to_string(), &row.loss.to_string()])
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| io_err("writing loss table", path, e))
}

/// Reads a `coin,anchor_date,loss` table; any structural or numeric defect is
/// a format error naming the location.
pub fn read_losses(path: &Path) -> Result<Vec<LossRow>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let expected = ["coin", "anchor_date", "loss"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::Format(format!(
            "{}: expected header 'coin,anchor_date,loss', got '{}'",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let anchor = Day::from_str(&record[1]).map_err(|e| {
            CliError::Format(format!("{} line {line}: {e}", path.display()))
        })?;
        let loss: f64 = record[2].parse().map_err(|_| {
            CliError::Format(format!(
                "{} line {line}: non-numeric loss '{}'",
                path.display(),
                &record[2]
            ))
        })?;
        rows.push(LossRow { coin: record[0].to_string(), anchor, loss });
    }
    Ok(rows)
}
