//! Series panel: per-coin daily price and exogenous histories aligned on a
//! shared calendar, plus the window geometry and test-split views the trainer
//! and backtest harness run on.
//!
//! Days are counted as plain integers since 1970-01-01 (civil calendar), so
//! alignment between series with different listing dates is integer
//! arithmetic, and date parsing/formatting stays in one tested place.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use crate::error::{DataError, ForecastError};

/// A calendar day, counted in days since 1970-01-01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Day(pub i64);

impl Day {
    /// Builds a day from a civil date. Returns `None` for impossible dates
    /// (month 13, February 30th, ...).
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Day> {
        if !(1..=12).contains(&month) || day < 1 || day > days_in_month(year, month) {
            return None;
        }
        Some(Day(days_from_civil(year, month, day)))
    }

    /// Civil date `(year, month, day)` for this day number.
    pub fn to_ymd(self) -> (i32, u32, u32) {
        civil_from_days(self.0)
    }

    pub fn succ(self) -> Day {
        Day(self.0 + 1)
    }

    pub fn offset(self, days: i64) -> Day {
        Day(self.0 + days)
    }

    /// Days from `earlier` to `self` (negative if `self` precedes it).
    pub fn since(self, earlier: Day) -> i64 {
        self.0 - earlier.0
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (y, m, d) = self.to_ymd();
        write!(f, "{y:04}-{m:02}-{d:02}")
    }
}

impl FromStr for Day {
    type Err = String;

    /// Parses `YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid date '{s}' (expected YYYY-MM-DD)");
        let mut parts = s.split('-');
        let y: i32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let m: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let d: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Day::from_ymd(y, m, d).ok_or_else(bad)
    }
}

fn is_leap(year: i32) -> bool {
    year % 4 == 0 && (year % 100 != 0 || year % 400 == 0)
}

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

/// Days since 1970-01-01 for a civil date (proleptic Gregorian).
fn days_from_civil(y: i32, m: u32, d: u32) -> i64 {
    let y = i64::from(y) - i64::from(m <= 2);
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = i64::from(m) + if m > 2 { -3 } else { 9 };
    let doy = (153 * mp + 2) / 5 + i64::from(d) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146097 + doe - 719468
}

/// Civil date for a day count since 1970-01-01.
fn civil_from_days(z: i64) -> (i32, u32, u32) {
    let z = z + 719468;
    let era = z.div_euclid(146097);
    let doe = z - era * 146097;
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = mp + if mp < 10 { 3 } else { -9 };
    ((y + i64::from(m <= 2)) as i32, m as u32, d as u32)
}

/// One asset's daily history: prices plus exogenous variables, gap-free from
/// `start`.
#[derive(Debug, Clone)]
pub struct CoinSeries {
    pub id: String,
    /// Calendar day of index 0.
    pub start: Day,
    pub prices: Vec<f64>,
    /// One vector per exogenous variable, each as long as `prices`.
    pub exo: Vec<Vec<f64>>,
}

impl CoinSeries {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Calendar day of the last observation.
    pub fn end(&self) -> Day {
        self.start.offset(self.len() as i64 - 1)
    }

    /// Local index of a calendar day, if it falls inside the series.
    pub fn index_of(&self, day: Day) -> Option<usize> {
        let off = day.since(self.start);
        if off >= 0 && (off as usize) < self.len() {
            Some(off as usize)
        } else {
            None
        }
    }
}

/// A panel of series sharing one exogenous-variable schema.
#[derive(Debug, Clone, Default)]
pub struct SeriesPanel {
    pub coins: Vec<CoinSeries>,
    /// Names of the exogenous variables, in the order `CoinSeries::exo` uses.
    pub exo_names: Vec<String>,
}

impl SeriesPanel {
    pub fn coin(&self, id: &str) -> Option<&CoinSeries> {
        self.coins.iter().find(|c| c.id == id)
    }

    pub fn coin_index(&self, id: &str) -> Option<usize> {
        self.coins.iter().position(|c| c.id == id)
    }

    /// Earliest observation day across the panel.
    pub fn first_day(&self) -> Option<Day> {
        self.coins.iter().map(|c| c.start).min()
    }

    /// Latest observation day across the panel.
    pub fn last_day(&self) -> Option<Day> {
        self.coins.iter().map(CoinSeries::end).max()
    }
}

/// Input/output index windows around one forecast anchor, as half-open ranges
/// of local series indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPair {
    /// The `n` most recent observed days, ending at the anchor inclusive.
    pub input: Range<usize>,
    /// The `h` days to forecast, starting the day after the anchor.
    pub output: Range<usize>,
}

impl WindowPair {
    /// How many output days have observations in a series of `len` days.
    pub fn output_available(&self, len: usize) -> usize {
        self.output.end.min(len).saturating_sub(self.output.start)
    }
}

/// Index windows for an anchor at local index `t` (0-based): input covers
/// `[t+1-n, t]`, output covers `[t+1, t+h]`. The input window must fit inside
/// observed history; the output window may extend past `len` (forecasts at the
/// panel edge have no actuals yet).
pub fn make_windows(len: usize, n: usize, h: usize, t: usize) -> Result<WindowPair, ForecastError> {
    if n == 0 || h == 0 {
        return Err(ForecastError::Config("window sizes n and h must be positive".into()));
    }
    if t + 1 < n {
        return Err(ForecastError::Range(format!(
            "anchor {t} needs {n} observed days but only {} exist",
            t + 1
        )));
    }
    if t >= len {
        return Err(ForecastError::Range(format!(
            "anchor {t} lies outside a {len}-day series"
        )));
    }
    Ok(WindowPair { input: t + 1 - n..t + 1, output: t + 1..t + 1 + h })
}

/// Training-side view of a split: per-coin day counts strictly before the
/// test period.
#[derive(Debug, Clone)]
pub struct TrainView {
    /// Parallel to `panel.coins`: number of leading days usable for training.
    pub train_len: Vec<usize>,
    pub test_start: Day,
}

/// One forecast origin inside the test period for one coin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnchorInfo {
    pub day: Day,
    /// Local index of `day` in the coin's series.
    pub t: usize,
    /// True when fewer than `h` actuals exist past the anchor; such rows are
    /// forecast but excluded from accuracy metrics.
    pub truncated: bool,
}

/// Test-side view: one anchor per test-period day per coin that has enough
/// history for an input window on that day.
#[derive(Debug, Clone)]
pub struct TestView {
    pub test_start: Day,
    pub test_end: Day,
    /// Parallel to `panel.coins`.
    pub anchors: Vec<Vec<AnchorInfo>>,
}

/// Splits the panel on the calendar: training uses days strictly before
/// `test_start`; anchors are every day of `[test_start, test_end]` on which a
/// coin has an `n`-day input window. A forecast from anchor `t` targets days
/// `t+1..t+h`, so it may only read data up to `t`.
pub fn split_test(
    panel: &SeriesPanel,
    test_start: Day,
    test_end: Day,
    n: usize,
    h: usize,
) -> Result<(TrainView, TestView), ForecastError> {
    if panel.coins.is_empty() {
        return Err(DataError::EmptyPanel.into());
    }
    if test_end < test_start {
        return Err(ForecastError::Config(format!(
            "test period ends ({test_end}) before it starts ({test_start})"
        )));
    }
    let mut train_len = Vec::with_capacity(panel.coins.len());
    let mut anchors = Vec::with_capacity(panel.coins.len());
    for coin in &panel.coins {
        let before = test_start.since(coin.start).clamp(0, coin.len() as i64);
        train_len.push(before as usize);
        let mut coin_anchors = Vec::new();
        let mut day = test_start;
        while day <= test_end {
            if let Some(t) = coin.index_of(day) {
                if t + 1 >= n {
                    coin_anchors.push(AnchorInfo {
                        day,
                        t,
                        truncated: t + h >= coin.len(),
                    });
                }
            }
            day = day.succ();
        }
        anchors.push(coin_anchors);
    }
    Ok((
        TrainView { train_len, test_start },
        TestView { test_start, test_end, anchors },
    ))
}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// The panel cannot be used as-is.
    Fatal,
    /// Usable, but worth surfacing (short history, filled gaps, ...).
    Warning,
}

#[derive(Debug, Clone)]
pub struct ValidationIssue {
    pub coin: String,
    pub severity: Severity,
    pub message: String,
}

/// Per-coin summary row for the validation report.
#[derive(Debug, Clone)]
pub struct CoinSummary {
    pub id: String,
    pub days: usize,
    pub start: Day,
    pub end: Day,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub summaries: Vec<CoinSummary>,
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_fatal(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Fatal)
    }

    pub fn warning_count(&self) -> usize {
        self.issues.iter().filter(|i| i.severity == Severity::Warning).count()
    }
}

/// Checks a panel against the engine's preconditions: positive finite prices,
/// non-negative finite exogenous values, consistent exogenous arity, and
/// `min_history` days per series. Violations of the numeric preconditions are
/// fatal; a short series is fatal too (it cannot produce a single window),
/// while an empty exogenous set is merely unusual and passes silently.
pub fn validate_panel(panel: &SeriesPanel, min_history: usize) -> ValidationReport {
    let mut report = ValidationReport::default();
    if panel.coins.is_empty() {
        report.issues.push(ValidationIssue {
            coin: String::new(),
            severity: Severity::Fatal,
            message: DataError::EmptyPanel.to_string(),
        });
        return report;
    }
    for coin in &panel.coins {
        if coin.is_empty() {
            report.issues.push(ValidationIssue {
                coin: coin.id.clone(),
                severity: Severity::Fatal,
                message: "series has no observations".to_string(),
            });
            continue;
        }
        report.summaries.push(CoinSummary {
            id: coin.id.clone(),
            days: coin.len(),
            start: coin.start,
            end: coin.end(),
        });
        if coin.len() < min_history {
            report.issues.push(ValidationIssue {
                coin: coin.id.clone(),
                severity: Severity::Fatal,
                message: DataError::ShortSeries {
                    coin: coin.id.clone(),
                    needed: min_history,
                    got: coin.len(),
                }
                .to_string(),
            });
        }
        if let Some(i) = coin.prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            report.issues.push(ValidationIssue {
                coin: coin.id.clone(),
                severity: Severity::Fatal,
                message: DataError::NonPositivePrice { coin: coin.id.clone(), index: i }
                    .to_string(),
            });
        }
        if coin.exo.len() != panel.exo_names.len() {
            report.issues.push(ValidationIssue {
                coin: coin.id.clone(),
                severity: Severity::Fatal,
                message: DataError::ExoMismatch { coin: coin.id.clone() }.to_string(),
            });
            continue;
        }
        for (var, series) in panel.exo_names.iter().zip(&coin.exo) {
            if series.len() != coin.len() {
                report.issues.push(ValidationIssue {
                    coin: coin.id.clone(),
                    severity: Severity::Fatal,
                    message: DataError::LengthMismatch {
                        coin: coin.id.clone(),
                        expected: coin.len(),
                        got: series.len(),
                    }
                    .to_string(),
                });
                continue;
            }
            if let Some(i) = series.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                report.issues.push(ValidationIssue {
                    coin: coin.id.clone(),
                    severity: Severity::Fatal,
                    message: DataError::BadExogenous {
                        coin: coin.id.clone(),
                        var: var.clone(),
                        index: i,
                    }
                    .to_string(),
                });
            }
        }
    }
    report
}
