//! Reference baselines the backtest harness compares the engine against.
//!
//! The naive model forecasts day `i` with the observed price of day `i - h`,
//! so its h-step path out of an anchor is simply the last `h` observations.
//! The smoothing baseline runs a fixed-coefficient level recursion over the
//! history and repeats the final level flat across the horizon.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::ForecastError;

/// Naive h-step forecast from a 0-based anchor index: the value for day
/// `anchor + k` is `z[anchor + k - h]`, `k = 1..=h`. Reads only observed
/// history (indices at or before the anchor).
pub fn naive_forecast(z: &[f64], anchor: usize, h: usize) -> Result<Vec<f64>, ForecastError> {
    if h == 0 {
        return Err(ForecastError::Config("horizon must be positive".into()));
    }
    if anchor >= z.len() {
        return Err(ForecastError::Range(format!(
            "anchor {anchor} outside a {}-day series",
            z.len()
        )));
    }
    if anchor + 1 < h {
        return Err(ForecastError::Range(format!(
            "naive forecast at horizon {h} needs {h} observed days, anchor {anchor} has {}",
            anchor + 1
        )));
    }
    Ok((1..=h).map(|k| z[anchor + k - h]).collect())
}

/// Flat forecast from a fixed-coefficient smoothing recursion: the level
/// seeds at the first observation, runs through the anchor, and the final
/// value repeats across the horizon. `alpha = 1` degenerates to the last
/// observation.
pub fn simple_es_forecast(
    z: &[f64],
    anchor: usize,
    h: usize,
    alpha: f64,
) -> Result<Vec<f64>, ForecastError> {
    if h == 0 {
        return Err(ForecastError::Config("horizon must be positive".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ForecastError::Config(format!(
            "smoothing coefficient must lie in (0, 1], got {alpha}"
        )));
    }
    if anchor >= z.len() {
        return Err(ForecastError::Range(format!(
            "anchor {anchor} outside a {}-day series",
            z.len()
        )));
    }
    let mut level = z[0];
    for zt in &z[1..=anchor] {
        level = alpha * zt + (1.0 - alpha) * level;
    }
    Ok(vec![level; h])
}
