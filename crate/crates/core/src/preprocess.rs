//! Window normalization around the smoothed level, exogenous scaling, and
//! input-pattern assembly.
//!
//! Prices enter the network as log ratios against the current level,
//! `ln(z / l)`, which removes scale and lets one set of weights serve every
//! series. Targets are the plain ratios `z / l` (the trainer takes their log
//! so the quantile heads learn in the same space the inputs use), and
//! forecasts map back to prices as `exp(xhat) * l`. Exogenous variables are
//! squashed with `log10(p / pbar + 1)`, where `pbar` is that variable's mean
//! over the training period only — test-period values must never leak into
//! the scaling.

use alloc::vec::Vec;

use crate::math;

/// Log-ratio normalization of an input window: `ln(z / level)` per element.
pub fn normalize_input(window: &[f64], level: f64) -> Vec<f64> {
    window.iter().map(|z| math::ln(z / level)).collect()
}

/// Ratio normalization of an output window: `z / level` per element.
pub fn normalize_output(window: &[f64], level: f64) -> Vec<f64> {
    window.iter().map(|z| z / level).collect()
}

/// Maps a normalized network output back to prices: `exp(x) * level`.
pub fn denormalize(outputs: &[f64], level: f64) -> Vec<f64> {
    outputs.iter().map(|x| math::exp(*x) * level).collect()
}

/// Mean of one exogenous variable over the first `train_len` days. This is
/// the only statistic the exogenous scaling uses, and it deliberately ignores
/// everything at or past `train_len`.
pub fn exo_mean(values: &[f64], train_len: usize) -> f64 {
    let span = &values[..train_len.min(values.len())];
    if span.is_empty() {
        return 0.0;
    }
    span.iter().sum::<f64>() / span.len() as f64
}

/// Squashing transform for non-negative exogenous values:
/// `log10(p / pbar + 1)`. Zero maps to zero and `p == pbar` maps to
/// `log10(2)`. A degenerate all-zero training mean falls back to `pbar = 1`
/// so the transform stays defined.
pub fn normalize_exo(values: &[f64], pbar: f64) -> Vec<f64> {
    let scale = if pbar > 0.0 { pbar } else { 1.0 };
    values.iter().map(|p| math::log10(p / scale + 1.0)).collect()
}

/// Concatenates one day's input pattern: normalized price window, embedded
/// (and, on the main track, modulated) exogenous block, `log10(level)`, and —
/// main track only — the modulated context vector.
pub fn assemble_input(
    x_in: &[f64],
    exo_block: &[f64],
    level: f64,
    context: Option<&[f64]>,
) -> Vec<f64> {
    let extra = context.map_or(0, <[f64]>::len);
    let mut out = Vec::with_capacity(x_in.len() + exo_block.len() + 1 + extra);
    out.extend_from_slice(x_in);
    out.extend_from_slice(exo_block);
    out.push(math::log10(level));
    if let Some(ctx) = context {
        out.extend_from_slice(ctx);
    }
    out
}
