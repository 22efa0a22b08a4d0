//! Composite quantile (pinball) training loss.
//!
//! The network emits three quantile tracks per horizon step — a central
//! forecast and a lower/upper pair that becomes the prediction interval. Each
//! is scored with the pinball loss `rho(x, xhat) = (x - xhat) * (q - [x <
//! xhat])` at its own quantile, and the bounds are folded in at weight
//! `gamma`:
//!
//! ```text
//! L = mean_k [ rho_k(q_center) + gamma * (rho_k(q_lower) + rho_k(q_upper)) ]
//! ```
//!
//! averaged (not summed) over the horizon so the loss scale does not change
//! with `h`. These are the pure evaluation forms; the tape op
//! [`crate::tape::Tape::pinball_mean`] implements the same formula for
//! training and is cross-checked against this module.

use alloc::format;

use crate::error::ForecastError;
use crate::tape::{NodeId, Tape};

/// Quantile levels and interval weight for the composite loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileSpec {
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    /// Weight of the two interval terms relative to the central one.
    pub gamma: f64,
}

impl Default for QuantileSpec {
    fn default() -> Self {
        QuantileSpec { center: 0.5, lower: 0.05, upper: 0.95, gamma: 0.3 }
    }
}

impl QuantileSpec {
    /// Checks the levels are ordered probabilities and the weight is
    /// non-negative.
    pub fn validate(&self) -> Result<(), ForecastError> {
        let inside = |q: f64| q > 0.0 && q < 1.0;
        if !(inside(self.center) && inside(self.lower) && inside(self.upper)) {
            return Err(ForecastError::Config(format!(
                "quantile levels must lie in (0, 1): center={}, lower={}, upper={}",
                self.center, self.lower, self.upper
            )));
        }
        if !(self.lower < self.center && self.center < self.upper) {
            return Err(ForecastError::Config(format!(
                "quantile levels must be ordered lower < center < upper: {} / {} / {}",
                self.lower, self.center, self.upper
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(ForecastError::Config(format!(
                "interval weight gamma must be finite and non-negative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Pinball loss of one prediction at quantile `q`.
#[inline]
pub fn pinball(target: f64, pred: f64, q: f64) -> f64 {
    let ind = if target < pred { 1.0 } else { 0.0 };
    (target - pred) * (q - ind)
}

/// Composite loss over one forecast window. All slices share length `h`.
pub fn composite_loss(
    targets: &[f64],
    point: &[f64],
    lower: &[f64],
    upper: &[f64],
    spec: &QuantileSpec,
) -> f64 {
    let h = targets.len();
    debug_assert!(h > 0 && point.len() == h && lower.len() == h && upper.len() == h);
    let mut acc = 0.0;
    for k in 0..h {
        acc += pinball(targets[k], point[k], spec.center)
            + spec.gamma
                * (pinball(targets[k], lower[k], spec.lower)
                    + pinball(targets[k], upper[k], spec.upper));
    }
    acc / h as f64
}

/// Builds the same composite loss on a tape so it can be differentiated.
/// `targets`, `point`, `lower`, `upper` must share one length; the returned
/// node is the scalar loss.
pub fn composite_loss_node(
    tape: &mut Tape,
    targets: NodeId,
    point: NodeId,
    lower: NodeId,
    upper: NodeId,
    spec: &QuantileSpec,
) -> NodeId {
    let center = tape.pinball_mean(targets, point, spec.center);
    let lo = tape.pinball_mean(targets, lower, spec.lower);
    let up = tape.pinball_mean(targets, upper, spec.upper);
    let tail = tape.add(lo, up);
    let tail = tape.axpb(tail, spec.gamma, 0.0);
    tape.add(center, tail)
}
