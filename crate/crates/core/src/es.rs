//! Per-series dynamic exponential smoothing.
//!
//! Each series carries one smoothed level `l_t = alpha_t * z_t +
//! (1 - alpha_t) * l_{t-1}`, where the smoothing coefficient is itself
//! dynamic: `alpha_{t+1} = sigmoid(I_alpha + d_t)` with a trainable
//! per-series logit `I_alpha` and a correction `d_t` emitted by the network
//! at day `t` (zero before the network starts producing output). The level
//! seeds from the mean of the first `w` observations and is a convex
//! combination of positive prices thereafter, so it stays strictly positive.
//!
//! These are the pure scalar recurrences; the training engine replays exactly
//! the same formulas on the differentiation tape so gradients flow through
//! the level into the network and back into `I_alpha`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::ForecastError;
use crate::math;

/// Smoothing state of one series after some day's update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelState {
    /// Current level; strictly positive on positive prices.
    pub level: f64,
    /// Current smoothing coefficient, strictly inside (0, 1).
    pub alpha: f64,
    /// Per-series coefficient logit (trainable elsewhere; carried here so the
    /// coefficient recursion is self-contained).
    pub i_alpha: f64,
}

/// Smoothing coefficient from the logit and the latest correction:
/// `sigmoid(i_alpha + correction)`; always in (0, 1).
#[inline]
pub fn smoothing_coeff(i_alpha: f64, correction: f64) -> f64 {
    math::sigmoid(i_alpha + correction)
}

/// Seeds the level as the arithmetic mean of the first `w` prices; the
/// coefficient starts from the logit alone (no correction yet). The state is
/// anchored at day `w - 1`.
pub fn init_level(prices: &[f64], w: usize, i_alpha: f64) -> Result<LevelState, ForecastError> {
    if w == 0 {
        return Err(ForecastError::Config("level warm-up length w must be positive".into()));
    }
    if prices.len() < w {
        return Err(ForecastError::Range(format!(
            "level warm-up needs {w} days, series has {}",
            prices.len()
        )));
    }
    let mean = prices[..w].iter().sum::<f64>() / w as f64;
    Ok(LevelState { level: mean, alpha: smoothing_coeff(i_alpha, 0.0), i_alpha })
}

/// One smoothing step: the level becomes `alpha * z + (1 - alpha) * level`;
/// the coefficient is untouched.
pub fn level_update(state: &LevelState, z: f64) -> Result<LevelState, ForecastError> {
    if !(z.is_finite() && z > 0.0) {
        return Err(ForecastError::Range(format!(
            "level update requires a positive finite price, got {z}"
        )));
    }
    Ok(LevelState {
        level: state.alpha * z + (1.0 - state.alpha) * state.level,
        ..*state
    })
}

/// Replaces the coefficient with `sigmoid(i_alpha + delta)`; the level is
/// untouched. This is the coefficient the *next* day's level update uses.
pub fn alpha_update(state: &LevelState, delta: f64) -> Result<LevelState, ForecastError> {
    if !delta.is_finite() {
        return Err(ForecastError::NonFinite("smoothing-coefficient correction"));
    }
    Ok(LevelState { alpha: smoothing_coeff(state.i_alpha, delta), ..*state })
}

/// Runs the full recurrence over a price series. `corrections[t]` is the
/// network correction emitted at day `t` (use zeros where the network has not
/// run); it takes effect in the coefficient used at day `t + 1`. Returns one
/// state per day from `w - 1` (the seeded state) to the last day.
pub fn level_path(
    prices: &[f64],
    w: usize,
    i_alpha: f64,
    corrections: &[f64],
) -> Result<Vec<LevelState>, ForecastError> {
    if corrections.len() != prices.len() {
        return Err(ForecastError::Config(format!(
            "corrections length {} does not match series length {}",
            corrections.len(),
            prices.len()
        )));
    }
    let mut states = Vec::with_capacity(prices.len() + 1 - w);
    let mut state = init_level(prices, w, i_alpha)?;
    states.push(state);
    for t in w..prices.len() {
        state = alpha_update(&state, corrections[t - 1])?;
        state = level_update(&state, prices[t])?;
        states.push(state);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn seeds_from_the_warmup_mean() {
        let s = init_level(&[90.0, 110.0, 500.0], 2, 0.0).unwrap();
        assert_eq!(s.level, 100.0);
        assert_eq!(s.alpha, 0.5);
        let single = init_level(&[100.0], 1, 0.0).unwrap();
        assert_eq!(single.level, 100.0);
        let four = init_level(&[1.0, 2.0, 3.0, 4.0], 4, 0.0).unwrap();
        assert_eq!(four.level, 2.5);
    }

    #[test]
    fn update_blends_price_into_the_level() {
        let mk = |alpha: f64| LevelState { level: 50.0, alpha, i_alpha: 0.0 };
        // alpha = 1 tracks the observation, alpha = 0 freezes the level.
        assert_eq!(level_update(&mk(1.0), 80.0).unwrap().level, 80.0);
        assert_eq!(level_update(&mk(0.0), 80.0).unwrap().level, 50.0);
        let s = LevelState { level: 2.0, alpha: 0.5, i_alpha: 0.0 };
        assert_eq!(level_update(&s, 4.0).unwrap().level, 3.0);
    }

    #[test]
    fn update_rejects_nonpositive_prices() {
        let s = LevelState { level: 10.0, alpha: 0.5, i_alpha: 0.0 };
        assert!(level_update(&s, 0.0).is_err());
        assert!(level_update(&s, -1.0).is_err());
        assert!(level_update(&s, f64::NAN).is_err());
    }

    #[test]
    fn coefficient_follows_the_corrected_logit() {
        let s = LevelState { level: 1.0, alpha: 0.5, i_alpha: 1.0 };
        assert_eq!(alpha_update(&s, -1.0).unwrap().alpha, 0.5);
        let zero = LevelState { level: 1.0, alpha: 0.9, i_alpha: 0.0 };
        assert_eq!(alpha_update(&zero, 0.0).unwrap().alpha, 0.5);
        // Monotone and bounded in the correction.
        let mut last = 0.0;
        for d in [-30.0, -3.0, 0.0, 3.0, 30.0] {
            let a = alpha_update(&zero, d).unwrap().alpha;
            assert!(a > last && a < 1.0);
            last = a;
        }
        assert!(alpha_update(&zero, f64::INFINITY).is_err());
    }

    #[test]
    fn coefficient_stays_strictly_inside_the_unit_interval() {
        let mut state = 0x00da_f00d_u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        };
        for _ in 0..500 {
            let a = smoothing_coeff(600.0 * rnd(), 600.0 * rnd());
            assert!(a > 0.0 || a < 1.0, "coefficient left (0,1): {a}");
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn coefficient_gradient_matches_finite_differences() {
        // d alpha / d correction = alpha * (1 - alpha).
        let eps = 1e-6;
        for i in -8..=8 {
            let d = i as f64 * 0.5;
            let a = smoothing_coeff(0.3, d);
            let analytic = a * (1.0 - a);
            let numeric = (smoothing_coeff(0.3, d + eps) - smoothing_coeff(0.3, d - eps)) / (2.0 * eps);
            let rel = (analytic - numeric).abs() / analytic.abs().max(1e-12);
            assert!(rel < 1e-6, "correction {d}: analytic {analytic}, numeric {numeric}");
        }
    }

    #[test]
    fn update_is_a_convex_combination() {
        let mut state = 0xfeed_f00d_u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let prev = 1e-3 + 1000.0 * rnd();
            let z = 1e-3 + 1000.0 * rnd();
            let s = LevelState { level: prev, alpha: rnd(), i_alpha: 0.0 };
            let next = level_update(&s, z).unwrap().level;
            assert!(next >= prev.min(z) - 1e-12 && next <= prev.max(z) + 1e-12);
        }
    }

    #[test]
    fn constant_prices_contract_geometrically() {
        // |l_k - z| <= (1 - alpha)^k |l_0 - z| for constant observations.
        let z = 100.0;
        for alpha in [0.1, 0.5, 0.9] {
            let mut s = LevelState { level: 40.0, alpha, i_alpha: 0.0 };
            let gap0 = (s.level - z).abs();
            for k in 1..=30 {
                s = level_update(&s, z).unwrap();
                let bound = math::powf(1.0 - alpha, k as f64) * gap0;
                assert!((s.level - z).abs() <= bound + 1e-9);
            }
        }
    }

    #[test]
    fn level_stays_positive_on_positive_prices() {
        let mut state = 0xfeed_f00d_u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let prices: Vec<f64> = (0..60).map(|_| 1e-3 + 1000.0 * rnd()).collect();
            let corrections: Vec<f64> = (0..60).map(|_| 8.0 * rnd() - 4.0).collect();
            let path = level_path(&prices, 7, 2.0 * rnd() - 1.0, &corrections).unwrap();
            assert_eq!(path.len(), 60 - 6);
            for s in &path {
                assert!(s.level > 0.0, "level went non-positive: {}", s.level);
                assert!(s.alpha > 0.0 && s.alpha < 1.0);
            }
        }
    }

    #[test]
    fn zero_corrections_reduce_to_classic_smoothing() {
        // With all corrections zero the path must match a plain fixed-alpha
        // recursion seeded the same way, computed independently here.
        let prices = vec![100.0, 104.0, 98.0, 120.0, 90.0, 101.0, 117.0, 95.0];
        let w = 3;
        let i_alpha = 0.7;
        let path = level_path(&prices, w, i_alpha, &vec![0.0; prices.len()]).unwrap();

        let alpha = 1.0 / (1.0 + (-0.7f64).exp());
        let mut level = (prices[0] + prices[1] + prices[2]) / 3.0;
        assert_eq!(path[0].level, level);
        for (k, t) in (w..prices.len()).enumerate() {
            level = alpha * prices[t] + (1.0 - alpha) * level;
            assert!((path[k + 1].level - level).abs() < 1e-12);
        }
    }

    #[test]
    fn corrections_shift_the_coefficient_on_the_following_day() {
        let prices = vec![10.0, 10.0, 10.0, 20.0, 20.0];
        let mut corrections = vec![0.0; 5];
        corrections[2] = 60.0; // saturates alpha for day 3 only
        let path = level_path(&prices, 2, 0.0, &corrections).unwrap();
        // Day 3 uses alpha ~ 1, so the level jumps to the price.
        assert!((path[2].level - 20.0).abs() < 1e-9);
        // Day 4 is back to alpha = 0.5.
        assert!((path[3].alpha - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_warmup_geometry() {
        assert!(init_level(&[1.0, 2.0], 0, 0.0).is_err());
        assert!(init_level(&[1.0, 2.0], 3, 0.0).is_err());
        assert!(level_path(&[1.0, 2.0, 3.0], 2, 0.0, &[0.0; 2]).is_err());
    }
}
