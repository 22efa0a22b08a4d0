//! Conditional predictive ability test for comparing two forecasters, and the
//! pairwise outperformance table built on top of it.
//!
//! Given per-day losses of models A and B, form the differential `d_t =
//! loss_A(t) - loss_B(t)` and test whether `E[d_t | instruments]` is zero
//! with the instrument set `h_{t-1} = {1, d_{t-1}}`. With `z_t = h_{t-1} *
//! d_t` (two components) the Wald statistic is
//!
//! ```text
//! W = n * zbar' * pinv(Omega) * zbar,   Omega = (1/n) sum z_t z_t'
//! ```
//!
//! asymptotically chi-square with 2 degrees of freedom under the null, so the
//! p-value has the closed form `exp(-W / 2)`. When the second-moment matrix
//! is singular (e.g. an exactly constant differential), the statistic falls
//! back to the Moore-Penrose pseudo-inverse on the dominant eigenvector. The
//! one-sided decision favors A when the test rejects and the mean
//! differential is negative.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::ForecastError;
use crate::math;

/// Fewest paired observations the test accepts.
pub const MIN_OBSERVATIONS: usize = 30;

/// Relative eigenvalue threshold below which a direction is treated as null
/// space in the pseudo-inverse.
const RANK_TOL: f64 = 1e-12;

/// Outcome of one pairwise test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwResult {
    /// Wald statistic against the chi-square(2) reference.
    pub stat: f64,
    pub p_value: f64,
    /// Mean loss differential `mean(loss_A - loss_B)`; negative means A lost
    /// less on average.
    pub mean_delta: f64,
    /// Number of paired observations entering the statistic (series length
    /// minus one for the lag).
    pub n: usize,
    /// Significance level the decision used.
    pub alpha: f64,
}

impl GwResult {
    pub fn rejects(&self) -> bool {
        self.p_value < self.alpha
    }

    /// One-sided call: the test rejects and A's losses are smaller.
    pub fn favors_first(&self) -> bool {
        self.rejects() && self.mean_delta < 0.0
    }

    /// One-sided call in the other direction.
    pub fn favors_second(&self) -> bool {
        self.rejects() && self.mean_delta > 0.0
    }
}

/// Runs the conditional predictive ability test on two aligned per-day loss
/// series (conventionally absolute percentage errors).
pub fn gw_test(loss_a: &[f64], loss_b: &[f64], alpha: f64) -> Result<GwResult, ForecastError> {
    if loss_a.len() != loss_b.len() {
        return Err(ForecastError::Config(format!(
            "loss series lengths differ: {} vs {}",
            loss_a.len(),
            loss_b.len()
        )));
    }
    if loss_a.len() < MIN_OBSERVATIONS {
        return Err(ForecastError::Config(format!(
            "test needs at least {MIN_OBSERVATIONS} observations, got {}",
            loss_a.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ForecastError::Config(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    let delta: Vec<f64> = loss_a.iter().zip(loss_b).map(|(a, b)| a - b).collect();
    if delta.iter().any(|d| !d.is_finite()) {
        return Err(ForecastError::NonFinite("loss differential"));
    }

    // z_t = (d_t, d_{t-1} * d_t); accumulate the mean and the uncentered
    // second-moment matrix in one pass.
    let n = delta.len() - 1;
    let mut zbar = [0.0f64; 2];
    let (mut o11, mut o12, mut o22) = (0.0f64, 0.0f64, 0.0f64);
    for t in 1..delta.len() {
        let z0 = delta[t];
        let z1 = delta[t - 1] * delta[t];
        zbar[0] += z0;
        zbar[1] += z1;
        o11 += z0 * z0;
        o12 += z0 * z1;
        o22 += z1 * z1;
    }
    let nf = n as f64;
    zbar[0] /= nf;
    zbar[1] /= nf;
    o11 /= nf;
    o12 /= nf;
    o22 /= nf;

    // Eigendecomposition of the symmetric 2x2; pseudo-invert directions whose
    // eigenvalue clears the rank tolerance.
    let tr = o11 + o22;
    let disc = math::sqrt((o11 - o22) * (o11 - o22) + 4.0 * o12 * o12);
    let lam1 = 0.5 * (tr + disc);
    let lam2 = 0.5 * (tr - disc);
    let stat = if lam1 <= 0.0 {
        0.0
    } else {
        // Eigenvector for lam1; the second is its perpendicular.
        let (v1, v2) = if math::abs(o12) > 1e-300 {
            let raw = [o12, lam1 - o11];
            let norm = math::sqrt(raw[0] * raw[0] + raw[1] * raw[1]);
            ([raw[0] / norm, raw[1] / norm], [-(raw[1] / norm), raw[0] / norm])
        } else if o11 >= o22 {
            ([1.0, 0.0], [0.0, 1.0])
        } else {
            ([0.0, 1.0], [1.0, 0.0])
        };
        let tol = lam1 * RANK_TOL;
        let mut s = 0.0;
        for (v, lam) in [(v1, lam1), (v2, lam2)] {
            if lam > tol {
                let proj = zbar[0] * v[0] + zbar[1] * v[1];
                s += proj * proj / lam;
            }
        }
        nf * s
    };

    let mean_delta = delta.iter().sum::<f64>() / delta.len() as f64;
    // Chi-square(2) survival function in closed form.
    let p_value = math::exp(-stat / 2.0);
    Ok(GwResult { stat, p_value, mean_delta, n, alpha })
}

/// Per-model loss series, one vector per coin, aligned across models.
#[derive(Debug, Clone)]
pub struct ModelLosses {
    pub name: String,
    /// `series[c][t]` is the day-`t` loss on coin `c`.
    pub series: Vec<Vec<f64>>,
}

/// Pairwise outperformance table: for each model, the percentage of
/// (opponent, coin) pairs where the one-sided test favors it.
#[derive(Debug, Clone)]
pub struct GwTable {
    pub names: Vec<String>,
    pub percent: Vec<f64>,
    pub alpha: f64,
}

impl GwTable {
    /// Renders the table as CSV: a header of model names and one row of
    /// percentages.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("model");
        for name in &self.names {
            out.push(',');
            out.push_str(name);
        }
        out.push_str("\noutperformed_pct");
        for pct in &self.percent {
            out.push_str(&format!(",{pct:.2}"));
        }
        out.push('\n');
        out
    }
}

/// Builds the outperformance table over all ordered model pairs and coins.
pub fn gw_matrix(models: &[ModelLosses], alpha: f64) -> Result<GwTable, ForecastError> {
    if models.len() < 2 {
        return Err(ForecastError::Config("outperformance table needs at least two models".into()));
    }
    let coins = models[0].series.len();
    if coins == 0 {
        return Err(ForecastError::Config("outperformance table needs at least one coin".into()));
    }
    for m in models {
        if m.series.len() != coins {
            return Err(ForecastError::Config(format!(
                "model '{}' covers {} coins, expected {coins}",
                m.name,
                m.series.len()
            )));
        }
    }
    let mut percent = Vec::with_capacity(models.len());
    for (i, mi) in models.iter().enumerate() {
        let mut wins = 0usize;
        let mut total = 0usize;
        for (j, mj) in models.iter().enumerate() {
            if i == j {
                continue;
            }
            for c in 0..coins {
                let r = gw_test(&mi.series[c], &mj.series[c], alpha)?;
                total += 1;
                if r.favors_first() {
                    wins += 1;
                }
            }
        }
        percent.push(100.0 * wins as f64 / total as f64);
    }
    Ok(GwTable {
        names: models.iter().map(|m| m.name.clone()).collect(),
        percent,
        alpha,
    })
}
