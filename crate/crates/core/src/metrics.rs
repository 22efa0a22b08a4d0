//! Point and interval accuracy metrics for price forecasts.
//!
//! Percentage errors are taken against the actual price: `PE = 100 * (a - f)
//! / a`. MAPE averages their magnitudes, MPE keeps the sign (so it reads as a
//! bias: positive means the forecasts sat below the actuals), StdPE is the
//! population standard deviation of the signed errors, and RMSE works on raw
//! price differences. Interval quality is tracked as empirical coverage of
//! `[lower, upper]` and the rate of crossed bounds (`lower > upper`).

use alloc::vec::Vec;

use crate::math;

/// One scored forecast step: the realized price and the model's central and
/// interval forecasts for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub actual: f64,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Accuracy summary over a set of forecast steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub mape: f64,
    pub rmse: f64,
    /// Signed mean percentage error (bias).
    pub mpe: f64,
    /// Population standard deviation of the signed percentage errors.
    pub stdpe: f64,
    /// Share of steps whose actual fell inside `[lower, upper]`, in percent.
    pub coverage: f64,
    /// Share of steps with `lower > upper`, in percent.
    pub crossing_rate: f64,
    /// Number of forecast steps scored.
    pub count: usize,
}

/// Absolute percentage error of one forecast, in percent.
#[inline]
pub fn ape(actual: f64, forecast: f64) -> f64 {
    math::abs(100.0 * (actual - forecast) / actual)
}

/// Computes the metric row over the given steps; `None` when empty.
pub fn compute_metrics(points: &[EvalPoint]) -> Option<MetricsRow> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let pes: Vec<f64> = points.iter().map(|p| 100.0 * (p.actual - p.point) / p.actual).collect();
    let mape = pes.iter().map(|e| math::abs(*e)).sum::<f64>() / n;
    let mpe = pes.iter().sum::<f64>() / n;
    let var = pes.iter().map(|e| (e - mpe) * (e - mpe)).sum::<f64>() / n;
    let stdpe = math::sqrt(var);
    let rmse = math::sqrt(
        points.iter().map(|p| (p.actual - p.point) * (p.actual - p.point)).sum::<f64>() / n,
    );
    let covered = points
        .iter()
        .filter(|p| p.lower <= p.actual && p.actual <= p.upper)
        .count() as f64;
    let crossed = points.iter().filter(|p| p.lower > p.upper).count() as f64;
    Some(MetricsRow {
        mape,
        rmse,
        mpe,
        stdpe,
        coverage: 100.0 * covered / n,
        crossing_rate: 100.0 * crossed / n,
        count: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pt(actual: f64, point: f64) -> EvalPoint {
        EvalPoint { actual, point, lower: point - 1.0, upper: point + 1.0 }
    }

    #[test]
    fn worked_example_symmetric_misses() {
        // Actuals 100 with forecasts 110 and 90: MAPE 10, RMSE 10, the signed
        // errors -10 and +10 cancel to MPE 0, and StdPE is 10.
        let rows = vec![pt(100.0, 110.0), pt(100.0, 90.0)];
        let m = compute_metrics(&rows).unwrap();
        assert!((m.mape - 10.0).abs() < 1e-12);
        assert!((m.rmse - 10.0).abs() < 1e-12);
        assert!(m.mpe.abs() < 1e-12);
        assert!((m.stdpe - 10.0).abs() < 1e-12);
        assert_eq!(m.count, 2);
    }

    #[test]
    fn mpe_keeps_the_sign_of_the_bias() {
        // Forecasts below the actuals => positive MPE.
        let rows = vec![pt(100.0, 95.0), pt(200.0, 180.0)];
        let m = compute_metrics(&rows).unwrap();
        assert!((m.mpe - 7.5).abs() < 1e-12);
        assert!((m.mape - 7.5).abs() < 1e-12);
    }

    #[test]
    fn stdpe_is_the_population_deviation() {
        // PEs are -10 and +10; the population std is 10 (the sample estimate
        // would be ~14.14).
        let rows = vec![pt(100.0, 110.0), pt(100.0, 90.0)];
        let m = compute_metrics(&rows).unwrap();
        assert!((m.stdpe - 10.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_counts_only_enclosed_actuals() {
        let rows = vec![
            EvalPoint { actual: 100.0, point: 100.0, lower: 90.0, upper: 110.0 },
            EvalPoint { actual: 110.0, point: 100.0, lower: 95.0, upper: 105.0 },
            EvalPoint { actual: 95.0, point: 100.0, lower: 95.0, upper: 105.0 },
        ];
        let m = compute_metrics(&rows).unwrap();
        // Boundary contact counts as covered.
        assert!((m.coverage - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(m.crossing_rate, 0.0);
    }

    #[test]
    fn crossed_bounds_are_reported_not_hidden() {
        let rows = vec![
            EvalPoint { actual: 100.0, point: 100.0, lower: 105.0, upper: 95.0 },
            EvalPoint { actual: 100.0, point: 100.0, lower: 95.0, upper: 105.0 },
        ];
        let m = compute_metrics(&rows).unwrap();
        assert!((m.crossing_rate - 50.0).abs() < 1e-12);
    }

    #[test]
    fn empty_input_yields_no_row() {
        assert_eq!(compute_metrics(&[]), None);
    }

    #[test]
    fn ape_is_symmetric_in_magnitude_only() {
        assert!((ape(100.0, 90.0) - 10.0).abs() < 1e-12);
        assert!((ape(100.0, 110.0) - 10.0).abs() < 1e-12);
        // Denominator is the actual, so the same absolute miss on a smaller
        // actual weighs more.
        assert!(ape(50.0, 60.0) > ape(100.0, 110.0));
    }

    #[test]
    fn magnitude_mean_dominates_the_signed_mean() {
        // MAPE >= |MPE| by the triangle inequality, for any inputs.
        let mut state = 0x2468_ace0_u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let rows: Vec<EvalPoint> = (0..30)
                .map(|_| {
                    let a = 1.0 + 500.0 * rnd();
                    pt(a, a * (0.5 + rnd()))
                })
                .collect();
            let m = compute_metrics(&rows).unwrap();
            assert!(m.mape >= m.mpe.abs() - 1e-12);
        }
    }

    #[test]
    fn perfect_forecasts_zero_every_error_metric() {
        let rows: Vec<EvalPoint> = (1..=20)
            .map(|i| {
                let a = 10.0 * i as f64;
                EvalPoint { actual: a, point: a, lower: a - 1.0, upper: a + 1.0 }
            })
            .collect();
        let m = compute_metrics(&rows).unwrap();
        assert_eq!(m.mape, 0.0);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mpe, 0.0);
        assert_eq!(m.stdpe, 0.0);
        assert_eq!(m.coverage, 100.0);
    }
}
