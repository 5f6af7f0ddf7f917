//! Per-heart linear fading rates and their population aggregate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::HeartSeries;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegressionError {
    #[error("need at least 2 points to fit a line, got {0}")]
    TooFewPoints(usize),
    #[error("all points share the same time value")]
    DegenerateTime,
    #[error("window start {start_day} is after end {end_day}")]
    InvalidWindow { start_day: i64, end_day: i64 },
    #[error("no rates to aggregate")]
    NoFits,
}

/// Ordinary least-squares line `y = slope * t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit<F> {
    pub slope: F,
    pub intercept: F,
    pub r2: F,
    pub n: usize,
}

impl<F: Scalar> LineFit<F> {
    pub fn predict(&self, t: F) -> F {
        self.slope * t + self.intercept
    }
}

/// Inclusive range of day indices used for a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start_day: i64,
    pub end_day: i64,
}

impl Window {
    pub fn new(start_day: i64, end_day: i64) -> Result<Self, RegressionError> {
        if start_day > end_day {
            return Err(RegressionError::InvalidWindow { start_day, end_day });
        }
        Ok(Self { start_day, end_day })
    }

    pub fn contains(&self, day: i64) -> bool {
        (self.start_day..=self.end_day).contains(&day)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRate<F> {
    pub mean_k: F,
    /// Sample standard deviation (n - 1 denominator).
    pub sd_k: F,
    /// `sd_k / mean_k`; absent unless `mean_k > 0`.
    pub rel_err: Option<F>,
    pub n_hearts: usize,
}

pub fn fit_line<F: Scalar>(points: &[(F, F)]) -> Result<LineFit<F>, RegressionError> {
    let n = points.len();
    if n < 2 {
        return Err(RegressionError::TooFewPoints(n));
    }
    let nf = F::from_count(n);
    let t_mean = points.iter().fold(F::zero(), |acc, p| acc + p.0) / nf;
    let y_mean = points.iter().fold(F::zero(), |acc, p| acc + p.1) / nf;

    let (mut stt, mut sty, mut syy) = (F::zero(), F::zero(), F::zero());
    for &(t, y) in points {
        let (dt, dy) = (t - t_mean, y - y_mean);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == F::zero() {
        return Err(RegressionError::DegenerateTime);
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;

    let ss_res = points.iter().fold(F::zero(), |acc, &(t, y)| {
        let r = y - (slope * t + intercept);
        acc + r * r
    });
    let r2 = if syy == F::zero() {
        F::one()
    } else {
        (F::one() - ss_res / syy).max(F::zero()).min(F::one())
    };
    Ok(LineFit {
        slope,
        intercept,
        r2,
        n,
    })
}

/// Fits ΔE against day index over the points that fall inside `window`.
pub fn estimate_heart_rate(series: &HeartSeries, window: Window) -> Result<LineFit<f64>, RegressionError> {
    let window = Window::new(window.start_day, window.end_day)?;
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .filter(|p| window.contains(p.day_index))
        .map(|p| (p.day_index as f64, p.delta_e))
        .collect();
    fit_line(&pts)
}

pub fn aggregate_rates<F: Scalar>(fits: &[LineFit<F>]) -> Result<AggregateRate<F>, RegressionError> {
    if fits.is_empty() {
        return Err(RegressionError::NoFits);
    }
    let n = fits.len();
    let mean = fits.iter().fold(F::zero(), |acc, f| acc + f.slope) / F::from_count(n);
    let sd = if n == 1 {
        F::zero()
    } else {
        let ss = fits.iter().fold(F::zero(), |acc, f| {
            let d = f.slope - mean;
            acc + d * d
        });
        (ss / F::from_count(n - 1)).sqrt()
    };
    Ok(AggregateRate {
        mean_k: mean,
        sd_k: sd,
        rel_err: (mean > F::zero()).then(|| sd / mean),
        n_hearts: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::LabColor;
    use crate::ingest::SeriesPoint;
    use proptest::prelude::*;

    fn slope_only(k: f64) -> LineFit<f64> {
        LineFit {
            slope: k,
            intercept: 0.0,
            r2: 1.0,
            n: 2,
        }
    }

    fn series(points: &[(i64, f64)]) -> HeartSeries {
        HeartSeries {
            heart_id: "h".into(),
            baseline: LabColor::new(49.3, 46.3, 20.5),
            start_date: "2021-04-01".parse().unwrap(),
            points: points
                .iter()
                .map(|&(day_index, delta_e)| SeriesPoint { day_index, delta_e })
                .collect(),
        }
    }

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..20).map(|t| (t as f64, 0.041 * t as f64 + 2.0)).collect();
        let f = fit_line(&pts).unwrap();
        assert!((f.slope - 0.041).abs() < 1e-12);
        assert!((f.intercept - 2.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert_eq!(f.n, 20);
    }

    #[test]
    fn two_points_interpolate() {
        let f = fit_line(&[(3.0, 1.0), (7.0, 9.0)]).unwrap();
        assert_eq!((f.slope, f.intercept, f.r2), (2.0, -5.0, 1.0));
    }

    #[test]
    fn flat_data_has_unit_r2() {
        let f = fit_line(&[(0.0, 4.0), (1.0, 4.0), (5.0, 4.0)]).unwrap();
        assert_eq!((f.slope, f.r2), (0.0, 1.0));
    }

    #[test]
    fn fit_errors() {
        assert_eq!(fit_line::<f64>(&[]), Err(RegressionError::TooFewPoints(0)));
        assert_eq!(fit_line(&[(1.0, 2.0)]), Err(RegressionError::TooFewPoints(1)));
        assert_eq!(
            fit_line(&[(1.0, 2.0), (1.0, 3.0)]),
            Err(RegressionError::DegenerateTime)
        );
    }

    #[test]
    fn window_selects_fading_segment() {
        // Flat for 30 days, then rising at 0.0351/day, then repainted back to 0.
        let mut pts: Vec<(i64, f64)> = (0..30).step_by(3).map(|d| (d, 1.0)).collect();
        pts.extend((30..=200).step_by(10).map(|d| (d, 1.0 + 0.0351 * (d - 30) as f64)));
        pts.extend((210..260).step_by(10).map(|d| (d, 0.0)));
        let f = estimate_heart_rate(&series(&pts), Window::new(30, 200).unwrap()).unwrap();
        assert!((f.slope - 0.0351).abs() < 1e-9);

        let exact: Vec<(i64, f64)> = (0..10).map(|d| (d * 7, 0.05 * (d * 7) as f64)).collect();
        let all = estimate_heart_rate(&series(&exact), Window::new(0, 1000).unwrap()).unwrap();
        let direct = fit_line(&exact.iter().map(|&(d, y)| (d as f64, y)).collect::<Vec<_>>()).unwrap();
        assert_eq!(all, direct);

        assert_eq!(
            estimate_heart_rate(&series(&exact), Window::new(0, 6).unwrap()),
            Err(RegressionError::TooFewPoints(1))
        );
        assert!(matches!(
            estimate_heart_rate(
                &series(&exact),
                Window {
                    start_day: 9,
                    end_day: 3
                }
            ),
            Err(RegressionError::InvalidWindow { .. })
        ));
    }

    #[test]
    fn aggregate_examples() {
        let a = aggregate_rates(&[slope_only(0.041)]).unwrap();
        assert_eq!((a.mean_k, a.sd_k, a.rel_err, a.n_hearts), (0.041, 0.0, Some(0.0), 1));

        let a = aggregate_rates(&[slope_only(0.036), slope_only(0.046)]).unwrap();
        assert!((a.mean_k - 0.041).abs() < 1e-15);
        assert!((a.sd_k - 0.007_071_067_811_865_476).abs() < 1e-12);

        assert_eq!(aggregate_rates::<f64>(&[]), Err(RegressionError::NoFits));
        assert_eq!(aggregate_rates(&[slope_only(-0.01)]).unwrap().rel_err, None);
    }

    fn any_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-500.0..500.0f64, -50.0..50.0f64), 3..40)
            .prop_filter("distinct t", |v| v.iter().any(|p| (p.0 - v[0].0).abs() > 1e-3))
    }

    proptest! {
        #[test]
        fn order_invariant(mut pts in any_points()) {
            let a = fit_line(&pts).unwrap();
            pts.reverse();
            pts.rotate_left(1);
            let b = fit_line(&pts).unwrap();
            prop_assert!((a.slope - b.slope).abs() <= 1e-9 * (1.0 + a.slope.abs()));
            prop_assert!((a.intercept - b.intercept).abs() <= 1e-9 * (1.0 + a.intercept.abs()));
        }

        #[test]
        fn time_shift(pts in any_points(), shift in -1000.0..1000.0f64) {
            let a = fit_line(&pts).unwrap();
            let shifted: Vec<_> = pts.iter().map(|&(t, y)| (t + shift, y)).collect();
            let b = fit_line(&shifted).unwrap();
            prop_assert!((a.slope - b.slope).abs() <= 1e-8 * (1.0 + a.slope.abs()));
            let want = a.intercept - a.slope * shift;
            prop_assert!((b.intercept - want).abs() <= 1e-7 * (1.0 + want.abs()));
        }

        #[test]
        fn y_scaling(pts in any_points(), c in 0.1..10.0f64) {
            let a = fit_line(&pts).unwrap();
            let scaled: Vec<_> = pts.iter().map(|&(t, y)| (t, c * y)).collect();
            let b = fit_line(&scaled).unwrap();
            prop_assert!((b.slope - c * a.slope).abs() <= 1e-9 * (1.0 + b.slope.abs()));
            prop_assert!((b.intercept - c * a.intercept).abs() <= 1e-9 * (1.0 + b.intercept.abs()));
            prop_assert!((a.r2 - b.r2).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&a.r2));
        }

        #[test]
        fn identical_fits_have_zero_sd(k in 0.001..0.1f64, n in 1usize..20) {
            let a = aggregate_rates(&vec![slope_only(k); n]).unwrap();
            prop_assert!(a.sd_k.abs() < 1e-15);
        }
    }
}
