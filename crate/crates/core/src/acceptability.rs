//! Logistic acceptability curve: the fraction of observers who agree a heart
//! needs repainting, as a function of its ΔE.
//!
//! The curve is `p(ΔE) = 1 / (1 + exp(-(ΔE - m) / s))`. Fitting minimises the
//! respondent-weighted squared error with a fixed grid over `(m, s)` followed
//! by Levenberg-Marquardt refinement, so the result is fully deterministic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub const MIDPOINT_RANGE: (f64, f64) = (0.0, 100.0);
pub const SCALE_MAX: f64 = 50.0;
const SCALE_MIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcceptabilityError {
    #[error("need at least 3 survey points, got {0}")]
    TooFewPoints(usize),
    #[error("survey points need at least two distinct delta_e values")]
    NoSpread,
    #[error("all survey points have the same agreement fraction")]
    FlatResponse,
    #[error("survey point {index} is invalid: {reason}")]
    InvalidPoint { index: usize, reason: String },
    #[error("agreement fraction {0} must lie strictly between 0 and 1")]
    FractionOutOfRange(f64),
    #[error("curve scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("survey table row {row}: {reason}")]
    Csv { row: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveyPoint<F> {
    pub delta_e: F,
    pub frac_agree: F,
    pub n_respondents: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptabilityCurve<F> {
    /// ΔE at 50 % agreement.
    pub m: F,
    pub s: F,
}

impl<F: Scalar> AcceptabilityCurve<F> {
    pub fn new(m: F, s: F) -> Result<Self, AcceptabilityError> {
        if !(s > F::zero() && s.is_finite() && m.is_finite()) {
            return Err(AcceptabilityError::BadScale(s.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { m, s })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptabilityFit<F> {
    pub curve: AcceptabilityCurve<F>,
    /// Weighted sum of squared residuals at the optimum.
    pub objective: F,
}

fn logistic<F: Scalar>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

pub fn predict_agreement<F: Scalar>(curve: &AcceptabilityCurve<F>, delta_e: F) -> F {
    logistic((delta_e - curve.m) / curve.s)
}

/// ΔE at which the curve reaches agreement `frac`.
pub fn threshold_for_agreement<F: Scalar>(curve: &AcceptabilityCurve<F>, frac: F) -> Result<F, AcceptabilityError> {
    if !(frac > F::zero() && frac < F::one()) {
        return Err(AcceptabilityError::FractionOutOfRange(
            frac.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(curve.m + curve.s * (frac / (F::one() - frac)).ln())
}

fn objective<F: Scalar>(points: &[SurveyPoint<F>], m: F, s: F) -> F {
    points.iter().fold(F::zero(), |acc, p| {
        let r = logistic((p.delta_e - m) / s) - p.frac_agree;
        acc + F::from(p.n_respondents).expect("u32 fits") * r * r
    })
}

fn validate<F: Scalar>(points: &[SurveyPoint<F>]) -> Result<(), AcceptabilityError> {
    for (index, p) in points.iter().enumerate() {
        let reason = if !(p.delta_e.is_finite() && p.delta_e >= F::zero()) {
            Some("delta_e must be finite and non-negative")
        } else if !(p.frac_agree >= F::zero() && p.frac_agree <= F::one()) {
            Some("frac_agree must lie in [0, 1]")
        } else if p.n_respondents == 0 {
            Some("n_respondents must be positive")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(AcceptabilityError::InvalidPoint {
                index,
                reason: reason.into(),
            });
        }
    }
    if points.len() < 3 {
        return Err(AcceptabilityError::TooFewPoints(points.len()));
    }
    if points.iter().all(|p| p.delta_e == points[0].delta_e) {
        return Err(AcceptabilityError::NoSpread);
    }
    if points.iter().all(|p| p.frac_agree == points[0].frac_agree) {
        return Err(AcceptabilityError::FlatResponse);
    }
    Ok(())
}

pub fn fit_acceptability<F: Scalar>(points: &[SurveyPoint<F>]) -> Result<AcceptabilityFit<F>, AcceptabilityError> {
    validate(points)?;

    // Coarse grid: m linear in steps of 0.5, s geometric from 0.05 to SCALE_MAX.
    let (m_lo, m_hi) = (F::lit(MIDPOINT_RANGE.0), F::lit(MIDPOINT_RANGE.1));
    let s_steps = 160;
    let s_ratio = (SCALE_MAX / 0.05).powf(1.0 / f64::from(s_steps));
    let mut best = (F::infinity(), m_lo, F::lit(SCALE_MAX));
    for i in 0..=200 {
        let m = F::lit(f64::from(i) * 0.5);
        for j in 0..=s_steps {
            let s = F::lit((0.05 * s_ratio.powi(j)).min(SCALE_MAX));
            let obj = objective(points, m, s);
            if obj < best.0 {
                best = (obj, m, s);
            }
        }
    }

    let (mut obj, mut m, mut s) = best;
    let mut lambda = F::lit(1e-3);
    let clamp_m = |v: F| v.max(m_lo).min(m_hi);
    let clamp_s = |v: F| v.max(F::lit(SCALE_MIN)).min(F::lit(SCALE_MAX));
    for _ in 0..500 {
        // Normal equations J^T W J and gradient J^T W r for parameters (m, s).
        let (mut jmm, mut jms, mut jss, mut gm, mut gs) = (F::zero(), F::zero(), F::zero(), F::zero(), F::zero());
        for p in points {
            let w = F::from(p.n_respondents).expect("u32 fits");
            let z = (p.delta_e - m) / s;
            let v = logistic(z);
            let dv = v * (F::one() - v);
            let d_m = -dv / s;
            let d_s = -dv * z / s;
            let r = v - p.frac_agree;
            jmm += w * d_m * d_m;
            jms += w * d_m * d_s;
            jss += w * d_s * d_s;
            gm += w * d_m * r;
            gs += w * d_s * r;
        }

        let mut improved = false;
        while lambda < F::lit(1e12) {
            let a = jmm * (F::one() + lambda);
            let d = jss * (F::one() + lambda);
            let det = a * d - jms * jms;
            if det <= F::zero() || !det.is_finite() {
                lambda *= F::lit(10.0);
                continue;
            }
            let step_m = -(d * gm - jms * gs) / det;
            let step_s = -(a * gs - jms * gm) / det;
            let (m_new, s_new) = (clamp_m(m + step_m), clamp_s(s + step_s));
            let obj_new = objective(points, m_new, s_new);
            if obj_new < obj {
                let converged = (m_new - m).abs() <= F::lit(1e-13) * (F::one() + m.abs())
                    && (s_new - s).abs() <= F::lit(1e-13) * (F::one() + s.abs());
                m = m_new;
                s = s_new;
                obj = obj_new;
                lambda = (lambda / F::lit(10.0)).max(F::lit(1e-12));
                improved = !converged;
                break;
            }
            lambda *= F::lit(10.0);
        }
        if !improved {
            break;
        }
    }

    Ok(AcceptabilityFit {
        curve: AcceptabilityCurve::new(m, s)?,
        objective: obj,
    })
}

/// Parses a survey table with header `delta_e,frac_agree,n_respondents`.
pub fn load_survey(csv_bytes: &[u8]) -> Result<Vec<SurveyPoint<f64>>, AcceptabilityError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(csv_bytes);
    reader
        .deserialize::<SurveyPoint<f64>>()
        .enumerate()
        .map(|(i, rec)| {
            rec.map_err(|e| AcceptabilityError::Csv {
                row: i + 2,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(curve: &AcceptabilityCurve<f64>, xs: impl Iterator<Item = f64>) -> Vec<SurveyPoint<f64>> {
        xs.map(|x| SurveyPoint {
            delta_e: x,
            frac_agree: predict_agreement(curve, x),
            n_respondents: 150,
        })
        .collect()
    }

    #[test]
    fn recovers_generating_curve() {
        let truth = AcceptabilityCurve::new(25.0, 4.0).unwrap();
        let pts = sample(&truth, (1..=9).map(|i| 5.0 * f64::from(i)));
        let fit = fit_acceptability(&pts).unwrap();
        assert!((fit.curve.m - 25.0).abs() / 25.0 < 0.01, "{fit:?}");
        assert!((fit.curve.s - 4.0).abs() / 4.0 < 0.01, "{fit:?}");
        assert!(fit.objective < 1e-12);
    }

    #[test]
    fn dense_refit_is_tight() {
        let truth = AcceptabilityCurve::new(37.3, 6.7).unwrap();
        let pts = sample(&truth, (0..=200).map(|i| 0.5 * f64::from(i)));
        let fit = fit_acceptability(&pts).unwrap();
        assert!((fit.curve.m - 37.3).abs() / 37.3 < 1e-3);
        assert!((fit.curve.s - 6.7).abs() / 6.7 < 1e-3);
    }

    #[test]
    fn single_precision_fit() {
        let truth = AcceptabilityCurve::new(25.0f32, 4.0).unwrap();
        let pts: Vec<SurveyPoint<f32>> = (1..=9)
            .map(|i| {
                let x = 5.0 * i as f32;
                SurveyPoint {
                    delta_e: x,
                    frac_agree: predict_agreement(&truth, x),
                    n_respondents: 10,
                }
            })
            .collect();
        let fit = fit_acceptability(&pts).unwrap();
        assert!((fit.curve.m - 25.0).abs() < 0.25);
        assert!((fit.curve.s - 4.0).abs() < 0.04);
    }

    #[test]
    fn degenerate_inputs() {
        let p = |x: f64, y: f64| SurveyPoint {
            delta_e: x,
            frac_agree: y,
            n_respondents: 1,
        };
        assert_eq!(
            fit_acceptability(&[p(10.0, 0.1), p(30.0, 0.2)]),
            Err(AcceptabilityError::TooFewPoints(2))
        );
        assert_eq!(
            fit_acceptability(&[p(10.0, 0.1), p(10.0, 0.2), p(10.0, 0.3)]),
            Err(AcceptabilityError::NoSpread)
        );
        assert_eq!(
            fit_acceptability(&[p(10.0, 0.2), p(20.0, 0.2), p(30.0, 0.2)]),
            Err(AcceptabilityError::FlatResponse)
        );
        assert!(matches!(
            fit_acceptability(&[p(10.0, 1.2), p(20.0, 0.2), p(30.0, 0.2)]),
            Err(AcceptabilityError::InvalidPoint { index: 0, .. })
        ));
    }

    #[test]
    fn prediction_and_inverse() {
        let c = AcceptabilityCurve::new(25.0, 4.0).unwrap();
        assert_eq!(predict_agreement(&c, 25.0), 0.5);
        assert!(predict_agreement(&c, 25.0 + 20.0 * 4.0) > 0.999);
        assert_eq!(threshold_for_agreement(&c, 0.5).unwrap(), 25.0);
        assert!(threshold_for_agreement(&c, 0.0).is_err());
        assert!(threshold_for_agreement(&c, 1.0).is_err());
        assert!(AcceptabilityCurve::new(1.0, 0.0).is_err());
    }

    #[test]
    fn split_weights_fit_identically() {
        let pts: Vec<SurveyPoint<f64>> = vec![
            SurveyPoint {
                delta_e: 5.0,
                frac_agree: 0.02,
                n_respondents: 40,
            },
            SurveyPoint {
                delta_e: 15.0,
                frac_agree: 0.10,
                n_respondents: 40,
            },
            SurveyPoint {
                delta_e: 25.0,
                frac_agree: 0.35,
                n_respondents: 40,
            },
            SurveyPoint {
                delta_e: 40.0,
                frac_agree: 0.70,
                n_respondents: 40,
            },
        ];
        let mut split = pts.clone();
        split[2].n_respondents = 15;
        split.push(SurveyPoint {
            n_respondents: 25,
            ..pts[2]
        });
        let a = fit_acceptability(&pts).unwrap();
        let b = fit_acceptability(&split).unwrap();
        assert!((a.curve.m - b.curve.m).abs() < 1e-6);
        assert!((a.curve.s - b.curve.s).abs() < 1e-6);
    }

    #[test]
    fn survey_table() {
        let pts = load_survey(b"delta_e,frac_agree,n_respondents\n10,0.01,150\n30,0.2,150\n").unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(
            pts[1],
            SurveyPoint {
                delta_e: 30.0,
                frac_agree: 0.2,
                n_respondents: 150
            }
        );
        assert!(matches!(
            load_survey(b"delta_e,frac_agree,n_respondents\n10,x,150\n"),
            Err(AcceptabilityError::Csv { row: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn inverse_pair(m in 0.0..100.0f64, s in 0.5..50.0f64, x in 0.0..100.0f64) {
            // Past |z| = 20 the upper tail has too few bits left in 1 - p.
            prop_assume!((x - m).abs() / s < 20.0);
            let c = AcceptabilityCurve::new(m, s).unwrap();
            let p = predict_agreement(&c, x);
            let back = threshold_for_agreement(&c, p).unwrap();
            prop_assert!((back - x).abs() < 1e-6 * (1.0 + s));
        }

        #[test]
        fn strictly_increasing(m in 0.0..100.0f64, s in 0.5..50.0f64, x in 0.0..100.0f64, dx in 0.01..5.0f64) {
            prop_assume!((x - m).abs() / s < 20.0 && (x + dx - m).abs() / s < 20.0);
            let c = AcceptabilityCurve::new(m, s).unwrap();
            let (p1, p2) = (predict_agreement(&c, x), predict_agreement(&c, x + dx));
            prop_assert!(p1 > 0.0 && p2 < 1.0);
            prop_assert!(p1 < p2);
        }
    }
}
