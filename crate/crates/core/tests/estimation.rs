use heartfade::{
    aggregate_rates, fit_acceptability, fit_line, load_survey, predict_agreement, threshold_for_agreement,
    AcceptabilityCurve, LineFit, SurveyPoint,
};

const ANCHORS: &str = include_str!("../../../data/survey_anchors_reconstructed.csv");

#[test]
fn anchor_fit_places_one_in_five_near_thirty() {
    let points = load_survey(ANCHORS.as_bytes()).unwrap();
    let fit = fit_acceptability(&points).unwrap();
    let p30 = predict_agreement(&fit.curve, 30.0);
    assert!((p30 - 0.2).abs() < 0.02, "p(30) = {p30}");
    let t = threshold_for_agreement(&fit.curve, 0.2).unwrap();
    assert!((t - 30.0).abs() < 1.0, "threshold {t}");
    // Below the perception threshold hardly anyone asks for repainting.
    assert!(predict_agreement(&fit.curve, 10.0) < 0.02);
}

#[test]
fn fit_recovers_curve_from_sampled_agreement() {
    let truth = AcceptabilityCurve::new(25.0, 4.0).unwrap();
    let points: Vec<SurveyPoint> = (0..=30)
        .map(|i| {
            let x = 2.0 * f64::from(i);
            SurveyPoint {
                delta_e: x,
                frac_agree: predict_agreement(&truth, x),
                n_respondents: 100,
            }
        })
        .collect();
    let fit = fit_acceptability(&points).unwrap();
    assert!((fit.curve.m - 25.0).abs() / 25.0 < 0.01);
    assert!((fit.curve.s - 4.0).abs() / 4.0 < 0.01);
}

/// Slope via raw sums, written out independently of the library.
fn textbook_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[test]
fn noisy_fit_matches_textbook_formula() {
    // Deterministic pseudo-noise.
    let noise = |i: usize| ((i as f64 * 12.9898).sin() * 43_758.545_3).fract() - 0.5;
    let xs: Vec<f64> = (0..40).map(|i| 15.0 * i as f64 + (i % 3) as f64).collect();
    let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| 1.2 + 0.037 * x + noise(i)).collect();
    let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    let fit = fit_line(&pts).unwrap();
    assert!((fit.slope - textbook_slope(&xs, &ys)).abs() < 1e-12);
    assert!(fit.r2 > 0.9 && fit.r2 < 1.0);
}

#[test]
fn seven_heart_aggregate() {
    let slopes = [
        0.0351,
        0.0496,
        0.038,
        0.041,
        0.044,
        0.04363904750535764,
        0.035660952494642364,
    ];
    let fits: Vec<LineFit> = slopes
        .iter()
        .map(|&slope| LineFit {
            slope,
            intercept: 0.0,
            r2: 1.0,
            n: 10,
        })
        .collect();
    let agg = aggregate_rates(&fits).unwrap();
    assert!((agg.mean_k - 0.041).abs() < 1e-12);
    assert!((agg.sd_k - 0.0052).abs() < 1e-12);
    assert!((agg.rel_err.unwrap() - 0.126_829_268).abs() < 1e-8);
}
