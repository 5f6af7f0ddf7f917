//! Fading of painted memorial hearts: colour measurement, fading-rate
//! estimation, public acceptability of fading, and an agent-based model of
//! repainting strategies.
//!
//! The numeric core is generic over the floating-point type (see
//! [`Scalar`]); the aliases at the crate root fix it to `f64`.

pub mod acceptability;
pub mod color;
pub mod ingest;
pub mod ppm;
pub mod regression;
pub mod scalar;
pub mod sim;

pub use scalar::Scalar;

pub use acceptability::{fit_acceptability, load_survey, predict_agreement, threshold_for_agreement};
pub use color::{apply_calibration, delta_e, derive_calibration, lab_to_srgb, srgb_to_lab, SrgbColor};
pub use ingest::{build_series, load_observations, mean_lab_of_region, HeartSeries, Observation, Region, SeriesPoint};
pub use ppm::{encode_p3, encode_p6, parse_ppm, PixelGrid};
pub use regression::{aggregate_rates, estimate_heart_rate, fit_line, Window};

pub type LabColor = color::LabColor<f64>;
pub type LabOffset = color::LabOffset<f64>;
pub type LineFit = regression::LineFit<f64>;
pub type AggregateRate = regression::AggregateRate<f64>;
pub type SurveyPoint = acceptability::SurveyPoint<f64>;
pub type AcceptabilityCurve = acceptability::AcceptabilityCurve<f64>;
pub type AcceptabilityFit = acceptability::AcceptabilityFit<f64>;

/// Fresh-paint reference colour measured on site.
pub const FRESH_PAINT: LabColor = color::LabColor {
    l: 49.3,
    a: 46.3,
    b: 20.5,
};
