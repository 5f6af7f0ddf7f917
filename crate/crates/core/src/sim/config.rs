use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hearts on the wall; each agent stands for `WALL_HEARTS / n_agents` of them.
pub const WALL_HEARTS: u64 = 240_000;

pub const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// No repainting.
    Baseline,
    /// Uniform random choice regardless of condition.
    RandomA,
    /// The most faded agents first.
    GreedyB,
    /// Uniform random choice among agents above the perception threshold.
    ThresholdC,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Baseline,
        StrategyKind::RandomA,
        StrategyKind::GreedyB,
        StrategyKind::ThresholdC,
    ];

    pub const ACTIVE: [StrategyKind; 3] = [StrategyKind::RandomA, StrategyKind::GreedyB, StrategyKind::ThresholdC];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Baseline => "baseline",
            StrategyKind::RandomA => "random_a",
            StrategyKind::GreedyB => "greedy_b",
            StrategyKind::ThresholdC => "threshold_c",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyMode {
    /// 2.5th / 97.5th percentiles across replicates.
    MonteCarlo,
    /// Extra runs with every rate pinned at `k_mean ± 2 k_sd`.
    Envelope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_agents: usize,
    pub horizon_days: u32,
    /// ΔE per day.
    pub k_mean: f64,
    /// ΔE per day.
    pub k_sd: f64,
    pub initial_spread_max: f64,
    pub perception_threshold: f64,
    pub strategy: StrategyKind,
    pub repaint_fraction_weekly: f64,
    pub replicates: usize,
    pub master_seed: u64,
    pub uncertainty_mode: UncertaintyMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_agents: 1000,
            horizon_days: 6000,
            k_mean: 0.041,
            k_sd: 0.0052,
            initial_spread_max: 5.0,
            perception_threshold: 10.0,
            strategy: StrategyKind::Baseline,
            repaint_fraction_weekly: 0.0,
            replicates: 100,
            master_seed: 42,
            uncertainty_mode: UncertaintyMode::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid simulation config: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct ConfigError(pub Vec<FieldError>);

impl SimConfig {
    /// Paint I: Posca markers, 0.041 ± 0.0052 ΔE/day.
    pub fn paint1() -> Self {
        Self::default()
    }

    /// Paint II: masonry paint at 0.5 ΔE/year with the same 12 % relative
    /// uncertainty as Paint I.
    pub fn paint2() -> Self {
        let k_mean = 0.5 / DAYS_PER_YEAR;
        Self {
            k_mean,
            k_sd: 0.12 * k_mean,
            horizon_days: 6000,
            ..Self::default()
        }
    }

    /// Agents repainted at each weekly event.
    pub fn weekly_capacity(&self) -> usize {
        (self.repaint_fraction_weekly * self.n_agents as f64).round() as usize
    }

    pub fn hearts_per_agent(&self) -> f64 {
        WALL_HEARTS as f64 / self.n_agents as f64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, field: &'static str, message: &str| {
            if !ok {
                errs.push(FieldError {
                    field,
                    message: message.to_string(),
                });
            }
        };
        check(self.n_agents >= 1, "n_agents", "must be at least 1");
        check(self.horizon_days >= 1, "horizon_days", "must be at least 1");
        check(
            self.k_mean.is_finite() && self.k_mean > 0.0,
            "k_mean",
            "must be positive and finite",
        );
        check(
            self.k_sd.is_finite() && self.k_sd >= 0.0,
            "k_sd",
            "must be non-negative and finite",
        );
        check(
            self.initial_spread_max.is_finite() && self.initial_spread_max >= 0.0,
            "initial_spread_max",
            "must be non-negative and finite",
        );
        check(
            self.perception_threshold.is_finite() && self.perception_threshold >= 0.0,
            "perception_threshold",
            "must be non-negative and finite",
        );
        check(
            (0.0..=1.0).contains(&self.repaint_fraction_weekly),
            "repaint_fraction_weekly",
            "must lie in [0, 1]",
        );
        check(self.replicates >= 1, "replicates", "must be at least 1");
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs))
        }
    }
}

/// One-command reproductions of the headline scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Paint I with no repainting.
    Paint1Baseline,
    /// Paint I, 5 % weekly, three-year horizon, all strategies.
    Paint1FivePercent,
    /// Paint II, 1 % weekly, 6000 days, all strategies.
    Paint2OnePercent,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::Paint1Baseline,
        Preset::Paint1FivePercent,
        Preset::Paint2OnePercent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Paint1Baseline => "paint1-baseline",
            Preset::Paint1FivePercent => "paint1-5pct",
            Preset::Paint2OnePercent => "paint2-1pct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn config(self) -> SimConfig {
        match self {
            Preset::Paint1Baseline => SimConfig {
                horizon_days: 730,
                ..SimConfig::paint1()
            },
            Preset::Paint1FivePercent => SimConfig {
                horizon_days: 1095,
                repaint_fraction_weekly: 0.05,
                strategy: StrategyKind::RandomA,
                ..SimConfig::paint1()
            },
            Preset::Paint2OnePercent => SimConfig {
                repaint_fraction_weekly: 0.01,
                strategy: StrategyKind::ThresholdC,
                ..SimConfig::paint2()
            },
        }
    }

    /// Strategies a `simulate` run of this preset covers.
    pub fn strategies(self) -> Vec<StrategyKind> {
        match self {
            Preset::Paint1Baseline => vec![StrategyKind::Baseline],
            _ => StrategyKind::ALL.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paint2_rates() {
        let c = SimConfig::paint2();
        assert!((c.k_mean - 0.001_369).abs() < 5e-7);
        assert!((c.k_sd / c.k_mean - 0.12).abs() < 1e-12);
        let per_year = c.k_mean * DAYS_PER_YEAR;
        assert!((0.17..=0.75).contains(&per_year));
        assert_eq!(c.horizon_days, 6000);
        assert_eq!(c.n_agents, 1000);
        assert_eq!(c.perception_threshold, 10.0);
    }

    #[test]
    fn field_level_errors() {
        let c = SimConfig {
            n_agents: 0,
            repaint_fraction_weekly: 1.5,
            k_mean: -1.0,
            ..SimConfig::default()
        };
        let err = c.validate().unwrap_err();
        let fields: Vec<_> = err.0.iter().map(|e| e.field).collect();
        assert_eq!(fields, vec!["n_agents", "k_mean", "repaint_fraction_weekly"]);
        assert!(err.to_string().contains("repaint_fraction_weekly: must lie in [0, 1]"));
        assert!(SimConfig::default().validate().is_ok());
    }

    #[test]
    fn capacity_rounds() {
        let c = SimConfig {
            repaint_fraction_weekly: 0.0125,
            ..SimConfig::default()
        };
        assert_eq!(c.weekly_capacity(), 13);
        assert_eq!(SimConfig::default().hearts_per_agent(), 240.0);
    }

    #[test]
    fn names_roundtrip() {
        for k in StrategyKind::ALL {
            assert_eq!(StrategyKind::parse(k.name()), Some(k));
        }
        for p in Preset::ALL {
            assert_eq!(Preset::parse(p.name()), Some(p));
            assert!(p.config().validate().is_ok());
        }
    }
}
