//! Agent-based lifetime simulation of the heart population.
//!
//! Each agent fades linearly at its own rate. Weekly repainting rounds reset
//! selected agents to ΔE 0 according to a [`StrategyKind`]. Independent
//! replicates give Monte Carlo bands on the fraction of agents above the
//! perception threshold.

mod agents;
mod config;
pub mod rng;
mod run;

pub use agents::{advance_day, fraction_above, init_population, repaint_event, AgentState, K_FLOOR_FRACTION};
pub use config::{
    ConfigError, FieldError, Preset, SimConfig, StrategyKind, UncertaintyMode, DAYS_PER_YEAR, WALL_HEARTS,
};
pub use run::{
    percentile_sorted, recorded_days, run_simulation, run_simulation_with, sweep_fractions, DayRecord, Execution,
    Replicate, ReplicateTrace, SimResult, SimSummary, SweepError, SweepRow, SWEEP_HORIZON_DAYS, WEEK,
};

/// Paint II configuration: 0.5 ΔE/year, 12 % relative spread, 6000 days.
pub fn paint2_config() -> SimConfig {
    SimConfig::paint2()
}
