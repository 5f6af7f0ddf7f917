//! Replicate driver, Monte Carlo aggregation and fraction sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agents::{advance_day, fraction_above, init_population, repaint_event, AgentState};
use super::config::{ConfigError, SimConfig, StrategyKind, UncertaintyMode, WALL_HEARTS};
use super::rng::{replicate_rng, SimRng};

pub const WEEK: u32 = 7;

/// Stream indices reserved for the two envelope runs.
const ENVELOPE_LOW_STREAM: u64 = u64::MAX - 1;
const ENVELOPE_HIGH_STREAM: u64 = u64::MAX;

/// Default sweep horizon: three years.
pub const SWEEP_HORIZON_DAYS: u32 = 1095;

/// Days at which results are recorded: day 0, every week, and the horizon.
pub fn recorded_days(horizon_days: u32) -> Vec<u32> {
    let mut days: Vec<u32> = (0..=horizon_days).step_by(WEEK as usize).collect();
    if days.last() != Some(&horizon_days) {
        days.push(horizon_days);
    }
    days
}

/// One stochastic history of the population, advanced a day at a time.
///
/// Each day every agent fades by its rate; on every seventh day a repainting
/// round follows the fading.
pub struct Replicate<'a> {
    cfg: &'a SimConfig,
    agents: Vec<AgentState>,
    rng: SimRng,
    day: u32,
    cum_repaints: u64,
    capacity: usize,
}

impl<'a> Replicate<'a> {
    pub fn new(cfg: &'a SimConfig, index: u64) -> Self {
        let mut rng = replicate_rng(cfg.master_seed, index);
        let agents = init_population(cfg, &mut rng);
        Self::from_parts(cfg, agents, rng)
    }

    fn with_fixed_rate(cfg: &'a SimConfig, stream: u64, k: f64) -> Self {
        let mut rng = replicate_rng(cfg.master_seed, stream);
        let mut agents = init_population(
            &SimConfig {
                k_sd: 0.0,
                ..cfg.clone()
            },
            &mut rng,
        );
        agents.iter_mut().for_each(|a| a.k = k);
        Self::from_parts(cfg, agents, rng)
    }

    /// Starts from a caller-supplied population.
    pub fn from_parts(cfg: &'a SimConfig, agents: Vec<AgentState>, rng: SimRng) -> Self {
        Self {
            capacity: cfg.weekly_capacity(),
            cfg,
            agents,
            rng,
            day: 0,
            cum_repaints: 0,
        }
    }

    /// Advances one day; returns the number of agents repainted that day.
    pub fn step(&mut self) -> usize {
        self.day += 1;
        advance_day(&mut self.agents);
        if self.day.is_multiple_of(WEEK) {
            let n = repaint_event(
                &mut self.agents,
                self.cfg.strategy,
                self.capacity,
                self.cfg.perception_threshold,
                &mut self.rng,
            );
            self.cum_repaints += n as u64;
            n
        } else {
            0
        }
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn cum_repaints(&self) -> u64 {
        self.cum_repaints
    }

    pub fn fraction_above(&self) -> f64 {
        fraction_above(&self.agents, self.cfg.perception_threshold)
    }

    /// Runs to the configured horizon, sampling at [`recorded_days`].
    pub fn run(mut self) -> ReplicateTrace {
        let days = recorded_days(self.cfg.horizon_days);
        let mut trace = ReplicateTrace {
            frac_above: Vec::with_capacity(days.len()),
            cum_repaints: Vec::with_capacity(days.len()),
        };
        for &d in &days {
            while self.day < d {
                self.step();
            }
            trace.frac_above.push(self.fraction_above());
            trace.cum_repaints.push(self.cum_repaints);
        }
        trace
    }
}

/// Samples of one replicate at the recorded days.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateTrace {
    pub frac_above: Vec<f64>,
    pub cum_repaints: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: u32,
    pub mean_frac_above: f64,
    pub lo_frac_above: f64,
    pub hi_frac_above: f64,
    /// Mean across replicates.
    pub cum_repaints: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub strategy: StrategyKind,
    pub final_day: u32,
    pub mean_frac_above: f64,
    pub lo_frac_above: f64,
    pub hi_frac_above: f64,
    pub mean_cum_repaints: f64,
    pub agents: usize,
    pub replicates: usize,
    pub weekly_capacity_agents: usize,
    pub hearts_per_agent: f64,
    pub wall_hearts: u64,
    pub wall_hearts_above_threshold: f64,
    pub wall_hearts_repainted: f64,
    pub wall_hearts_repainted_weekly: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub records: Vec<DayRecord>,
    pub summary: SimSummary,
    pub replicates: Vec<ReplicateTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult, ConfigError> {
    run_simulation_with(cfg, Execution::Parallel)
}

pub fn run_simulation_with(cfg: &SimConfig, exec: Execution) -> Result<SimResult, ConfigError> {
    cfg.validate()?;
    let run_one = |i: usize| Replicate::new(cfg, i as u64).run();
    let replicates: Vec<ReplicateTrace> = match exec {
        Execution::Serial => (0..cfg.replicates).map(run_one).collect(),
        Execution::Parallel => (0..cfg.replicates).into_par_iter().map(run_one).collect(),
    };

    let envelope = (cfg.uncertainty_mode == UncertaintyMode::Envelope).then(|| {
        let low_k = (cfg.k_mean - 2.0 * cfg.k_sd).max(cfg.k_mean * super::agents::K_FLOOR_FRACTION);
        let high_k = cfg.k_mean + 2.0 * cfg.k_sd;
        (
            Replicate::with_fixed_rate(cfg, ENVELOPE_LOW_STREAM, low_k).run(),
            Replicate::with_fixed_rate(cfg, ENVELOPE_HIGH_STREAM, high_k).run(),
        )
    });

    let days = recorded_days(cfg.horizon_days);
    let n_rep = replicates.len() as f64;
    let mut column = Vec::with_capacity(replicates.len());
    let records: Vec<DayRecord> = days
        .iter()
        .enumerate()
        .map(|(t, &day)| {
            column.clear();
            column.extend(replicates.iter().map(|r| r.frac_above[t]));
            let mean = column.iter().sum::<f64>() / n_rep;
            let (lo, hi) = match &envelope {
                None => {
                    column.sort_by(f64::total_cmp);
                    (percentile_sorted(&column, 0.025), percentile_sorted(&column, 0.975))
                }
                Some((low, high)) => (low.frac_above[t], high.frac_above[t]),
            };
            let cum = replicates.iter().map(|r| r.cum_repaints[t] as f64).sum::<f64>() / n_rep;
            DayRecord {
                day,
                mean_frac_above: mean,
                // A single envelope run can cross the replicate mean.
                lo_frac_above: lo.min(mean),
                hi_frac_above: hi.max(mean),
                cum_repaints: cum,
            }
        })
        .collect();

    let last = records.last().expect("at least day 0 is recorded").clone();
    let hearts_per_agent = cfg.hearts_per_agent();
    let summary = SimSummary {
        strategy: cfg.strategy,
        final_day: last.day,
        mean_frac_above: last.mean_frac_above,
        lo_frac_above: last.lo_frac_above,
        hi_frac_above: last.hi_frac_above,
        mean_cum_repaints: last.cum_repaints,
        agents: cfg.n_agents,
        replicates: cfg.replicates,
        weekly_capacity_agents: cfg.weekly_capacity(),
        hearts_per_agent,
        wall_hearts: WALL_HEARTS,
        wall_hearts_above_threshold: last.mean_frac_above * WALL_HEARTS as f64,
        wall_hearts_repainted: last.cum_repaints * hearts_per_agent,
        wall_hearts_repainted_weekly: cfg.weekly_capacity() as f64 * hearts_per_agent,
    };
    Ok(SimResult {
        records,
        summary,
        replicates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub repaint_fraction_weekly: f64,
    pub strategy: StrategyKind,
    pub frac_needing_repaint_at_horizon: f64,
    pub total_repaints_at_horizon: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SweepError {
    #[error("sweep fraction {0} is outside [0, 1]")]
    Fraction(f64),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Runs every active strategy at every weekly fraction and reports the
/// horizon-day outcome of each.
pub fn sweep_fractions(
    cfg_base: &SimConfig,
    fractions: &[f64],
    horizon_days: u32,
) -> Result<Vec<SweepRow>, SweepError> {
    if let Some(&f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(SweepError::Fraction(f));
    }
    let mut rows = Vec::with_capacity(fractions.len() * StrategyKind::ACTIVE.len());
    for &f in fractions {
        for strategy in StrategyKind::ACTIVE {
            let cfg = SimConfig {
                repaint_fraction_weekly: f,
                strategy,
                horizon_days,
                ..cfg_base.clone()
            };
            let res = run_simulation(&cfg)?;
            rows.push(SweepRow {
                repaint_fraction_weekly: f,
                strategy,
                frac_needing_repaint_at_horizon: res.summary.mean_frac_above,
                total_repaints_at_horizon: res.summary.mean_cum_repaints,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(strategy: StrategyKind, f: f64) -> SimConfig {
        SimConfig {
            n_agents: 200,
            horizon_days: 400,
            replicates: 8,
            strategy,
            repaint_fraction_weekly: f,
            ..SimConfig::default()
        }
    }

    #[test]
    fn recorded_day_grid() {
        assert_eq!(recorded_days(14), vec![0, 7, 14]);
        assert_eq!(recorded_days(10), vec![0, 7, 10]);
        assert_eq!(recorded_days(1), vec![0, 1]);
        assert_eq!(*recorded_days(1095).last().unwrap(), 1095);
    }

    #[test]
    fn percentiles_interpolate() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_sorted(&v, 0.0), 0.0);
        assert_eq!(percentile_sorted(&v, 0.5), 2.0);
        assert_eq!(percentile_sorted(&v, 0.025), 0.1);
        assert_eq!(percentile_sorted(&[3.0], 0.975), 3.0);
    }

    #[test]
    fn baseline_fraction_is_monotone() {
        let res = run_simulation(&small(StrategyKind::Baseline, 0.0)).unwrap();
        for r in &res.replicates {
            assert!(r.frac_above.windows(2).all(|w| w[0] <= w[1]));
            assert!(r.cum_repaints.iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn bands_bracket_mean() {
        for mode in [UncertaintyMode::MonteCarlo, UncertaintyMode::Envelope] {
            let cfg = SimConfig {
                uncertainty_mode: mode,
                ..small(StrategyKind::ThresholdC, 0.03)
            };
            let res = run_simulation(&cfg).unwrap();
            for rec in &res.records {
                assert!(rec.lo_frac_above <= rec.mean_frac_above);
                assert!(rec.mean_frac_above <= rec.hi_frac_above);
                assert!((0.0..=1.0).contains(&rec.lo_frac_above));
                assert!((0.0..=1.0).contains(&rec.hi_frac_above));
            }
            assert!(res.records.windows(2).all(|w| w[0].cum_repaints <= w[1].cum_repaints));
        }
    }

    #[test]
    fn envelope_brackets_baseline() {
        let cfg = SimConfig {
            uncertainty_mode: UncertaintyMode::Envelope,
            ..small(StrategyKind::Baseline, 0.0)
        };
        let res = run_simulation(&cfg).unwrap();
        // Around day 245 the slow envelope is still below threshold while the fast one is above.
        let rec = res.records.iter().find(|r| r.day == 245).unwrap();
        assert!(rec.lo_frac_above < rec.mean_frac_above);
        assert!(rec.hi_frac_above > rec.mean_frac_above);
    }

    #[test]
    fn repaints_reset_to_zero() {
        let cfg = small(StrategyKind::GreedyB, 0.1);
        let mut rep = Replicate::new(&cfg, 0);
        for _ in 0..70 {
            let before: Vec<u32> = rep.agents().iter().map(|a| a.repaint_count).collect();
            rep.step();
            for (a, &b) in rep.agents().iter().zip(&before) {
                assert!(a.delta_e >= 0.0);
                if a.repaint_count > b {
                    assert_eq!(a.delta_e, 0.0);
                }
            }
        }
        assert_eq!(rep.cum_repaints(), 20 * 10);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SimConfig {
            replicates: 0,
            ..SimConfig::default()
        };
        assert!(run_simulation(&cfg).is_err());
        assert_eq!(
            sweep_fractions(&SimConfig::default(), &[0.1, 1.2], 100),
            Err(SweepError::Fraction(1.2))
        );
    }

    #[test]
    fn sweep_zero_fraction_matches_baseline() {
        let base = small(StrategyKind::Baseline, 0.0);
        let rows = sweep_fractions(&base, &[0.0], 300).unwrap();
        let baseline = run_simulation(&SimConfig {
            horizon_days: 300,
            ..base.clone()
        })
        .unwrap();
        assert_eq!(rows.len(), 3);
        for row in rows {
            assert_eq!(row.total_repaints_at_horizon, 0.0);
            assert_eq!(row.frac_needing_repaint_at_horizon, baseline.summary.mean_frac_above);
        }
    }
}
