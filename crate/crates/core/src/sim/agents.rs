//! Agent state and the per-day / per-week update rules.

use std::cmp::Ordering;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{SimConfig, StrategyKind};

/// A group of hearts sharing one fading trajectory `ΔE = k t + C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub delta_e: f64,
    /// ΔE per day.
    pub k: f64,
    pub repaint_count: u32,
}

/// Rates below this fraction of `k_mean` are redrawn.
pub const K_FLOOR_FRACTION: f64 = 0.01;

/// Draws a fresh population. Rates are normal, truncated at
/// `k_mean * K_FLOOR_FRACTION` by rejection; starting ΔE is uniform on
/// `[0, initial_spread_max)`.
pub fn init_population<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Vec<AgentState> {
    let floor = cfg.k_mean * K_FLOOR_FRACTION;
    let normal = (cfg.k_sd > 0.0).then(|| Normal::new(cfg.k_mean, cfg.k_sd).expect("validated k_sd"));
    (0..cfg.n_agents)
        .map(|_| {
            let k = match &normal {
                Some(n) => loop {
                    let k = n.sample(rng);
                    if k >= floor {
                        break k;
                    }
                },
                None => cfg.k_mean,
            };
            let delta_e = rng.random::<f64>() * cfg.initial_spread_max;
            AgentState {
                delta_e,
                k,
                repaint_count: 0,
            }
        })
        .collect()
}

/// One day of linear fading.
pub fn advance_day(agents: &mut [AgentState]) {
    for a in agents {
        a.delta_e += a.k;
    }
}

fn reset(a: &mut AgentState) {
    a.delta_e = 0.0;
    a.repaint_count += 1;
}

/// Applies one weekly repainting round and returns how many agents were reset.
pub fn repaint_event<R: Rng + ?Sized>(
    agents: &mut [AgentState],
    strategy: StrategyKind,
    capacity: usize,
    threshold: f64,
    rng: &mut R,
) -> usize {
    let n = agents.len();
    match strategy {
        StrategyKind::Baseline => 0,
        StrategyKind::RandomA => {
            let amount = capacity.min(n);
            for i in index::sample(rng, n, amount) {
                reset(&mut agents[i]);
            }
            amount
        }
        StrategyKind::GreedyB => {
            let amount = capacity.min(n);
            if amount == 0 {
                return 0;
            }
            // Most faded first; equal ΔE goes to the lower index.
            let mut order: Vec<usize> = (0..n).collect();
            let most_faded = |&i: &usize, &j: &usize| {
                agents[j]
                    .delta_e
                    .partial_cmp(&agents[i].delta_e)
                    .unwrap_or(Ordering::Equal)
                    .then(i.cmp(&j))
            };
            if amount < n {
                order.select_nth_unstable_by(amount - 1, most_faded);
            }
            for &i in &order[..amount] {
                reset(&mut agents[i]);
            }
            amount
        }
        StrategyKind::ThresholdC => {
            let eligible: Vec<usize> = agents
                .iter()
                .enumerate()
                .filter(|(_, a)| a.delta_e > threshold)
                .map(|(i, _)| i)
                .collect();
            let amount = capacity.min(eligible.len());
            for j in index::sample(rng, eligible.len(), amount) {
                reset(&mut agents[eligible[j]]);
            }
            amount
        }
    }
}

pub fn fraction_above(agents: &[AgentState], threshold: f64) -> f64 {
    let above = agents.iter().filter(|a| a.delta_e > threshold).count();
    above as f64 / agents.len() as f64
}
