//! Run loop: trigger → broadcast → measure → update, over a horizon.
//!
//! The same measurement `Y(t)` feeds every estimator driven in one run, so
//! comparisons between them use common random numbers.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, Scenario, SimConfig};
use crate::error::Result;
use crate::estimators::{
    centralized_step, distributed_step, time_driven_step, CentralizedState, DistributedState, TimeDrivenState,
};
use crate::event::{trigger_phase, TriggerPolicy};
use crate::schedules::threshold;
use crate::sensing::sample_measurements;

/// RNG for replication `stream` of experiment `seed`.
///
/// Pinned to ChaCha8 so traces are bit-reproducible across platforms;
/// distinct streams are independent substreams of the same seed.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Snapshot of one stored step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    /// Row `i` is `x_i(t)`; empty in centralized-only runs.
    pub estimates: Vec<Vec<f64>>,
    pub error_norms: Vec<f64>,
    /// `‖x_i(t) − x_avg(t)‖`.
    pub consensus_deviation: Vec<f64>,
    pub triggered: Vec<bool>,
    /// `‖x_i(t) − x_i(t_k^i)‖` after the broadcast phase.
    pub broadcast_gap: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_driven: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centralized: Option<Vec<f64>>,
}

impl StepRecord {
    pub fn average(&self) -> Vec<f64> {
        average(&self.estimates)
    }
}

pub(crate) fn average(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.first().map_or(0, Vec::len);
    let mut avg = vec![0.0; n];
    for r in rows {
        for (a, v) in avg.iter_mut().zip(r) {
            *a += v;
        }
    }
    avg.iter_mut().for_each(|a| *a /= rows.len() as f64);
    avg
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Full record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub config: SimConfig,
    pub seed: u64,
    pub stream: u64,
    pub horizon: usize,
    pub records: Vec<StepRecord>,
    /// Every triggering instant per agent, including the forced `t = 0` broadcast.
    pub trigger_times: Vec<Vec<usize>>,
    /// `max_t ‖X(t)‖` over all steps, stored or not.
    pub max_estimate_norm: f64,
    /// Steps where the post-broadcast gap exceeded the threshold (checked every step).
    pub threshold_violations: usize,
}

impl SimTrace {
    pub fn record_at(&self, t: usize) -> Option<&StepRecord> {
        self.records.binary_search_by_key(&t, |r| r.t).ok().map(|i| &self.records[i])
    }

    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("trace always holds the initial step")
    }

    pub fn communication_count(&self) -> usize {
        self.trigger_times.iter().map(Vec::len).sum()
    }
}

/// Step-by-step driver; after construction and after each [`Simulator::advance`]
/// the state is post-broadcast for the current step.
pub struct Simulator<'a> {
    scenario: &'a Scenario,
    rng: ChaCha8Rng,
    policy: TriggerPolicy,
    pub event: Option<DistributedState>,
    pub time_driven: Option<TimeDrivenState>,
    pub centralized: Option<CentralizedState>,
    pub fired: Vec<bool>,
    t: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a Scenario, seed: u64, stream: u64) -> Result<Self> {
        let mode = scenario.config.mode;
        let policy = if mode == Mode::AlwaysTrigger { TriggerPolicy::Always } else { TriggerPolicy::Threshold };
        let centralized = if mode.has_centralized() {
            Some(CentralizedState::new(
                scenario.centralized_initial.clone(),
                scenario.centralized_gain,
                scenario.centralized_exponent,
            )?)
        } else {
            None
        };
        let n_agents = scenario.network.n_agents();
        Ok(Self {
            scenario,
            rng: replication_rng(seed, stream),
            policy,
            event: mode.has_event_triggered().then(|| DistributedState::new(scenario.initial.clone())),
            time_driven: mode.has_time_driven().then(|| TimeDrivenState::new(scenario.initial.clone())),
            centralized,
            fired: vec![mode.has_event_triggered(); n_agents],
            t: 0,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Measure, update every estimator, then run the trigger phase for `t + 1`.
    pub fn advance(&mut self) -> Result<()> {
        let s = self.scenario;
        let y = sample_measurements(&s.system, &mut self.rng);
        if let Some(state) = self.event.as_mut() {
            distributed_step(state, &y, &s.schedule, &s.network, &s.system)?;
        }
        if let Some(state) = self.time_driven.as_mut() {
            time_driven_step(state, &y, &s.schedule, &s.network, &s.system)?;
        }
        if let Some(state) = self.centralized.as_mut() {
            centralized_step(state, &y, &s.system)?;
        }
        self.t += 1;
        if let Some(state) = self.event.as_mut() {
            self.fired =
                trigger_phase(&mut state.comm, &mut state.mailbox, &state.estimates, self.t, &s.schedule, self.policy);
        }
        Ok(())
    }

    /// Estimates of the primary distributed estimator, if any.
    pub fn primary_estimates(&self) -> Option<&[DVector<f64>]> {
        match (&self.event, &self.time_driven) {
            (Some(e), _) => Some(&e.estimates),
            (None, Some(td)) => Some(&td.estimates),
            _ => None,
        }
    }

    fn broadcast_gaps(&self) -> Vec<f64> {
        match &self.event {
            Some(e) => e.estimates.iter().zip(&e.mailbox.stored).map(|(x, s)| (x - s).norm()).collect(),
            None => Vec::new(),
        }
    }

    fn record(&self) -> StepRecord {
        let theta = self.scenario.system.theta();
        let rows = |xs: &[DVector<f64>]| xs.iter().map(|x| x.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>();
        let estimates = self.primary_estimates().map(rows).unwrap_or_default();
        let error_norms =
            self.primary_estimates().map(|xs| xs.iter().map(|x| (x - theta).norm()).collect()).unwrap_or_default();
        let avg = average(&estimates);
        let consensus_deviation = estimates.iter().map(|x| distance(x, &avg)).collect();
        StepRecord {
            t: self.t,
            estimates,
            error_norms,
            consensus_deviation,
            triggered: if self.event.is_some() { self.fired.clone() } else { Vec::new() },
            broadcast_gap: self.broadcast_gaps(),
            time_driven: match (&self.event, &self.time_driven) {
                (Some(_), Some(td)) => Some(rows(&td.estimates)),
                _ => None,
            },
            centralized: self.centralized.as_ref().map(|c| c.u.iter().copied().collect()),
        }
    }

    fn count_violations(&self) -> usize {
        let s = self.scenario;
        self.broadcast_gaps()
            .iter()
            .enumerate()
            .filter(|&(i, &gap)| self.policy == TriggerPolicy::Threshold && gap > threshold(&s.schedule, i, self.t))
            .count()
    }

    fn estimate_norm(&self) -> f64 {
        self.primary_estimates().map(|xs| xs.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()).unwrap_or(0.0)
    }
}

/// Runs the configured mode with the config's seed on stream 0.
pub fn run_simulation(config: &SimConfig) -> Result<SimTrace> {
    let scenario = config.scenario()?;
    run_scenario(&scenario, config.seed_or_default(), 0)
}

pub fn run_scenario(scenario: &Scenario, seed: u64, stream: u64) -> Result<SimTrace> {
    let horizon = scenario.config.horizon;
    let stride = scenario.config.stride.max(1);
    let mut sim = Simulator::new(scenario, seed, stream)?;
    let mut records = vec![sim.record()];
    let mut max_estimate_norm = sim.estimate_norm();
    let mut threshold_violations = sim.count_violations();
    while sim.t() < horizon {
        sim.advance()?;
        max_estimate_norm = max_estimate_norm.max(sim.estimate_norm());
        threshold_violations += sim.count_violations();
        if sim.t() % stride == 0 || sim.t() == horizon {
            records.push(sim.record());
        }
    }
    let trigger_times =
        sim.event.as_ref().map(|e| e.comm.iter().map(|c| c.trigger_times.clone()).collect()).unwrap_or_default();
    Ok(SimTrace {
        config: scenario.config.clone(),
        seed,
        stream,
        horizon,
        records,
        trigger_times,
        max_estimate_norm,
        threshold_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(mode: Mode, horizon: usize) -> SimConfig {
        SimConfig { mode, horizon, ..SimConfig::four_agent_demo() }
    }

    #[test]
    fn zero_horizon_holds_initial_state() {
        let trace = run_simulation(&short(Mode::EventTriggered, 0)).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].estimates, SimConfig::four_agent_demo().initial_estimates);
        assert_eq!(trace.trigger_times, vec![vec![0]; 4]);
    }

    #[test]
    fn same_seed_same_trace() {
        let cfg = short(Mode::Compare, 500);
        assert_eq!(run_simulation(&cfg).unwrap(), run_simulation(&cfg).unwrap());
        let other = SimConfig { seed: Some(1), ..cfg.clone() };
        assert_ne!(run_simulation(&cfg).unwrap().last(), run_simulation(&other).unwrap().last());
    }

    #[test]
    fn stride_keeps_final_step() {
        let cfg = SimConfig { stride: 7, ..short(Mode::EventTriggered, 50) };
        let trace = run_simulation(&cfg).unwrap();
        let steps: Vec<_> = trace.records.iter().map(|r| r.t).collect();
        assert_eq!(steps, vec![0, 7, 14, 21, 28, 35, 42, 49, 50]);
        assert!(trace.record_at(14).is_some() && trace.record_at(15).is_none());
    }

    #[test]
    fn streams_are_independent() {
        use rand::Rng;
        let mut a = replication_rng(9, 0);
        let mut b = replication_rng(9, 1);
        let xa: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.random()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn centralized_only_mode() {
        let trace = run_simulation(&short(Mode::Centralized, 20)).unwrap();
        assert!(trace.last().estimates.is_empty());
        assert!(trace.last().centralized.is_some());
        assert!(trace.trigger_times.is_empty());
    }
}
