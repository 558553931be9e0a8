//! Per-agent trigger decisions and the broadcast/store protocol.
//!
//! Each step runs in two phases before the estimator update: every agent
//! first decides whether to trigger against its own current estimate, then
//! all triggered agents broadcast. Broadcasts are lossless and seen by all
//! neighbors in the same step, so one network-wide mailbox stands in for
//! per-neighbor inboxes.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::schedules::{threshold, ScheduleParams};

/// How agents decide to broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TriggerPolicy {
    /// Broadcast when the deviation from the last broadcast exceeds `1/(t+1)^ρ_i`.
    #[default]
    Threshold,
    /// Broadcast every step; equivalent to a threshold of −∞.
    Always,
}

/// Communication bookkeeping of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentCommState {
    pub agent: usize,
    pub last_broadcast: DVector<f64>,
    pub last_trigger_time: usize,
    pub trigger_count: usize,
    pub trigger_times: Vec<usize>,
}

/// Latest broadcast of every agent, as known network-wide.
#[derive(Debug, Clone, PartialEq)]
pub struct MailboxView {
    pub stored: Vec<DVector<f64>>,
}

impl AgentCommState {
    /// State before the forced initial broadcast.
    pub fn new(agent: usize, dim: usize) -> Self {
        Self {
            agent,
            last_broadcast: DVector::zeros(dim),
            last_trigger_time: 0,
            trigger_count: 0,
            trigger_times: Vec::new(),
        }
    }

    /// Gaps between successive triggering instants.
    pub fn intervals(&self) -> Vec<usize> {
        self.trigger_times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Comm states and mailbox after every agent broadcast its initial estimate at `t = 0`.
pub fn initial_broadcast(initial: &[DVector<f64>]) -> (Vec<AgentCommState>, MailboxView) {
    let mut mailbox = MailboxView { stored: initial.to_vec() };
    let comm = initial
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut s = AgentCommState::new(i, x.len());
            broadcast(&mut s, &mut mailbox, x, 0);
            s
        })
        .collect();
    (comm, mailbox)
}

/// `‖x_i(t) − x_i(t_k^i)‖ > 1/(t+1)^ρ_i`.
pub fn evaluate_trigger(
    state: &AgentCommState,
    current_estimate: &DVector<f64>,
    t: usize,
    params: &ScheduleParams,
) -> bool {
    debug_assert!(t >= state.last_trigger_time);
    (current_estimate - &state.last_broadcast).norm() > threshold(params, state.agent, t)
}

/// Records a broadcast of `current_estimate` at step `t`.
pub fn broadcast(state: &mut AgentCommState, mailbox: &mut MailboxView, current_estimate: &DVector<f64>, t: usize) {
    debug_assert!(state.trigger_times.last().is_none_or(|&last| t > last), "trigger times must increase");
    state.last_broadcast.copy_from(current_estimate);
    state.last_trigger_time = t;
    state.trigger_count += 1;
    state.trigger_times.push(t);
    mailbox.stored[state.agent].copy_from(current_estimate);
}

/// Evaluates every agent's trigger, then broadcasts for the triggered ones.
///
/// Returns the per-agent trigger flags for step `t`.
pub fn trigger_phase(
    comm: &mut [AgentCommState],
    mailbox: &mut MailboxView,
    estimates: &[DVector<f64>],
    t: usize,
    params: &ScheduleParams,
    policy: TriggerPolicy,
) -> Vec<bool> {
    let fired: Vec<bool> = comm
        .iter()
        .zip(estimates)
        .map(|(state, x)| match policy {
            TriggerPolicy::Always => true,
            TriggerPolicy::Threshold => evaluate_trigger(state, x, t, params),
        })
        .collect();
    for ((state, x), &f) in comm.iter_mut().zip(estimates).zip(&fired) {
        if f {
            broadcast(state, mailbox, x, t);
        }
    }
    fired
}

/// `‖X(t_k) − X(t)‖` over the stacked estimates.
pub fn transmit_error(mailbox: &MailboxView, current_estimates: &[DVector<f64>]) -> f64 {
    mailbox.stored.iter().zip(current_estimates).map(|(s, x)| (s - x).norm_squared()).sum::<f64>().sqrt()
}
