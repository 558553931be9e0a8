//! Consensus + innovations estimators: event-triggered, time-driven and
//! centralized.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::event::{initial_broadcast, AgentCommState, MailboxView};
use crate::graph::Network;
use crate::linalg::kron_identity;
use crate::schedules::{alpha, beta, ScheduleParams};
use crate::sensing::ObservationSystem;

/// Event-triggered estimator state: estimates plus communication state.
#[derive(Debug, Clone)]
pub struct DistributedState {
    pub t: usize,
    pub estimates: Vec<DVector<f64>>,
    pub comm: Vec<AgentCommState>,
    pub mailbox: MailboxView,
}

impl DistributedState {
    /// Step 0, after the forced initial broadcast.
    pub fn new(initial: Vec<DVector<f64>>) -> Self {
        let (comm, mailbox) = initial_broadcast(&initial);
        Self { t: 0, estimates: initial, comm, mailbox }
    }

    /// `X(t)` stacked agent by agent.
    pub fn stacked(&self) -> DVector<f64> {
        stack(&self.estimates)
    }

    /// `X(t_k)` from the mailbox.
    pub fn stacked_mailbox(&self) -> DVector<f64> {
        stack(&self.mailbox.stored)
    }
}

/// Time-driven baseline state.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDrivenState {
    pub t: usize,
    pub estimates: Vec<DVector<f64>>,
}

impl TimeDrivenState {
    pub fn new(initial: Vec<DVector<f64>>) -> Self {
        Self { t: 0, estimates: initial }
    }
}

/// Centralized estimator with `α_c(t) = a_c/(t+1)^τ_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedState {
    pub t: usize,
    pub u: DVector<f64>,
    pub a_c: f64,
    pub tau_c: f64,
}

impl CentralizedState {
    pub fn new(u0: DVector<f64>, a_c: f64, tau_c: f64) -> Result<Self> {
        if !(a_c > 0.0) || !(0.0..=1.0).contains(&tau_c) {
            return Err(Error::DomainError(format!("need a_c > 0 and tau_c in [0, 1], got a_c={a_c}, tau_c={tau_c}")));
        }
        Ok(Self { t: 0, u: u0, a_c, tau_c })
    }

    pub fn gain(&self, t: usize) -> f64 {
        self.a_c / ((t + 1) as f64).powf(self.tau_c)
    }
}

pub fn stack(parts: &[DVector<f64>]) -> DVector<f64> {
    let n = parts.first().map_or(0, |p| p.len());
    DVector::from_fn(parts.len() * n, |k, _| parts[k / n][k % n])
}

pub fn unstack(x: &DVector<f64>, n_agents: usize) -> Vec<DVector<f64>> {
    let n = x.len() / n_agents.max(1);
    (0..n_agents).map(|i| x.rows(i * n, n).into_owned()).collect()
}

/// `x_i + β Σ_j (v_j − x_i) + α H_iᵀ (y_i − H_i x_i)`.
///
/// `neighbor_values[j]` is whatever agent `i` uses for neighbor `j`: the
/// stored copy for the event-triggered estimator, the live estimate for the
/// time-driven one.
fn agent_update(
    i: usize,
    x_i: &DVector<f64>,
    neighbor_values: &[DVector<f64>],
    y: &DVector<f64>,
    gains: (f64, f64),
    net: &Network,
    sys: &ObservationSystem,
) -> DVector<f64> {
    let (a, b) = gains;
    let mut disagreement = DVector::zeros(x_i.len());
    for &j in net.neighbors(i) {
        disagreement += &neighbor_values[j] - x_i;
    }
    let h = sys.sensor(i);
    let innovation = h.transpose() * (sys.agent_slice(y, i) - h * x_i);
    x_i + disagreement * b + innovation * a
}

fn check_finite(estimates: &[DVector<f64>], step: usize) -> Result<()> {
    if estimates.iter().all(|x| x.iter().all(|v| v.is_finite())) {
        Ok(())
    } else {
        Err(Error::NonFinite { step })
    }
}

fn check_dims(estimates: &[DVector<f64>], y: &DVector<f64>, net: &Network, sys: &ObservationSystem) -> Result<()> {
    if estimates.len() != net.n_agents() || net.n_agents() != sys.n_agents() {
        return Err(Error::DimensionMismatch(format!(
            "{} estimates, {} network agents, {} sensors",
            estimates.len(),
            net.n_agents(),
            sys.n_agents()
        )));
    }
    if y.len() != sys.total_dim() || estimates.iter().any(|x| x.len() != sys.param_dim()) {
        return Err(Error::DimensionMismatch("measurement or estimate length".into()));
    }
    Ok(())
}

/// One event-triggered update using the post-broadcast mailbox for step `t`.
pub fn distributed_step(
    state: &mut DistributedState,
    y: &DVector<f64>,
    params: &ScheduleParams,
    net: &Network,
    sys: &ObservationSystem,
) -> Result<()> {
    check_dims(&state.estimates, y, net, sys)?;
    let t = state.t;
    let gains = (alpha(params, t), beta(params, t));
    let next: Vec<_> = state
        .estimates
        .iter()
        .enumerate()
        .map(|(i, x)| agent_update(i, x, &state.mailbox.stored, y, gains, net, sys))
        .collect();
    check_finite(&next, t)?;
    state.estimates = next;
    state.t += 1;
    Ok(())
}

/// One time-driven update: every neighbor's live estimate is used.
pub fn time_driven_step(
    state: &mut TimeDrivenState,
    y: &DVector<f64>,
    params: &ScheduleParams,
    net: &Network,
    sys: &ObservationSystem,
) -> Result<()> {
    check_dims(&state.estimates, y, net, sys)?;
    let t = state.t;
    let gains = (alpha(params, t), beta(params, t));
    let next: Vec<_> = state
        .estimates
        .iter()
        .enumerate()
        .map(|(i, x)| agent_update(i, x, &state.estimates, y, gains, net, sys))
        .collect();
    check_finite(&next, t)?;
    state.estimates = next;
    state.t += 1;
    Ok(())
}

/// `u + (α_c(t)/N) Σ_i H_iᵀ (y_i − H_i u)`.
pub fn centralized_step(state: &mut CentralizedState, y: &DVector<f64>, sys: &ObservationSystem) -> Result<()> {
    if y.len() != sys.total_dim() || state.u.len() != sys.param_dim() {
        return Err(Error::DimensionMismatch("centralized step operands".into()));
    }
    let t = state.t;
    let mut innovation = DVector::zeros(state.u.len());
    for (i, h) in sys.sensors().iter().enumerate() {
        innovation += h.transpose() * (sys.agent_slice(y, i) - h * &state.u);
    }
    let next = &state.u + innovation * (state.gain(t) / sys.n_agents() as f64);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: t });
    }
    state.u = next;
    state.t += 1;
    Ok(())
}

/// Kronecker-form operators for the stacked update.
#[derive(Debug, Clone)]
pub struct StackedOperators {
    pub laplacian: DMatrix<f64>,
    pub adjacency: DMatrix<f64>,
    pub observation: DMatrix<f64>,
}

impl StackedOperators {
    pub fn new(net: &Network, sys: &ObservationSystem) -> Self {
        let n = sys.param_dim();
        Self {
            laplacian: kron_identity(&net.laplacian(), n),
            adjacency: kron_identity(&net.adjacency_matrix(), n),
            observation: sys.stacked_observation(),
        }
    }

    /// `X − β(𝓛⊗I)X + α D̄_H (Y − D̄_Hᵀ X) + β(𝒜⊗I)(X(t_k) − X)`.
    pub fn step(
        &self,
        x: &DVector<f64>,
        x_tk: &DVector<f64>,
        y: &DVector<f64>,
        params: &ScheduleParams,
        t: usize,
    ) -> DVector<f64> {
        let (a, b) = (alpha(params, t), beta(params, t));
        let innovation = &self.observation * (y - self.observation.transpose() * x);
        x - (&self.laplacian * x) * b + innovation * a + (&self.adjacency * (x_tk - x)) * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{trigger_phase, TriggerPolicy};
    use crate::sensing::sample_measurements;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn row(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, v.len(), v)
    }

    fn demo(var: f64) -> (Network, ObservationSystem, ScheduleParams) {
        let net = Network::cycle(4).unwrap();
        let sensors = vec![row(&[1.0, 0.0]), row(&[0.0, 1.0]), row(&[1.0, 1.0]), row(&[1.0, 2.0])];
        let sys =
            ObservationSystem::new(DVector::from_vec(vec![-1.0, 2.0]), sensors, DMatrix::identity(4, 4) * var).unwrap();
        let p = ScheduleParams::uniform(1.0, 1.0, 0.7, 0.5, 0.6, 4).unwrap();
        (net, sys, p)
    }

    #[test]
    fn truth_is_a_fixed_point() {
        let (net, sys, p) = demo(0.0);
        let y = sys.clean_measurement();
        let theta = sys.theta().clone();
        let mut ds = DistributedState::new(vec![theta.clone(); 4]);
        let mut td = TimeDrivenState::new(vec![theta.clone(); 4]);
        let mut cs = CentralizedState::new(theta.clone(), 1.0, 0.7).unwrap();
        for _ in 0..20 {
            distributed_step(&mut ds, &y, &p, &net, &sys).unwrap();
            time_driven_step(&mut td, &y, &p, &net, &sys).unwrap();
            centralized_step(&mut cs, &y, &sys).unwrap();
        }
        assert!(ds.estimates.iter().all(|x| *x == theta));
        assert!(td.estimates.iter().all(|x| *x == theta));
        assert_eq!(cs.u, theta);
    }

    #[test]
    fn single_agent_has_no_consensus_term() {
        let net = Network::from_edges(1, &[]).unwrap();
        let sys =
            ObservationSystem::new(DVector::from_vec(vec![0.5, 1.5]), vec![row(&[2.0, 1.0])], DMatrix::zeros(1, 1))
                .unwrap();
        let p = ScheduleParams::uniform(0.3, 5.0, 0.7, 0.5, 0.6, 1).unwrap();
        let x0 = DVector::from_vec(vec![1.0, -1.0]);
        let mut ds = DistributedState::new(vec![x0.clone()]);
        let y = sys.clean_measurement();
        distributed_step(&mut ds, &y, &p, &net, &sys).unwrap();
        let h = sys.sensor(0);
        let expected = &x0 + h.transpose() * (&y - h * &x0) * 0.3;
        assert!((&ds.estimates[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn centralized_scalar_one_step() {
        let n_agents = 3;
        let sys = ObservationSystem::new(
            DVector::from_vec(vec![4.0]),
            vec![DMatrix::from_element(1, 1, 1.0); n_agents],
            DMatrix::zeros(3, 3),
        )
        .unwrap();
        let mut cs = CentralizedState::new(DVector::from_vec(vec![-2.0]), 1.0, 0.0).unwrap();
        centralized_step(&mut cs, &sys.clean_measurement(), &sys).unwrap();
        assert!((cs.u[0] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn divergent_gains_report_non_finite() {
        let (net, sys, _) = demo(0.0);
        let p = ScheduleParams::uniform(1e200, 1e200, 0.7, 0.5, 0.6, 4).unwrap();
        let mut ds = DistributedState::new(vec![DVector::from_vec(vec![1e200, 1e200]); 4]);
        let y = sys.clean_measurement();
        let mut err = None;
        for _ in 0..5 {
            if let Err(e) = distributed_step(&mut ds, &y, &p, &net, &sys) {
                err = Some(e);
                break;
            }
        }
        assert!(matches!(err, Some(Error::NonFinite { .. })));
    }

    #[test]
    fn unobservable_disconnected_agents_do_not_converge() {
        let net = Network::from_edges(2, &[]).unwrap();
        let sys = ObservationSystem::new(
            DVector::from_vec(vec![-1.0, 2.0]),
            vec![row(&[1.0, 0.0]), row(&[1.0, 0.0])],
            DMatrix::identity(2, 2) * 0.01,
        )
        .unwrap();
        let p = ScheduleParams::uniform(1.0, 1.0, 0.7, 0.5, 0.6, 2).unwrap();
        let mut td = TimeDrivenState::new(vec![DVector::from_vec(vec![0.0, 0.0]); 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5000 {
            let y = sample_measurements(&sys, &mut rng);
            time_driven_step(&mut td, &y, &p, &net, &sys).unwrap();
        }
        // second coordinate is never observed
        for x in &td.estimates {
            assert_eq!(x[1], 0.0);
            assert!((x[0] + 1.0).abs() < 0.05);
        }
    }

    fn random_case() -> impl Strategy<Value = (usize, usize, Vec<bool>, Vec<f64>, Vec<f64>, u64)> {
        (1usize..=6, 1usize..=4).prop_flat_map(|(n_agents, n)| {
            (
                Just(n_agents),
                Just(n),
                proptest::collection::vec(any::<bool>(), n_agents * n_agents),
                proptest::collection::vec(-2.0f64..2.0, n_agents * n),
                proptest::collection::vec(-5.0f64..5.0, n_agents * n),
                any::<u64>(),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn per_agent_and_stacked_forms_agree((n_agents, n, bits, hs, x0, seed) in random_case()) {
            let edges: Vec<_> = (0..n_agents)
                .flat_map(|i| ((i + 1)..n_agents).map(move |j| (i, j)))
                .filter(|&(i, j)| bits[i * n_agents + j])
                .collect();
            let net = Network::from_edges(n_agents, &edges).unwrap();
            let sensors: Vec<_> = (0..n_agents).map(|i| row(&hs[i * n..(i + 1) * n])).collect();
            let sys = ObservationSystem::new(DVector::from_element(n, 0.5), sensors, DMatrix::identity(n_agents, n_agents) * 0.1).unwrap();
            let p = ScheduleParams::uniform(0.2, 0.2, 0.7, 0.5, 0.6, n_agents).unwrap();
            let ops = StackedOperators::new(&net, &sys);
            let init = unstack(&DVector::from_column_slice(&x0), n_agents);
            let mut ds = DistributedState::new(init);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for t in 0..40 {
                trigger_phase(&mut ds.comm, &mut ds.mailbox, &ds.estimates, t, &p, TriggerPolicy::Threshold);
                let y = sample_measurements(&sys, &mut rng);
                let expected = ops.step(&ds.stacked(), &ds.stacked_mailbox(), &y, &p, t);
                distributed_step(&mut ds, &y, &p, &net, &sys).unwrap();
                let diff = (ds.stacked() - &expected).amax();
                prop_assert!(diff <= 1e-12 * expected.amax().max(1.0), "t={} diff={}", t, diff);
            }
        }
    }
}
