//! Trace-level quantities: error norms, consensus and centralized-gap decay,
//! communication statistics, and Monte Carlo studies of bias and normality.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{asymptotic_covariance, finite_horizon_centralized_covariance};
use crate::config::Scenario;
use crate::error::{Error, Result};
use crate::estimators::{centralized_step, CentralizedState};
use crate::linalg::matrix_to_rows;
use crate::schedules::{threshold, validate};
use crate::sensing::{sample_measurements, ObservationSystem};
use crate::simulation::{distance, replication_rng, SimTrace, Simulator};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// `(t+1)^τ₀ · value(t)` over the stored steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySequence {
    pub tau0: f64,
    pub steps: Vec<usize>,
    pub values: Vec<f64>,
    /// Least-squares slope of `ln value` against `ln(t+1)` over the second half of the horizon.
    pub tail_slope: Option<f64>,
    pub warning: Option<String>,
}

impl DecaySequence {
    fn new(tau0: f64, raw: impl Iterator<Item = (usize, f64)>, horizon: usize, warning: Option<String>) -> Self {
        let (steps, values): (Vec<_>, Vec<_>) = raw.map(|(t, v)| (t, ((t + 1) as f64).powf(tau0) * v)).unzip();
        let tail_slope = log_log_slope(&steps, &values, horizon / 2);
        Self { tau0, steps, values, tail_slope, warning }
    }

    pub fn value_at(&self, t: usize) -> Option<f64> {
        self.steps.binary_search(&t).ok().map(|i| self.values[i])
    }
}

fn log_log_slope(steps: &[usize], values: &[f64], from: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(values)
        .filter(|(&t, &v)| t >= from && t > 0 && v > 0.0)
        .map(|(&t, &v)| (((t + 1) as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `(t+1)^τ₀ · max_i ‖x_i(t) − x_avg(t)‖`.
pub fn consensus_decay(trace: &SimTrace, tau0: f64) -> DecaySequence {
    let sup = validate(&trace.config.schedule).consensus_tau0_sup;
    let warning =
        (!(0.0 <= tau0 && tau0 < sup)).then(|| format!("tau0={tau0} outside [0, {sup}); decay is not guaranteed"));
    let raw = trace.records.iter().map(|r| {
        let avg = r.average();
        (r.t, r.estimates.iter().map(|x| distance(x, &avg)).fold(0.0, f64::max))
    });
    DecaySequence::new(tau0, raw, trace.horizon, warning)
}

/// `(t+1)^τ₀ · max_i ‖x_i(t) − u(t)‖` against the parallel centralized run.
pub fn centralized_gap(trace: &SimTrace, tau0: f64) -> Result<DecaySequence> {
    if trace.records.iter().any(|r| r.centralized.is_none() || r.estimates.is_empty()) {
        return Err(Error::MissingBaseline);
    }
    let cfg = &trace.config;
    let report = validate(&cfg.schedule);
    let mut warnings = Vec::new();
    if !(0.0 <= tau0 && tau0 < report.approx_tau0_sup) {
        warnings.push(format!("tau0={tau0} outside [0, {}); decay is not guaranteed", report.approx_tau0_sup));
    }
    let a_c = cfg.centralized.a_c.unwrap_or(cfg.schedule.a);
    let tau_c = cfg.centralized.tau_c.unwrap_or(cfg.schedule.tau1);
    if a_c != cfg.schedule.a || tau_c != cfg.schedule.tau1 {
        warnings.push(format!("centralized gains (a_c={a_c}, tau_c={tau_c}) differ from (a, tau1)"));
    }
    let raw = trace.records.iter().map(|r| {
        let u = r.centralized.as_deref().unwrap_or_default();
        (r.t, r.estimates.iter().map(|x| distance(x, u)).fold(0.0, f64::max))
    });
    let warning = (!warnings.is_empty()).then(|| warnings.join("; "));
    Ok(DecaySequence::new(tau0, raw, trace.horizon, warning))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub agent: usize,
    pub intervals: usize,
    pub first_decile_mean: Option<f64>,
    pub last_decile_mean: Option<f64>,
    /// last-decile mean / first-decile mean.
    pub growth_ratio: Option<f64>,
}

impl IntervalStats {
    pub fn from_trigger_times(agent: usize, times: &[usize]) -> Self {
        let gaps: Vec<f64> = times.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
        let k = (gaps.len() / 10).max(1);
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (first, last) =
            if gaps.is_empty() { (None, None) } else { (Some(mean(&gaps[..k])), Some(mean(&gaps[gaps.len() - k..]))) };
        Self {
            agent,
            intervals: gaps.len(),
            first_decile_mean: first,
            last_decile_mean: last,
            growth_ratio: first.zip(last).map(|(f, l)| l / f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunicationStats {
    /// Non-forced broadcasts over `N·T`.
    pub communication_rate: f64,
    pub per_agent_rates: Vec<f64>,
    pub forced_broadcasts: usize,
    pub triggered_broadcasts: usize,
    pub opportunities: usize,
    pub interval_stats: Vec<IntervalStats>,
}

pub fn communication_stats(trace: &SimTrace) -> CommunicationStats {
    let horizon = trace.horizon;
    let triggered: Vec<usize> =
        trace.trigger_times.iter().map(|times| times.iter().filter(|&&t| t > 0).count()).collect();
    let forced = trace.trigger_times.iter().map(|times| times.iter().filter(|&&t| t == 0).count()).sum();
    let total: usize = triggered.iter().sum();
    let rate = |count: usize, agents: usize| {
        if horizon == 0 || agents == 0 {
            0.0
        } else {
            count as f64 / (agents * horizon) as f64
        }
    };
    CommunicationStats {
        communication_rate: rate(total, trace.trigger_times.len()),
        per_agent_rates: triggered.iter().map(|&c| rate(c, 1)).collect(),
        forced_broadcasts: forced,
        triggered_broadcasts: total,
        opportunities: trace.trigger_times.len() * horizon,
        interval_stats: trace
            .trigger_times
            .iter()
            .enumerate()
            .map(|(i, times)| IntervalStats::from_trigger_times(i, times))
            .collect(),
    }
}

/// Independent recheck of `‖x_i(t) − x_i(t_k^i)‖ ≤ 1/(t+1)^ρ_i` on every stored step.
pub fn threshold_sweep(trace: &SimTrace) -> usize {
    trace
        .records
        .iter()
        .map(|r| {
            r.broadcast_gap
                .iter()
                .enumerate()
                .filter(|&(i, &gap)| gap > threshold(&trace.config.schedule, i, r.t))
                .count()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tau0Check {
    pub kind: String,
    pub tau0: f64,
    pub tail_slope: Option<f64>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub horizon: usize,
    pub seed: u64,
    pub final_error_norms: Vec<f64>,
    pub final_consensus_deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centralized_final_error: Option<f64>,
    pub communication: CommunicationStats,
    pub tau0_decay_checks: Vec<Tau0Check>,
    pub threshold_violations: usize,
    pub max_estimate_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normality: Option<NormalityReport>,
}

pub fn metrics_report(trace: &SimTrace) -> MetricsReport {
    let last = trace.last();
    let report = validate(&trace.config.schedule);
    let mut checks = Vec::new();
    if !last.estimates.is_empty() {
        for tau0 in [0.0, 0.5 * report.consensus_tau0_sup.max(0.0)] {
            let d = consensus_decay(trace, tau0);
            checks.push(Tau0Check { kind: "consensus".into(), tau0, tail_slope: d.tail_slope, warning: d.warning });
        }
        if last.centralized.is_some() {
            for tau0 in [0.0, 0.5 * report.approx_tau0_sup.max(0.0)] {
                if let Ok(d) = centralized_gap(trace, tau0) {
                    checks.push(Tau0Check {
                        kind: "centralized_gap".into(),
                        tau0,
                        tail_slope: d.tail_slope,
                        warning: d.warning,
                    });
                }
            }
        }
    }
    MetricsReport {
        horizon: trace.horizon,
        seed: trace.seed,
        final_error_norms: last.error_norms.clone(),
        final_consensus_deviation: last.consensus_deviation.iter().copied().fold(0.0, f64::max),
        centralized_final_error: last.centralized.as_ref().map(|u| distance(u, &trace.config.theta)),
        communication: communication_stats(trace),
        tau0_decay_checks: checks,
        threshold_violations: threshold_sweep(trace) + trace.threshold_violations,
        max_estimate_norm: trace.max_estimate_norm,
        normality: None,
    }
}

/// Up to `count` distinct log-spaced steps in `[1, max]`.
pub fn log_checkpoints(max: usize, count: usize) -> Vec<usize> {
    if max == 0 || count == 0 {
        return Vec::new();
    }
    let mut out: Vec<usize> = (0..count)
        .map(|k| {
            let frac = if count == 1 { 1.0 } else { k as f64 / (count - 1) as f64 };
            (max as f64).powf(frac).round() as usize
        })
        .collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub checkpoints: Vec<usize>,
    /// `[checkpoint][agent]` norm of the across-run mean error.
    pub bias_norms: Vec<Vec<f64>>,
    pub n_runs: usize,
    pub low_confidence: bool,
    pub warning: Option<String>,
}

/// Mean error `E[x_i(t)] − θ` estimated from `n_runs` independent streams.
pub fn monte_carlo_bias(scenario: &Scenario, n_runs: usize, checkpoints: &[usize], seed: u64) -> Result<BiasReport> {
    let mut checkpoints = checkpoints.to_vec();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let last = checkpoints.last().copied().unwrap_or(0);
    let theta = scenario.system.theta().clone();

    let runs: Vec<Vec<Vec<DVector<f64>>>> = (0..n_runs as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<Vec<DVector<f64>>>> {
            let mut sim = Simulator::new(scenario, seed, r)?;
            let mut out = Vec::with_capacity(checkpoints.len());
            let mut next = 0;
            loop {
                while next < checkpoints.len() && checkpoints[next] == sim.t() {
                    let xs = sim.primary_estimates().ok_or(Error::MissingBaseline)?;
                    out.push(xs.iter().map(|x| x - &theta).collect());
                    next += 1;
                }
                if sim.t() >= last {
                    break;
                }
                sim.advance()?;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let n_agents = scenario.network.n_agents();
    let n = theta.len();
    let bias_norms = (0..checkpoints.len())
        .map(|c| {
            (0..n_agents)
                .map(|i| {
                    (0..n)
                        .map(|k| {
                            let mut acc = CompensatedSum::default();
                            runs.iter().for_each(|run| acc.add(run[c][i][k]));
                            acc.value() / n_runs as f64
                        })
                        .map(|m| m * m)
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let warning =
        (!validate(&scenario.schedule).unbiased_ok).then(|| "rho0 <= tau1 - tau2: bias need not vanish".to_string());
    Ok(BiasReport { checkpoints, bias_norms, n_runs, low_confidence: n_runs < 2, warning })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub a_c: f64,
    pub t_eval: usize,
    pub n_runs: usize,
    pub sample_covariance: Vec<Vec<f64>>,
    pub s_c: Vec<Vec<f64>>,
    /// `‖Ŝ − S_c‖_F / ‖S_c‖_F`; zero when both vanish.
    pub relative_error: f64,
    /// Exact covariance of the scaled error at `t_eval`.
    pub finite_horizon_covariance: Vec<Vec<f64>>,
    pub finite_horizon_relative_error: f64,
}

fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).norm();
    if b.norm() == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / b.norm()
    }
}

/// Sample covariance of `√(t_eval+1)(u(t_eval) − θ)` over independent
/// centralized runs with `α_c(t) = a_c/(t+1)`, compared with `S_c`.
pub fn monte_carlo_normality(
    sys: &ObservationSystem,
    a_c: f64,
    t_eval: usize,
    n_runs: usize,
    seed: u64,
    u0: Option<DVector<f64>>,
) -> Result<NormalityReport> {
    if n_runs < 2 {
        return Err(Error::DomainError("normality study needs at least 2 runs".into()));
    }
    let cov = asymptotic_covariance(sys, a_c)?;
    let n = sys.param_dim();
    let u0 = u0.unwrap_or_else(|| DVector::zeros(n));
    let scale = ((t_eval + 1) as f64).sqrt();

    let samples: Vec<DVector<f64>> = (0..n_runs as u64)
        .into_par_iter()
        .map(|r| -> Result<DVector<f64>> {
            let mut rng = replication_rng(seed, r);
            let mut state = CentralizedState::new(u0.clone(), a_c, 1.0)?;
            for _ in 0..t_eval {
                let y = sample_measurements(sys, &mut rng);
                centralized_step(&mut state, &y, sys)?;
            }
            Ok((&state.u - sys.theta()) * scale)
        })
        .collect::<Result<_>>()?;

    let mean: DVector<f64> = DVector::from_fn(n, |k, _| {
        let mut acc = CompensatedSum::default();
        samples.iter().for_each(|s| acc.add(s[k]));
        acc.value() / n_runs as f64
    });
    let sample_cov = DMatrix::from_fn(n, n, |p, q| {
        let mut acc = CompensatedSum::default();
        samples.iter().for_each(|s| acc.add((s[p] - mean[p]) * (s[q] - mean[q])));
        acc.value() / (n_runs - 1) as f64
    });
    let exact = finite_horizon_centralized_covariance(sys, a_c, 1.0, t_eval)?;
    Ok(NormalityReport {
        a_c,
        t_eval,
        n_runs,
        relative_error: relative_frobenius(&sample_cov, &cov.s_c),
        finite_horizon_relative_error: relative_frobenius(&exact, &cov.s_c),
        sample_covariance: matrix_to_rows(&sample_cov),
        s_c: matrix_to_rows(&cov.s_c),
        finite_horizon_covariance: matrix_to_rows(&exact),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Mode, SimConfig};
    use crate::simulation::run_simulation;

    fn exact_start(mode: Mode, horizon: usize) -> SimConfig {
        let mut cfg = SimConfig { mode, horizon, noise_variance: Some(0.0), ..SimConfig::four_agent_demo() };
        cfg.initial_estimates = vec![cfg.theta.clone(); 4];
        cfg.centralized.initial = Some(cfg.theta.clone());
        cfg
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn exact_start_has_no_disagreement() {
        let trace = run_simulation(&exact_start(Mode::Compare, 200)).unwrap();
        assert!(consensus_decay(&trace, 0.0).values.iter().all(|&v| v == 0.0));
        assert!(centralized_gap(&trace, 0.0).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn never_triggering_run_has_zero_rate() {
        let trace = run_simulation(&exact_start(Mode::EventTriggered, 300)).unwrap();
        let stats = communication_stats(&trace);
        assert_eq!(stats.communication_rate, 0.0);
        assert_eq!(stats.forced_broadcasts, 4);
        assert!(stats.interval_stats.iter().all(|s| s.growth_ratio.is_none()));
    }

    #[test]
    fn always_trigger_rate_is_one() {
        let cfg = SimConfig { mode: Mode::AlwaysTrigger, horizon: 300, ..SimConfig::four_agent_demo() };
        let stats = communication_stats(&run_simulation(&cfg).unwrap());
        assert_eq!(stats.communication_rate, 1.0);
        assert_eq!(stats.opportunities, 1200);
        assert!(stats.interval_stats.iter().all(|s| s.growth_ratio == Some(1.0)));
    }

    #[test]
    fn missing_baseline() {
        let trace = run_simulation(&SimConfig { horizon: 10, ..SimConfig::four_agent_demo() }).unwrap();
        assert!(matches!(centralized_gap(&trace, 0.0), Err(Error::MissingBaseline)));
    }

    #[test]
    fn out_of_range_tau0_warns() {
        let trace =
            run_simulation(&SimConfig { mode: Mode::Compare, horizon: 50, ..SimConfig::four_agent_demo() }).unwrap();
        assert!(consensus_decay(&trace, 0.5).warning.is_some());
        assert!(consensus_decay(&trace, 0.1).warning.is_none());
        // rho0 + tau2 - tau1 = 0.4 > 0.15, so 0.4 is outside on both counts
        assert!(centralized_gap(&trace, 0.4).unwrap().warning.is_some());
    }

    #[test]
    fn interval_deciles() {
        let s = IntervalStats::from_trigger_times(0, &[0, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144]);
        assert_eq!(s.intervals, 11);
        assert_eq!(s.first_decile_mean, Some(1.0));
        assert_eq!(s.last_decile_mean, Some(55.0));
        assert_eq!(s.growth_ratio, Some(55.0));
    }

    #[test]
    fn checkpoints_are_log_spaced() {
        assert_eq!(log_checkpoints(10_000, 5), vec![1, 10, 100, 1000, 10_000]);
        assert!(log_checkpoints(0, 3).is_empty());
    }

    #[test]
    fn noise_free_bias_is_zero() {
        let cfg = exact_start(Mode::EventTriggered, 0);
        let report = monte_carlo_bias(&cfg.scenario().unwrap(), 4, &[0, 10, 100], 3).unwrap();
        assert!(report.bias_norms.iter().flatten().all(|&b| b == 0.0));
        let single = monte_carlo_bias(&cfg.scenario().unwrap(), 1, &[10], 3).unwrap();
        assert!(single.low_confidence);
    }

    #[test]
    fn noise_free_normality_is_degenerate() {
        let cfg = exact_start(Mode::Centralized, 0);
        let sys = cfg.scenario().unwrap().system;
        let r = monte_carlo_normality(&sys, 2.0, 50, 10, 0, Some(sys.theta().clone())).unwrap();
        assert!(r.sample_covariance.iter().flatten().all(|&v| v == 0.0));
        assert!(r.s_c.iter().flatten().all(|&v| v.abs() < 1e-15));
        assert_eq!(r.relative_error, 0.0);
    }

    #[test]
    fn below_critical_gain_is_not_hurwitz() {
        let sys = SimConfig::four_agent_demo().scenario().unwrap().system;
        assert!(matches!(monte_carlo_normality(&sys, 1.0, 10, 4, 0, None), Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn parallel_results_are_deterministic() {
        let s = SimConfig { horizon: 0, ..SimConfig::four_agent_demo() }.scenario().unwrap();
        let a = monte_carlo_bias(&s, 16, &[5, 50], 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| monte_carlo_bias(&s, 16, &[5, 50], 11).unwrap());
        assert_eq!(a, b);
    }
}
