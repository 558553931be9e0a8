//! Decaying gain sequences, trigger thresholds and the exponent conditions
//! under which the estimator is known to behave.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default noise-moment surplus; `1/(2+ε₁) = 0.05`.
pub const DEFAULT_EPSILON1: f64 = 18.0;

/// Gains `α(t) = a/(t+1)^τ₁`, `β(t) = b/(t+1)^τ₂` and thresholds `1/(t+1)^ρ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub a: f64,
    pub b: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub rho: Vec<f64>,
    #[serde(default = "default_epsilon1")]
    pub epsilon1: f64,
}

fn default_epsilon1() -> f64 {
    DEFAULT_EPSILON1
}

impl ScheduleParams {
    pub fn new(a: f64, b: f64, tau1: f64, tau2: f64, rho: Vec<f64>, epsilon1: f64) -> Result<Self> {
        let p = Self { a, b, tau1, tau2, rho, epsilon1 };
        p.check()?;
        Ok(p)
    }

    /// Same threshold exponent for every agent.
    pub fn uniform(a: f64, b: f64, tau1: f64, tau2: f64, rho: f64, n_agents: usize) -> Result<Self> {
        Self::new(a, b, tau1, tau2, vec![rho; n_agents], DEFAULT_EPSILON1)
    }

    /// Positivity and range checks; theorem conditions are left to [`validate`].
    pub fn check(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::DomainError(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("a", self.a)?;
        positive("b", self.b)?;
        positive("epsilon1", self.epsilon1)?;
        for (name, tau) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(Error::DomainError(format!("{name} must lie in (0, 1], got {tau}")));
            }
        }
        if self.rho.is_empty() {
            return Err(Error::DomainError("rho must list one exponent per agent".into()));
        }
        for (i, &r) in self.rho.iter().enumerate() {
            positive(&format!("rho[{i}]"), r)?;
        }
        Ok(())
    }

    /// `ρ₀ = min_i ρ_i`.
    pub fn rho0(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `1/(2+ε₁)`.
    pub fn moment_gap(&self) -> f64 {
        1.0 / (2.0 + self.epsilon1)
    }

    pub fn with_gain_scale(&self, factor: f64) -> Self {
        Self { a: self.a * factor, b: self.b * factor, ..self.clone() }
    }
}

pub fn alpha(params: &ScheduleParams, t: usize) -> f64 {
    params.a / ((t + 1) as f64).powf(params.tau1)
}

pub fn beta(params: &ScheduleParams, t: usize) -> f64 {
    params.b / ((t + 1) as f64).powf(params.tau2)
}

pub fn threshold(params: &ScheduleParams, agent: usize, t: usize) -> f64 {
    ((t + 1) as f64).powf(-params.rho[agent])
}

/// Which exponent relations hold, with the admissible τ₀ ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub assumption4_ok: bool,
    pub unbiased_ok: bool,
    pub bounded_ok: bool,
    pub consensus_tau0_sup: f64,
    pub approx_tau0_sup: f64,
    pub sparse_trigger_ok: bool,
    pub messages: Vec<String>,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.assumption4_ok && self.unbiased_ok && self.bounded_ok && self.sparse_trigger_ok
    }
}

/// Evaluates every exponent condition with strict inequalities and no slack.
pub fn validate(params: &ScheduleParams) -> ConditionReport {
    let (tau1, tau2) = (params.tau1, params.tau2);
    let rho0 = params.rho0();
    let gap = params.moment_gap();
    let mut messages = Vec::new();

    let ordered = 0.0 < tau2 && tau2 <= tau1 && tau1 <= 1.0;
    let fast_enough = tau1 > (tau2 + gap).max(0.5);
    let assumption4_ok = ordered && fast_enough;
    if !ordered {
        messages.push(format!("step exponents must satisfy 0 < tau2 <= tau1 <= 1 (tau1={tau1}, tau2={tau2})"));
    }
    if !fast_enough {
        messages.push(format!("tau1={tau1} must exceed max(tau2 + 1/(2+eps1), 0.5) = {:.6}", (tau2 + gap).max(0.5)));
    }

    let unbiased_ok = rho0 > tau1 - tau2;
    if !unbiased_ok {
        messages
            .push(format!("rho0={rho0} <= tau1 - tau2 = {:.6}: asymptotic unbiasedness not guaranteed", tau1 - tau2));
    }
    let bounded_ok = rho0 > 0.5 - tau2;
    if !bounded_ok {
        messages.push(format!("rho0={rho0} <= 0.5 - tau2 = {:.6}: boundedness not guaranteed", 0.5 - tau2));
    }
    let sparse_trigger_ok = rho0 < tau1 - gap;
    if !sparse_trigger_ok {
        messages
            .push(format!("rho0={rho0} >= tau1 - 1/(2+eps1) = {:.6}: triggering intervals need not grow", tau1 - gap));
    }

    let consensus_tau0_sup = rho0.min(tau1 - tau2 - gap);
    let approx_tau0_sup = (tau1 - tau2 - gap).min(rho0 + tau2 - tau1);
    if consensus_tau0_sup <= 0.0 {
        messages.push(format!("consensus decay range is empty (sup tau0 = {consensus_tau0_sup:.6})"));
    }
    if approx_tau0_sup <= 0.0 {
        messages.push(format!("centralized approximation range is empty (sup tau0 = {approx_tau0_sup:.6})"));
    }

    ConditionReport {
        assumption4_ok,
        unbiased_ok,
        bounded_ok,
        consensus_tau0_sup,
        approx_tau0_sup,
        sparse_trigger_ok,
        messages,
    }
}
