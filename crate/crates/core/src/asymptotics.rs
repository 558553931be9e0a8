//! Numerical counterparts of the convergence analysis: the gain-matrix
//! spectral condition, the scalar comparison recursion, and the asymptotic
//! covariance of the centralized estimator.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::linalg::{kron_identity, matrix_to_rows, solve_lyapunov, symmetric_eigen};
use crate::schedules::{alpha, beta, ScheduleParams};
use crate::sensing::{gramian, ObservationSystem};

/// Every step is scanned up to here; beyond it the stride grows geometrically.
pub const DENSE_SCAN_LIMIT: usize = 10_000;
const GEOMETRIC_STRIDE: f64 = 1.01;

/// Outcome of scanning `M(t) = β(t)(𝓛⊗I) + α(t)D_H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCondition {
    /// First scanned step with every eigenvalue of `M(t)` in `(0, 1)`.
    pub t_star: usize,
    /// `min_{t ≥ t_star} λ_min(M(t)) / α(t)` over the scanned steps.
    pub m0: f64,
    pub max_eig_at_t_star: f64,
    /// `λ_min(𝓛⊗I + D_H)`.
    pub base_min_eigenvalue: f64,
    pub base_positive_definite: bool,
    /// Whether every scanned step after `t_star` also had its spectrum in `(0, 1)`.
    pub holds_through_scan: bool,
    pub scanned_steps: usize,
    pub t_max: usize,
}

/// Steps visited by the scan: dense, then geometric.
pub fn scan_steps(t_max: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=t_max.min(DENSE_SCAN_LIMIT)).collect();
    let mut t = DENSE_SCAN_LIMIT;
    while t < t_max {
        t = ((t as f64 * GEOMETRIC_STRIDE).ceil() as usize).max(t + 1).min(t_max);
        steps.push(t);
    }
    steps
}

/// `λ_min(𝓛⊗I_n + D_H)` and whether it is positive.
pub fn coupled_information_min_eigenvalue(net: &Network, sys: &ObservationSystem) -> Result<(f64, bool)> {
    let m = kron_identity(&net.laplacian(), sys.param_dim()) + sys.stacked_information();
    let min = symmetric_eigen(&m)?.min();
    let scale = m.norm().max(1.0);
    Ok((min, min > 1e-12 * scale))
}

pub fn spectral_condition(
    net: &Network,
    sys: &ObservationSystem,
    params: &ScheduleParams,
    t_max: usize,
) -> Result<SpectralCondition> {
    let lap = kron_identity(&net.laplacian(), sys.param_dim());
    let info = sys.stacked_information();
    let (base_min_eigenvalue, base_positive_definite) = coupled_information_min_eigenvalue(net, sys)?;

    let steps = scan_steps(t_max);
    let mut t_star = None;
    let mut max_eig_at_t_star = f64::NAN;
    let mut m0 = f64::INFINITY;
    let mut holds_through_scan = true;
    for &t in &steps {
        let (a, b) = (alpha(params, t), beta(params, t));
        let eig = symmetric_eigen(&(&lap * b + &info * a))?;
        let inside = eig.min() > 0.0 && eig.max() < 1.0;
        match t_star {
            None if inside => {
                t_star = Some(t);
                max_eig_at_t_star = eig.max();
                m0 = eig.min() / a;
            }
            None => {}
            Some(_) => {
                holds_through_scan &= inside;
                m0 = m0.min(eig.min() / a);
            }
        }
    }
    let t_star = t_star.ok_or(Error::NotFound { t_max })?;
    Ok(SpectralCondition {
        t_star,
        m0,
        max_eig_at_t_star,
        base_min_eigenvalue,
        base_positive_definite,
        holds_through_scan,
        scanned_steps: steps.len(),
        t_max,
    })
}

/// Parameters of `z(t+1) = (1 − r₁(t)) z(t) + r₂(t)`, `r_k = a_k/(t+1)^δ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRecursionParams {
    pub z0: f64,
    pub a1: f64,
    pub a2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta0: f64,
}

impl ScalarRecursionParams {
    pub fn check(&self) -> Result<()> {
        let Self { z0, a1, a2, delta1, delta2, delta0 } = *self;
        let fail = |msg: String| Err(Error::DomainError(msg));
        if !(z0 >= 0.0) {
            return fail(format!("z0 must be nonnegative, got {z0}"));
        }
        if !(a1 > 0.0) || !(a2 >= 0.0) {
            return fail(format!("need a1 > 0 and a2 >= 0, got a1={a1}, a2={a2}"));
        }
        if !(0.0..=1.0).contains(&delta1) || !(delta2 >= 0.0) || !(delta1 < delta2) {
            return fail(format!("need 0 <= delta1 <= 1, delta2 >= 0, delta1 < delta2 (got {delta1}, {delta2})"));
        }
        if !(delta0 >= 0.0 && delta0 < delta2 - delta1) {
            return fail(format!("delta0={delta0} must lie in [0, delta2 - delta1 = {})", delta2 - delta1));
        }
        if delta1 == 1.0 && !(a1 > delta0) {
            return fail(format!("with delta1 = 1 need a1 > delta0 (a1={a1}, delta0={delta0})"));
        }
        Ok(())
    }

    /// `a₂/a₁ (t+1)^{δ₀+δ₁−δ₂}`, the tail the scaled sequence follows when `δ₁ < 1`.
    pub fn tail_exponent(&self) -> f64 {
        self.delta0 + self.delta1 - self.delta2
    }
}

/// Iterator over `(t, (t+1)^δ₀ z(t))`.
#[derive(Debug, Clone)]
pub struct ScalarRecursion {
    params: ScalarRecursionParams,
    t: usize,
    z: f64,
}

impl ScalarRecursion {
    pub fn new(params: ScalarRecursionParams) -> Result<Self> {
        params.check()?;
        Ok(Self { params, t: 0, z: params.z0 })
    }
}

impl Iterator for ScalarRecursion {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<Self::Item> {
        let p = &self.params;
        let s = (self.t + 1) as f64;
        let out = (self.t, s.powf(p.delta0) * self.z);
        let r1 = (p.a1 / s.powf(p.delta1)).clamp(0.0, 1.0);
        let r2 = p.a2 / s.powf(p.delta2);
        self.z = (1.0 - r1) * self.z + r2;
        self.t += 1;
        Some(out)
    }
}

/// Scaled sequence `(t+1)^δ₀ z(t)` for `t = 0..=t_max`.
pub fn scalar_recursion(params: ScalarRecursionParams, t_max: usize) -> Result<Vec<f64>> {
    Ok(ScalarRecursion::new(params)?.take(t_max + 1).map(|(_, v)| v).collect())
}

/// Drift `Σ₁`, forcing `S₁` and the limiting covariance `S_c`.
#[derive(Debug, Clone)]
pub struct AsymptoticCovariance {
    pub sigma1: DMatrix<f64>,
    pub s1: DMatrix<f64>,
    pub s_c: DMatrix<f64>,
    pub hurwitz: bool,
    /// `‖Σ₁S_c + S_cΣ₁ᵀ + (a_c²/N²)S₁‖_F`.
    pub residual: f64,
    pub a_c: f64,
}

/// JSON view of [`AsymptoticCovariance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCovarianceReport {
    pub a_c: f64,
    pub hurwitz: bool,
    pub sigma1: Vec<Vec<f64>>,
    pub s1: Vec<Vec<f64>>,
    pub s_c: Option<Vec<Vec<f64>>>,
    pub residual: Option<f64>,
    pub min_a_c: f64,
}

/// `Σ₁ = −(a_c/N)G + ½I` and `S₁ = (𝟏⊗I)ᵀ D̄_H R_v D̄_Hᵀ (𝟏⊗I)`.
pub fn drift_and_forcing(sys: &ObservationSystem, a_c: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = sys.param_dim();
    let n_agents = sys.n_agents() as f64;
    let g = gramian(sys, 0.0)?.g;
    let sigma1 = g * (-a_c / n_agents) + DMatrix::identity(n, n) * 0.5;
    // (𝟏⊗I)ᵀ D̄_H = [H_1ᵀ ... H_Nᵀ]
    let ones = kron_identity(&DMatrix::from_element(sys.n_agents(), 1, 1.0), n);
    let collect = ones.transpose() * sys.stacked_observation();
    let s1 = &collect * sys.noise_cov() * collect.transpose();
    Ok((sigma1, (&s1 + s1.transpose()) * 0.5))
}

/// `N / (2 λ_min(G))`, the gain above which `Σ₁` is Hurwitz.
pub fn critical_centralized_gain(sys: &ObservationSystem) -> Result<f64> {
    let g = gramian(sys, 0.0)?;
    Ok(sys.n_agents() as f64 / (2.0 * g.min_eigenvalue))
}

pub fn asymptotic_covariance(sys: &ObservationSystem, a_c: f64) -> Result<AsymptoticCovariance> {
    let (sigma1, s1) = drift_and_forcing(sys, a_c)?;
    let max_eigenvalue = symmetric_eigen(&sigma1)?.max();
    if max_eigenvalue >= 0.0 {
        return Err(Error::NotHurwitz { max_eigenvalue });
    }
    let n_agents = sys.n_agents() as f64;
    let forcing = &s1 * (a_c * a_c / (n_agents * n_agents));
    let s_c = solve_lyapunov(&sigma1, &(-&forcing))?;
    let residual = (&sigma1 * &s_c + &s_c * sigma1.transpose() + &forcing).norm();
    Ok(AsymptoticCovariance { sigma1, s1, s_c, hurwitz: true, residual, a_c })
}

/// Report form that keeps `Σ₁` and `S₁` even when `S_c` does not exist.
pub fn asymptotic_covariance_report(sys: &ObservationSystem, a_c: f64) -> Result<AsymptoticCovarianceReport> {
    let min_a_c = critical_centralized_gain(sys)?;
    match asymptotic_covariance(sys, a_c) {
        Ok(cov) => Ok(AsymptoticCovarianceReport {
            a_c,
            hurwitz: true,
            sigma1: matrix_to_rows(&cov.sigma1),
            s1: matrix_to_rows(&cov.s1),
            s_c: Some(matrix_to_rows(&cov.s_c)),
            residual: Some(cov.residual),
            min_a_c,
        }),
        Err(Error::NotHurwitz { .. }) => {
            let (sigma1, s1) = drift_and_forcing(sys, a_c)?;
            Ok(AsymptoticCovarianceReport {
                a_c,
                hurwitz: false,
                sigma1: matrix_to_rows(&sigma1),
                s1: matrix_to_rows(&s1),
                s_c: None,
                residual: None,
                min_a_c,
            })
        }
        Err(e) => Err(e),
    }
}

/// Exact covariance of `√(t+1)(u(t) − θ)` for a deterministic start, from
/// `P(s+1) = F(s) P(s) F(s)ᵀ + (α_c(s)/N)² Σ_i H_iᵀR_{ij}H_j`.
///
/// This is what a Monte Carlo estimate at finite `t` converges to; its gap to
/// `S_c` is the finite-horizon bias of the asymptotic approximation.
pub fn finite_horizon_centralized_covariance(
    sys: &ObservationSystem,
    a_c: f64,
    tau_c: f64,
    t: usize,
) -> Result<DMatrix<f64>> {
    let n = sys.param_dim();
    let n_agents = sys.n_agents() as f64;
    let g = gramian(sys, 0.0)?.g;
    let (_, s1) = drift_and_forcing(sys, a_c)?;
    let eye = DMatrix::<f64>::identity(n, n);
    let mut p = DMatrix::<f64>::zeros(n, n);
    for s in 0..t {
        let gain = a_c / ((s + 1) as f64).powf(tau_c) / n_agents;
        let f = &eye - &g * gain;
        p = &f * p * f.transpose() + &s1 * (gain * gain);
    }
    Ok(p * (t + 1) as f64)
}
