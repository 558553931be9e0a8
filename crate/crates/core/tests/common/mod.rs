//! Shared test support: pinned expectations, independent oracles and random
//! config generation.

#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use etde::{Mode, SimConfig};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub fn crate_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

#[derive(Debug, Deserialize)]
pub struct Expectations {
    pub version: u32,
    pub config_path: String,
    pub seeds: u64,
    pub min_passing_seeds: usize,
    pub reproduction: Reproduction,
    pub transmit_bound: TransmitBound,
    pub equivalence: Equivalence,
    pub consistency: Consistency,
    pub intervals: Intervals,
    pub bias: Bias,
    pub normality: Normality,
    pub spectral: Spectral,
    pub scalar_recursion: ScalarRecursionExp,
    pub approximation: Approximation,
}

#[derive(Debug, Deserialize)]
pub struct Reproduction {
    pub rate_min: f64,
    pub rate_max: f64,
    pub max_seconds_per_run: f64,
}

#[derive(Debug, Deserialize)]
pub struct TransmitBound {
    pub random_configs: usize,
    pub horizon: usize,
    pub pilot_norm_cap: f64,
}

#[derive(Debug, Deserialize)]
pub struct Equivalence {
    pub random_configs: usize,
    pub max_agents: usize,
    pub max_dim: usize,
    pub horizon: usize,
    pub oracle_tol: f64,
}

#[derive(Debug, Deserialize)]
pub struct Consistency {
    pub error_fraction: f64,
    pub consensus_fraction: f64,
    pub early_step: usize,
}

#[derive(Debug, Deserialize)]
pub struct Intervals {
    pub growth_min: f64,
}

#[derive(Debug, Deserialize)]
pub struct Bias {
    pub runs: usize,
    pub early_step: usize,
    pub late_step: usize,
    pub fraction: f64,
    pub max_seconds: f64,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
pub struct Normality {
    pub a_c: f64,
    pub runs: usize,
    pub t_eval: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub quadrature_tol: f64,
    pub residual_tol: f64,
}

#[derive(Debug, Deserialize)]
pub struct Spectral {
    pub lambda2: f64,
    pub tol: f64,
    pub scan_t_max: usize,
}

#[derive(Debug, Deserialize)]
pub struct ScalarRecursionExp {
    pub draws: usize,
    pub seed: u64,
    pub early_step: usize,
    pub late_step: usize,
    pub fraction: f64,
}

#[derive(Debug, Deserialize)]
pub struct Approximation {
    pub fraction: f64,
    pub early_step: usize,
}

pub fn expectations() -> Expectations {
    let text = std::fs::read_to_string(crate_path("tests/expectations.json")).expect("expectations file");
    serde_json::from_str(&text).expect("valid expectations file")
}

/// `e^A` by scaling and squaring with a degree-12 Taylor polynomial.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=12 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `c ∫₀^∞ e^{Av} Q e^{Aᵀv} dv` for Hurwitz `A`, by composite Simpson on
/// `[0, v_max]` with step `h`.
pub fn lyapunov_integral(a: &DMatrix<f64>, q: &DMatrix<f64>, c: f64, v_max: f64, h: f64) -> DMatrix<f64> {
    let steps = ((v_max / h).ceil() as usize + 1) & !1;
    let step = expm(&(a * h));
    let mut e = DMatrix::identity(a.nrows(), a.ncols());
    let mut acc = DMatrix::zeros(a.nrows(), a.ncols());
    for k in 0..=steps {
        let w = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += (&e * q * e.transpose()) * w;
        e = &step * &e;
    }
    acc * (c * h / 3.0)
}

/// Time-driven consensus + innovations written directly on nested `Vec`s,
/// sharing nothing with the library but the measurement sequence.
pub fn naive_time_driven(cfg: &SimConfig, measurements: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    let n_agents = cfg.adjacency.len();
    let n = cfg.theta.len();
    let s = &cfg.schedule;
    let mut x = cfg.initial_estimates.clone();
    let mut trajectory = vec![x.clone()];
    for (t, y) in measurements.iter().enumerate() {
        let alpha = s.a / ((t + 1) as f64).powf(s.tau1);
        let beta = s.b / ((t + 1) as f64).powf(s.tau2);
        let mut next = x.clone();
        let mut offset = 0;
        for i in 0..n_agents {
            for k in 0..n {
                let mut consensus = 0.0;
                for j in 0..n_agents {
                    if cfg.adjacency[i][j] == 1 {
                        consensus += x[j][k] - x[i][k];
                    }
                }
                next[i][k] += beta * consensus;
            }
            let h = &cfg.sensors[i];
            for (r, row) in h.iter().enumerate() {
                let predicted: f64 = row.iter().zip(&x[i]).map(|(a, b)| a * b).sum();
                let residual = y[offset + r] - predicted;
                for k in 0..n {
                    next[i][k] += alpha * row[k] * residual;
                }
            }
            offset += h.len();
        }
        x = next;
        trajectory.push(x.clone());
    }
    trajectory
}

/// Random connected graph on `n` vertices: a random spanning tree plus extra edges.
pub fn random_connected_adjacency(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<i64>> {
    let mut adj = vec![vec![0i64; n]; n];
    for v in 1..n {
        let u = rng.random_range(0..v);
        adj[u][v] = 1;
        adj[v][u] = 1;
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.3) {
                adj[u][v] = 1;
                adj[v][u] = 1;
            }
        }
    }
    adj
}

/// Random small config with `N ≤ max_agents`, `n ≤ max_dim`, a connected
/// graph, `τ₁ ∈ (0.6, 0.95)`, `0 < τ₂ < τ₁ − 1/2` and `ρ_i > τ₁ − τ₂`.
pub fn random_config(rng: &mut ChaCha8Rng, max_agents: usize, max_dim: usize, horizon: usize, mode: Mode) -> SimConfig {
    let n_agents = rng.random_range(1..=max_agents);
    let n = rng.random_range(1..=max_dim);
    let sensors: Vec<Vec<Vec<f64>>> = (0..n_agents)
        .map(|_| {
            let rows = rng.random_range(1..=n);
            (0..rows).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
        })
        .collect();
    let tau1 = rng.random_range(0.6..0.95);
    let tau2 = rng.random_range(0.05..tau1 - 0.5);
    let rho: Vec<f64> = (0..n_agents).map(|_| rng.random_range(tau1 - tau2 + 0.01..1.0)).collect();
    SimConfig {
        adjacency: random_connected_adjacency(rng, n_agents),
        theta: (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
        sensors,
        noise_variance: Some(rng.random_range(0.001..0.1)),
        schedule: etde::ScheduleParams {
            a: rng.random_range(0.2..1.0),
            b: rng.random_range(0.05..0.3),
            tau1,
            tau2,
            rho,
            epsilon1: 18.0,
        },
        horizon,
        seed: Some(rng.random()),
        mode,
        initial_estimates: (0..n_agents).map(|_| (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()).collect(),
        ..SimConfig::four_agent_demo()
    }
}
