//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "adjacency": [[0,1,0,1],[1,0,1,0],[0,1,0,1],[1,0,1,0]],
//!   "theta": [-1.0, 2.0],
//!   "sensors": [[[1,0]], [[0,1]], [[1,1]], [[1,2]]],
//!   "noise_variance": 0.01,
//!   "schedule": {"a": 1, "b": 1, "tau1": 0.7, "tau2": 0.5, "rho": [0.6,0.6,0.6,0.6], "epsilon1": 18},
//!   "horizon": 10000,
//!   "seed": 0,
//!   "mode": "event_triggered",
//!   "initial_estimates": [[10,20],[10,-10],[10,-20],[20,-10]]
//! }
//! ```
//!
//! Sensors are row-major `m_i × n` arrays. Either `noise_variance` (expands
//! to `σ²·I_M`) or a full `noise_cov` must be given.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_network, is_connected, Network, DEFAULT_CONNECTIVITY_TOL};
use crate::linalg::matrix_from_rows;
use crate::schedules::{validate, ScheduleParams};
use crate::sensing::{gramian, NoiseKind, ObservationSystem};

/// Which estimators a run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    EventTriggered,
    TimeDriven,
    AlwaysTrigger,
    Centralized,
    /// Event-triggered, time-driven and centralized on one noise stream.
    Compare,
}

impl Mode {
    pub fn has_event_triggered(self) -> bool {
        matches!(self, Mode::EventTriggered | Mode::AlwaysTrigger | Mode::Compare)
    }

    pub fn has_time_driven(self) -> bool {
        matches!(self, Mode::TimeDriven | Mode::Compare)
    }

    pub fn has_centralized(self) -> bool {
        matches!(self, Mode::Centralized | Mode::Compare)
    }
}

/// Centralized baseline settings; defaults to `a_c = a`, `τ_c = τ₁`, `u(0) = x_avg(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CentralizedConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default = "default_output_dir")]
    pub dir: String,
    #[serde(default = "default_true")]
    pub write_trace_csv: bool,
    #[serde(default = "default_true")]
    pub write_plot_data: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_output_dir(), write_trace_csv: true, write_plot_data: true }
    }
}

fn default_output_dir() -> String {
    "etde-out".into()
}

fn default_true() -> bool {
    true
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub adjacency: Vec<Vec<i64>>,
    pub theta: Vec<f64>,
    pub sensors: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_cov: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    pub schedule: ScheduleParams,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mode: Mode,
    pub initial_estimates: Vec<Vec<f64>>,
    #[serde(default)]
    pub centralized: CentralizedConfig,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_connectivity_tol")]
    pub connectivity_tol: f64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_connectivity_tol() -> f64 {
    DEFAULT_CONNECTIVITY_TOL
}

/// Fully validated runtime objects built from a [`SimConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: SimConfig,
    pub network: Network,
    pub system: ObservationSystem,
    pub schedule: ScheduleParams,
    pub initial: Vec<DVector<f64>>,
    pub centralized_gain: f64,
    pub centralized_exponent: f64,
    pub centralized_initial: DVector<f64>,
}

impl SimConfig {
    /// Four agents on a ring estimating `θ = [−1, 2]`; the bundled `paper_sec4.json`.
    pub fn four_agent_demo() -> Self {
        Self {
            adjacency: vec![vec![0, 1, 0, 1], vec![1, 0, 1, 0], vec![0, 1, 0, 1], vec![1, 0, 1, 0]],
            theta: vec![-1.0, 2.0],
            sensors: vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]], vec![vec![1.0, 1.0]], vec![vec![1.0, 2.0]]],
            noise_variance: Some(0.01),
            noise_cov: None,
            noise_kind: NoiseKind::Gaussian,
            schedule: ScheduleParams { a: 1.0, b: 1.0, tau1: 0.7, tau2: 0.5, rho: vec![0.6; 4], epsilon1: 18.0 },
            horizon: 10_000,
            seed: Some(0),
            mode: Mode::EventTriggered,
            initial_estimates: vec![vec![10.0, 20.0], vec![10.0, -10.0], vec![10.0, -20.0], vec![20.0, -10.0]],
            centralized: CentralizedConfig::default(),
            stride: 1,
            connectivity_tol: DEFAULT_CONNECTIVITY_TOL,
            output: OutputConfig::default(),
        }
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn n_agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn noise_matrix(&self) -> Result<DMatrix<f64>> {
        let m: usize = self.sensors.iter().map(Vec::len).sum();
        match (&self.noise_cov, self.noise_variance) {
            (Some(_), Some(_)) => Err(Error::Parse("give either noise_cov or noise_variance, not both".into())),
            (Some(rows), None) => matrix_from_rows(rows),
            (None, Some(var)) if var >= 0.0 => Ok(DMatrix::identity(m, m) * var),
            (None, Some(var)) => Err(Error::DomainError(format!("noise variance must be nonnegative, got {var}"))),
            (None, None) => Err(Error::Parse("missing noise_variance or noise_cov".into())),
        }
    }

    /// Builds and cross-checks all runtime objects. Dimension problems are
    /// errors; theorem-condition violations are not.
    pub fn scenario(&self) -> Result<Scenario> {
        let n_agents = self.n_agents();
        let network = build_network(&self.adjacency)?;
        if self.sensors.len() != n_agents {
            return Err(Error::DimensionMismatch(format!("{} sensors for {n_agents} agents", self.sensors.len())));
        }
        if self.initial_estimates.len() != n_agents {
            return Err(Error::DimensionMismatch(format!(
                "{} initial estimates for {n_agents} agents",
                self.initial_estimates.len()
            )));
        }
        if self.schedule.rho.len() != n_agents {
            return Err(Error::DimensionMismatch(format!(
                "{} threshold exponents for {n_agents} agents",
                self.schedule.rho.len()
            )));
        }
        if self.stride == 0 {
            return Err(Error::DomainError("stride must be positive".into()));
        }
        self.schedule.check()?;
        let n = self.theta.len();
        for (i, x) in self.initial_estimates.iter().enumerate() {
            if x.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "initial estimate {i} has length {} but theta has {n}",
                    x.len()
                )));
            }
        }
        let sensors = self.sensors.iter().map(|rows| matrix_from_rows(rows)).collect::<Result<Vec<_>>>()?;
        let system = ObservationSystem::with_noise(
            DVector::from_vec(self.theta.clone()),
            sensors,
            self.noise_matrix()?,
            self.noise_kind,
        )?;
        let initial: Vec<_> = self.initial_estimates.iter().map(|x| DVector::from_vec(x.clone())).collect();

        let centralized_initial = match &self.centralized.initial {
            Some(u) if u.len() != n => {
                return Err(Error::DimensionMismatch(format!(
                    "centralized initial has length {} but theta has {n}",
                    u.len()
                )))
            }
            Some(u) => DVector::from_vec(u.clone()),
            None => initial.iter().fold(DVector::zeros(n), |acc, x| acc + x) / n_agents as f64,
        };
        Ok(Scenario {
            config: self.clone(),
            network,
            system,
            schedule: self.schedule.clone(),
            initial,
            centralized_gain: self.centralized.a_c.unwrap_or(self.schedule.a),
            centralized_exponent: self.centralized.tau_c.unwrap_or(self.schedule.tau1),
            centralized_initial,
        })
    }

    /// Advisory findings: theorem conditions, connectivity, observability.
    pub fn warnings(&self) -> Result<Vec<String>> {
        let scenario = self.scenario()?;
        let mut out = validate(&self.schedule).messages;
        if !is_connected(&scenario.network, self.connectivity_tol) {
            out.push("network is not connected".into());
        }
        if !gramian(&scenario.system, 1e-9)?.full_rank {
            out.push("sensors are not collectively observable (G is singular)".into());
        }
        Ok(out)
    }
}

/// Parses and validates a config file; returns it with any notices.
pub fn load_config(path: impl AsRef<Path>) -> Result<(SimConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<(SimConfig, Vec<String>)> {
    let mut config: SimConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut notices = Vec::new();
    if config.seed.is_none() {
        config.seed = Some(0);
        notices.push("no seed given; using default seed 0".into());
    }
    notices.extend(config.warnings()?);
    Ok((config, notices))
}
