//! Distributed parameter estimation over multi-agent networks with
//! event-triggered communication.
//!
//! Agents observe a common parameter `θ` through their own linear sensors,
//! and update their estimates with a consensus + innovations recursion.
//! Instead of exchanging estimates every step, an agent broadcasts only when
//! its estimate has drifted from its last broadcast by more than a decaying
//! threshold `1/(t+1)^ρ_i`; neighbors use the stored copy in between.
//!
//! Modules, bottom-up:
//!
//! - [`graph`]: networks, Laplacians, algebraic connectivity
//! - [`sensing`]: observation model and noise synthesis
//! - [`schedules`]: gain sequences, thresholds, exponent conditions
//! - [`event`]: trigger decisions and the broadcast/store protocol
//! - [`estimators`]: event-triggered, time-driven and centralized updates
//! - [`simulation`]: the seeded run loop and [`SimTrace`]
//! - [`asymptotics`]: spectral condition, scalar recursion, Lyapunov covariance
//! - [`metrics`]: decay sequences, communication statistics, Monte Carlo studies
//! - [`config`], [`output`], [`cli`]: JSON configs, file artifacts, the `etde` binary
//!
//! See `examples/` for one runnable program per capability.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too; index
// loops mirror the matrix notation they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimators;
pub mod event;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod output;
pub mod schedules;
pub mod sensing;
pub mod simulation;

pub use config::{load_config, Mode, Scenario, SimConfig};
pub use error::{Error, Result};
pub use graph::{build_network, is_connected, spectral_data, Network, SpectralData};
pub use schedules::{validate, ConditionReport, ScheduleParams};
pub use sensing::{gramian, sample_measurements, Gramian, ObservationSystem};
pub use simulation::{run_scenario, run_simulation, SimTrace};
