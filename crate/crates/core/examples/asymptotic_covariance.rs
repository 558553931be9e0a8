//! Limiting covariance S_c of the √(t+1)-scaled centralized error from a
//! Lyapunov solve, and how slowly the exact finite-t covariance approaches it.
//!
//!     cargo run --release --example asymptotic_covariance [a_c]

use etde::asymptotics::{
    asymptotic_covariance_report, critical_centralized_gain, finite_horizon_centralized_covariance,
};
use etde::linalg::matrix_from_rows;
use etde::SimConfig;

fn main() -> etde::Result<()> {
    let a_c: f64 = std::env::args().nth(1).map_or(2.0, |s| s.parse().expect("a_c must be a number"));
    let sys = SimConfig::four_agent_demo().scenario()?.system;
    println!("drift is Hurwitz for a_c > {:.4}", critical_centralized_gain(&sys)?);

    let report = asymptotic_covariance_report(&sys, a_c)?;
    let Some(s_c) = report.s_c else {
        println!("a_c = {a_c} is below the threshold; no stationary covariance");
        return Ok(());
    };
    let s_c = matrix_from_rows(&s_c)?;
    println!("S_c(a_c = {a_c}) = {s_c}Lyapunov residual {:.1e}", report.residual.unwrap_or(f64::NAN));
    for t in [100, 1_000, 10_000, 100_000] {
        let exact = finite_horizon_centralized_covariance(&sys, a_c, 1.0, t)?;
        println!("t = {t:>6}: |Cov_t - S_c| / |S_c| = {:.3}", (&exact - &s_c).norm() / s_c.norm());
    }
    Ok(())
}
