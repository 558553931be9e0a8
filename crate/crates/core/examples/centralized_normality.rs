//! Sample covariance of √(t+1)(u(t) − θ) for the centralized estimator
//! against the limiting covariance S_c.
//!
//!     cargo run --release --example centralized_normality [runs] [t_eval]

use etde::metrics::monte_carlo_normality;
use etde::SimConfig;

fn main() -> etde::Result<()> {
    let mut args = std::env::args().skip(1);
    let runs: usize = args.next().map_or(1000, |s| s.parse().expect("runs must be an integer"));
    let t_eval: usize = args.next().map_or(2000, |s| s.parse().expect("t_eval must be an integer"));
    let sys = SimConfig::four_agent_demo().scenario()?.system;
    let r = monte_carlo_normality(&sys, 2.0, t_eval, runs, 0, None)?;
    println!("S_c              {:?}", r.s_c);
    println!("sample ({runs} runs) {:?}", r.sample_covariance);
    println!("exact at t={t_eval}   {:?}", r.finite_horizon_covariance);
    println!(
        "relative Frobenius error: sample {:.1}%, exact finite-t {:.1}%",
        r.relative_error * 100.0,
        r.finite_horizon_relative_error * 100.0
    );
    Ok(())
}
