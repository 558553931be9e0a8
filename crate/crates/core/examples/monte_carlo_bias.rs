//! Mean estimation error over independent replications at log-spaced steps.
//!
//!     cargo run --release --example monte_carlo_bias [runs]

use etde::metrics::{log_checkpoints, monte_carlo_bias};
use etde::SimConfig;

fn main() -> etde::Result<()> {
    let runs: usize = std::env::args().nth(1).map_or(200, |s| s.parse().expect("runs must be an integer"));
    let scenario = SimConfig { horizon: 5000, ..SimConfig::four_agent_demo() }.scenario()?;
    let report = monte_carlo_bias(&scenario, runs, &log_checkpoints(5000, 8), 0)?;
    println!("{:>6}  |E[x_i(t)] - θ| per agent ({runs} runs)", "t");
    for (t, norms) in report.checkpoints.iter().zip(&report.bias_norms) {
        let cells: Vec<String> = norms.iter().map(|v| format!("{v:.2e}")).collect();
        println!("{t:>6}  {}", cells.join("  "));
    }
    Ok(())
}
