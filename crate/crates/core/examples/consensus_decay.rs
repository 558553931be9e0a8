//! Disagreement between agents, and distance to the centralized estimator,
//! along one run with all three estimators driven by the same noise.
//!
//!     cargo run --release --example consensus_decay

use etde::metrics::{centralized_gap, consensus_decay};
use etde::{run_simulation, Mode, SimConfig};

fn main() -> etde::Result<()> {
    let trace = run_simulation(&SimConfig { mode: Mode::Compare, ..SimConfig::four_agent_demo() })?;
    let consensus = consensus_decay(&trace, 0.0);
    let gap = centralized_gap(&trace, 0.0)?;
    println!("{:>6}  {:>14}  {:>14}", "t", "max |x_i-avg|", "max |x_i-u|");
    for t in [10, 100, 1_000, 3_000, 10_000] {
        println!("{t:>6}  {:>14.3e}  {:>14.3e}", consensus.value_at(t).unwrap(), gap.value_at(t).unwrap());
    }
    println!(
        "log-log tail slopes: consensus {:.2}, centralized gap {:.2}",
        consensus.tail_slope.unwrap(),
        gap.tail_slope.unwrap()
    );
    Ok(())
}
