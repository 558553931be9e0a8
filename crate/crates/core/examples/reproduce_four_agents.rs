//! Four agents on a ring estimate θ = [−1, 2] with event-triggered
//! communication; prints the communication rate and final errors.
//!
//!     cargo run --release --example reproduce_four_agents [seed]

use etde::metrics::communication_stats;
use etde::{load_config, run_simulation};

fn main() -> etde::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_sec4.json");
    let (mut config, _) = load_config(path)?;
    if let Some(seed) = std::env::args().nth(1) {
        config.seed = Some(seed.parse().expect("seed must be an integer"));
    }
    let trace = run_simulation(&config)?;
    let stats = communication_stats(&trace);

    println!("seed {} horizon {}", trace.seed, trace.horizon);
    println!("communication rate {:.3}% of time-driven", stats.communication_rate * 100.0);
    for (i, (x, err)) in trace.last().estimates.iter().zip(&trace.last().error_norms).enumerate() {
        let intervals = &stats.interval_stats[i];
        println!(
            "agent {i}: x = [{:+.4}, {:+.4}]  |x - θ| = {err:.4}  broadcasts = {}  interval growth = {:.0}x",
            x[0],
            x[1],
            trace.trigger_times[i].len(),
            intervals.growth_ratio.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
