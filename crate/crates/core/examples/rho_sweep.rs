//! Communication/accuracy trade-off over the threshold decay exponent ρ.
//!
//!     cargo run --release --example rho_sweep

use etde::cli::{parse_grid, sweep};
use etde::SimConfig;

fn main() -> etde::Result<()> {
    let grid = parse_grid("0.3:1.2:0.1").map_err(etde::Error::Parse)?;
    println!("{:>5}  {:>9}  {:>10}", "rho", "rate", "mean error");
    for row in sweep(&SimConfig::four_agent_demo(), &grid)? {
        println!("{:>5.2}  {:>8.3}%  {:>10.5}", row.rho, row.communication_rate * 100.0, row.mean_final_error);
    }
    Ok(())
}
