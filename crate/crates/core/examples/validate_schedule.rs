//! Checks gain and threshold exponents against the convergence conditions
//! and shows how the sparse-trigger condition depends on the moment order ε₁.
//!
//!     cargo run --release --example validate_schedule

use etde::{validate, ScheduleParams};

fn main() -> etde::Result<()> {
    for epsilon1 in [4.0, 8.0, 18.0] {
        let params = ScheduleParams::new(1.0, 1.0, 0.7, 0.5, vec![0.6; 4], epsilon1)?;
        let r = validate(&params);
        println!(
            "eps1 = {epsilon1:>4}: gains ok {}, unbiased {}, bounded {}, sparse triggers {}, consensus tau0 < {:.3}",
            r.assumption4_ok, r.unbiased_ok, r.bounded_ok, r.sparse_trigger_ok, r.consensus_tau0_sup
        );
    }
    // Thresholds that decay too slowly relative to the gains.
    let r = validate(&ScheduleParams::uniform(1.0, 1.0, 0.7, 0.5, 0.1, 4)?);
    println!("rho = 0.1: all ok = {}", r.all_ok());
    for m in &r.messages {
        println!("  - {m}");
    }
    Ok(())
}
