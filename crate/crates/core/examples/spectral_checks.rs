//! Graph and sensing spectra: algebraic connectivity, the collective
//! Gramian, and the first step after which `β(t)𝓛⊗I + α(t)D_H` has its
//! spectrum in (0, 1).
//!
//!     cargo run --release --example spectral_checks

use etde::asymptotics::spectral_condition;
use etde::{gramian, is_connected, spectral_data, SimConfig};

fn main() -> etde::Result<()> {
    let scenario = SimConfig::four_agent_demo().scenario()?;
    let spectrum = spectral_data(&scenario.network)?;
    println!("laplacian eigenvalues {:?}", spectrum.eigenvalues);
    println!("lambda2 = {:.12}, connected = {}", spectrum.lambda2, is_connected(&scenario.network, 1e-9));

    let g = gramian(&scenario.system, 1e-9)?;
    println!("G = {}", g.g);
    println!("lambda_min(G) = {:.12} (closed form {:.12})", g.min_eigenvalue, (9.0 - 45f64.sqrt()) / 2.0);

    let cond = spectral_condition(&scenario.network, &scenario.system, &scenario.schedule, 1_000_000)?;
    println!(
        "T_star = {}, m0 = {:.4}, spectrum stays in (0,1) through t = {}: {}",
        cond.t_star, cond.m0, cond.t_max, cond.holds_through_scan
    );
    Ok(())
}
