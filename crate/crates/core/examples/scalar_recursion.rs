//! The scalar recursion z(t+1) = (1 − r₁(t))z(t) + r₂(t) behind the
//! convergence-rate arguments, scaled by (t+1)^δ₀.
//!
//!     cargo run --release --example scalar_recursion

use etde::asymptotics::{ScalarRecursion, ScalarRecursionParams};

fn main() -> etde::Result<()> {
    let cases = [
        ScalarRecursionParams { z0: 10.0, a1: 1.0, a2: 1.0, delta1: 0.5, delta2: 1.0, delta0: 0.4 },
        ScalarRecursionParams { z0: 10.0, a1: 1.0, a2: 1.0, delta1: 0.2, delta2: 1.5, delta0: 0.3 },
        ScalarRecursionParams { z0: 10.0, a1: 2.0, a2: 1.0, delta1: 1.0, delta2: 2.0, delta0: 0.5 },
    ];
    let checkpoints = [10, 1_000, 100_000, 1_000_000];
    for p in cases {
        let values: Vec<String> = ScalarRecursion::new(p)?
            .take(1_000_001)
            .filter(|(t, _)| checkpoints.contains(t))
            .map(|(t, v)| format!("t={t}: {v:.3e}"))
            .collect();
        println!(
            "δ1={} δ2={} δ0={} (tail exponent {:+.2}): {}",
            p.delta1,
            p.delta2,
            p.delta0,
            p.tail_exponent(),
            values.join(", ")
        );
    }
    Ok(())
}
