//! The entropy-duality toolkit: binary-entropy sums of known thresholds,
//! dual-threshold solving, the self-dual fixed point, and the exact parity
//! hierarchy of the replicated Boltzmann factors on the Nishimori line.
//!
//! ```bash
//! cargo run --release -p fracton-lab --example nishimori_duality
//! ```

use fracton_lab::duality::{
    binary_entropy, builtin_threshold_table, dual_threshold, qgv_check, replicated_factors,
    self_dual_point,
};
use fracton_lab::ising::nishimori_beta;

fn main() -> fracton_lab::Result<()> {
    println!("reference threshold table:");
    println!(
        "{:<14} {:>8} {:>8} {:>10} {:>10}",
        "code", "p_x", "p_z", "H+H", "quoted"
    );
    let report = qgv_check(&builtin_threshold_table())?;
    for row in &report.rows {
        println!(
            "{:<14} {:>8.4} {:>8.4} {:>10.4} {:>10.4}",
            row.entry.code, row.entry.p_x, row.entry.p_z, row.computed_sum, row.entry.quoted_sum
        );
    }

    let p_star = self_dual_point();
    println!("\nself-dual fixed point: p* = {p_star:.10} (H(p*) = {:.12})", binary_entropy(p_star)?);

    println!("\ndual thresholds H(p2) = 1 - H(p1):");
    for p1 in [0.2327, 0.152, 0.276] {
        println!("  p1 = {p1:.4} -> p2 = {:.6}", dual_threshold(p1)?);
    }

    // On the Nishimori line the dual Boltzmann factors obey an exact
    // parity hierarchy: x_k*/x_0* = (1-2p)^k for even k and (1-2p)^{k+1}
    // for odd k.
    let p = 0.11;
    let coupling = nishimori_beta(p)?;
    let f = replicated_factors(4, coupling, p)?;
    println!("\nreplicated factors at n = 4, p = {p}, K = beta_N(p) = {coupling:.6}:");
    println!("{:>3} {:>14} {:>14} {:>14}", "k", "x_k*/x_0*", "(1-2p)^k", "(1-2p)^(k+1)");
    for k in 0..=4 {
        println!(
            "{k:>3} {:>14.10} {:>14.10} {:>14.10}",
            f.x_star[k] / f.x_star[0],
            (1.0 - 2.0 * p).powi(k as i32),
            (1.0 - 2.0 * p).powi(k as i32 + 1)
        );
    }
    Ok(())
}
