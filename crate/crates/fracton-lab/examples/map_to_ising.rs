//! Compile code sectors into disordered multi-spin Ising models and check
//! the structural fingerprints of the mapping: coupling shapes, the
//! syndrome/frustration correspondence, Nishimori conversions, and
//! ground-state degeneracies.
//!
//! ```bash
//! cargo run --release -p fracton-lab --example map_to_ising
//! ```

use fracton_lab::code::{build_checkerboard, build_haah, ErrorConfig, Sector};
use fracton_lab::ising::{map_error_model, nishimori_beta, sample_disorder, Parity};

fn main() -> fracton_lab::Result<()> {
    let code = build_checkerboard(4)?;
    let h = map_error_model(&code, Sector::X)?;
    println!(
        "checkerboard L=4, X errors -> {} spins on an FCC lattice, {} four-body couplings",
        h.spin_count(),
        h.coupling_count()
    );
    let plus = h
        .anchors()
        .iter()
        .filter(|a| a.parity == Parity::Plus)
        .count();
    println!("couplings split into {plus} upward and {} downward tetrahedra", h.coupling_count() - plus);

    // The spins of the coupling owned by a qubit are exactly the
    // stabilizers its error would violate.
    let q = 13;
    let syndrome = code.syndrome(&ErrorConfig::new(Sector::X, [q]))?;
    let coupling = h.coupling_of_qubit(q)?;
    println!(
        "qubit {q}: coupling spins {:?} == violated stabilizers {:?}",
        h.couplings()[coupling],
        syndrome.violated
    );

    // Quenched disorder at rate p, reproducible from the seed.
    let d = sample_disorder(&h, 0.107, 42)?;
    let flipped = d.eta.iter().filter(|&&e| e < 0).count();
    println!(
        "disorder at p = 0.107, seed 42: {flipped}/{} antiferromagnetic couplings",
        h.coupling_count()
    );
    println!(
        "Nishimori temperature of p = 0.107: beta_N = {:.6}",
        nishimori_beta(0.107)?
    );

    println!("\nclean ground-state degeneracy exponents (GSD = 2^g):");
    for l in [2usize, 4, 6, 8] {
        let h = map_error_model(&build_checkerboard(l)?, Sector::X)?;
        println!("  checkerboard L = {l}: g = {}", h.classical_gsd_exponent());
    }
    for l in [2usize, 3, 4, 6, 8] {
        let h = map_error_model(&build_haah(l)?, Sector::X)?;
        println!("  fractal model  L = {l}: g = {}", h.classical_gsd_exponent());
    }

    // The exported text format round-trips exactly.
    let mut buf = Vec::new();
    h.write(&mut buf)?;
    let back = fracton_lab::ising::read_hypergraph(&buf[..], "example")?;
    println!(
        "\nhypergraph file round-trip: {} bytes, exact = {}",
        buf.len(),
        back == h
    );
    Ok(())
}
