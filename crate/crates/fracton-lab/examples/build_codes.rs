//! Construct the two stabilizer codes and inspect their structure:
//! stabilizer counts, supports, syndromes of single-qubit errors, and
//! logical-qubit counts from GF(2) ranks.
//!
//! ```bash
//! cargo run --release -p fracton-lab --example build_codes
//! ```

use fracton_lab::code::{build_checkerboard, build_haah, ErrorConfig, Sector};

fn main() -> fracton_lab::Result<()> {
    println!("== checkerboard code ==");
    for l in [2usize, 4, 6] {
        let code = build_checkerboard(l)?;
        println!(
            "L = {l}: {} qubits, {} X-stabilizers, {} Z-stabilizers, {} logical qubits",
            code.qubit_count(),
            code.stabilizers(Sector::X).len(),
            code.stabilizers(Sector::Z).len(),
            code.logical_qubit_count()
        );
    }

    let code = build_checkerboard(4)?;
    println!(
        "\nfirst X stabilizer support (qubit indices): {:?}",
        code.stabilizers(Sector::X)[0]
    );

    // A single error excites exactly four stabilizers of the dual sector:
    // the hallmark of fracton codes is that these four excitations cannot
    // be moved individually by any local operator.
    let syndrome = code.syndrome(&ErrorConfig::new(Sector::X, [21]))?;
    println!(
        "single X error on qubit 21 violates Z-stabilizers {:?}",
        syndrome.violated
    );

    println!("\n== cubic code ==");
    for l in [2usize, 3, 4] {
        let code = build_haah(l)?;
        println!(
            "L = {l}: {} qubits (2 families), {} X-stabilizers, {} Z-stabilizers, {} logical qubits",
            code.qubit_count(),
            code.stabilizers(Sector::X).len(),
            code.stabilizers(Sector::Z).len(),
            code.logical_qubit_count()
        );
    }

    let code = build_haah(2)?;
    let syndrome = code.syndrome(&ErrorConfig::new(Sector::Z, [5]))?;
    println!(
        "\nsingle Z error on qubit 5 violates X-stabilizers {:?}",
        syndrome.violated
    );

    // Commutation sanity check across both codes: every X support meets
    // every Z support an even number of times.
    let code = build_haah(3)?;
    let all_even = code.stabilizers(Sector::X).iter().all(|a| {
        code.stabilizers(Sector::Z).iter().all(|b| {
            let set: std::collections::BTreeSet<_> = a.iter().collect();
            b.iter().filter(|q| set.contains(q)).count() % 2 == 0
        })
    });
    println!("\nall cubic-code stabilizer pairs commute at L = 3: {all_even}");
    Ok(())
}
