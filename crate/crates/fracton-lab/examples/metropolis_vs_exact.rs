//! Single-replica kernels against exact enumeration on a small frustrated
//! instance: energy histograms, means and the effect of mixing in
//! microcanonical sweeps.
//!
//! ```bash
//! cargo run --release -p fracton-lab --example metropolis_vs_exact
//! ```

use fracton_lab::exact::enumerate_spectrum;
use fracton_lab::ising::{nishimori_beta, random_four_body_hypergraph, sample_disorder};
use fracton_lab::mc::{ReplicaState, SpinModel};
use fracton_lab::observables::EnergyHistogram;
use fracton_lab::rng::{derive_seed, StreamKey};

fn main() -> fracton_lab::Result<()> {
    let seed = 37u64;
    let h = random_four_body_hypergraph(12, 24, seed)?;
    let d = sample_disorder(&h, 0.2, derive_seed(seed, 1))?;
    let model = SpinModel::new(&h, &d)?;
    let spectrum = enumerate_spectrum(&h, &d)?;
    println!(
        "instance: 12 spins, 24 four-body couplings, p = 0.2; ground energy {} (x{})",
        spectrum.min_energy(),
        spectrum.ground_state_count()
    );

    let sweeps = 200_000u64;
    println!("\n{:>8} {:>12} {:>12} {:>10}", "beta", "<E> exact", "<E> mc", "TV(P(E))");
    for (i, beta) in [0.3, nishimori_beta(0.11)?, 1.5].into_iter().enumerate() {
        let exact = spectrum.solve(beta);
        let mut replica =
            ReplicaState::new_random(&model, beta, StreamKey::root(seed).child(50 + i as u64));
        for _ in 0..20_000 {
            replica.metropolis_sweep(&model);
            replica.microcanonical_sweep(&model);
        }
        let mut hist = EnergyHistogram::new(2);
        let mut sum = 0.0;
        for _ in 0..sweeps {
            replica.metropolis_sweep(&model);
            replica.microcanonical_sweep(&model);
            hist.record(replica.energy());
            sum += replica.energy() as f64;
        }
        println!(
            "{beta:>8.4} {:>12.5} {:>12.5} {:>10.5}",
            exact.mean_energy,
            sum / sweeps as f64,
            exact.total_variation(&hist)
        );
    }

    // Microcanonical sweeps never change the energy; they only move along
    // the flat directions.
    let mut replica = ReplicaState::new_random(&model, 0.9, StreamKey::root(seed).child(60));
    for _ in 0..1000 {
        replica.metropolis_sweep(&model);
    }
    let before = replica.energy();
    let spins_before = replica.spins().to_vec();
    for _ in 0..100 {
        replica.microcanonical_sweep(&model);
    }
    println!(
        "\n100 microcanonical sweeps: energy {before} -> {} (spins moved: {})",
        replica.energy(),
        replica.spins() != &spins_before[..]
    );
    Ok(())
}
