//! Single-histogram reweighting: move a measured energy histogram to a
//! nearby temperature and compare against a direct simulation and against
//! exact enumeration.
//!
//! ```bash
//! cargo run --release -p fracton-lab --example reweighting
//! ```

use fracton_lab::exact::enumerate_spectrum;
use fracton_lab::ising::{random_four_body_hypergraph, sample_disorder};
use fracton_lab::mc::{ReplicaState, SpinModel};
use fracton_lab::observables::{reweight_histogram, total_variation, EnergyHistogram};
use fracton_lab::rng::{derive_seed, StreamKey};

fn chain(model: &SpinModel, beta: f64, sweeps: u64, key: StreamKey) -> EnergyHistogram {
    let mut replica = ReplicaState::new_random(model, beta, key);
    for _ in 0..20_000 {
        replica.metropolis_sweep(model);
    }
    let mut hist = EnergyHistogram::new(2);
    for _ in 0..sweeps {
        replica.metropolis_sweep(model);
        hist.record(replica.energy());
    }
    hist
}

fn main() -> fracton_lab::Result<()> {
    let seed = 37u64;
    let h = random_four_body_hypergraph(12, 24, seed)?;
    let d = sample_disorder(&h, 0.2, derive_seed(seed, 1))?;
    let model = SpinModel::new(&h, &d)?;
    let spectrum = enumerate_spectrum(&h, &d)?;

    let beta0 = 0.8;
    let sweeps = 300_000;
    let base = chain(&model, beta0, sweeps, StreamKey::root(seed).child(70));
    println!("base histogram at beta = {beta0}: {} samples", base.total());

    println!("\n{:>8} {:>12} {:>8}", "target", "TV vs direct", "ESS");
    for (i, target) in [0.75, 0.85].into_iter().enumerate() {
        let rw = reweight_histogram(&base, beta0, target)?;
        let direct = chain(&model, target, sweeps, StreamKey::root(seed).child(71 + i as u64));
        let tv = total_variation(rw.normalized(), direct.normalized());
        println!(
            "{target:>8.2} {tv:>12.5} {:>8.0}{}",
            rw.ess,
            if rw.low_ess { " (low)" } else { "" }
        );
    }

    // Closure through the exact spectrum: the degeneracy profile is the
    // infinite-temperature histogram, and reweighting it must reproduce
    // the exact Boltzmann distribution at any temperature.
    let mut level_hist = EnergyHistogram::new(2);
    for (e, g) in spectrum.levels() {
        for _ in 0..g {
            level_hist.record(e);
        }
    }
    for target in [0.5, 1.0] {
        let rw = reweight_histogram(&level_hist, 0.0, target)?;
        let tv = total_variation(rw.normalized(), spectrum.solve(target).p_of_e.clone());
        println!("exact closure 0 -> {target}: TV = {tv:.2e}");
    }
    Ok(())
}
