//! Brute-force enumeration of small disordered hypergraphs.
//!
//! Ground truth for the Monte Carlo kernels: exact partition functions,
//! energy distributions, moments and free-energy differences, computed by
//! a Gray-code walk over all `2^{N_s}` configurations with incremental
//! energy updates. Everything thermal is evaluated from the exact
//! degeneracy spectrum in log space; no raw exponentials.

use crate::error::{Error, Result};
use crate::ising::{CouplingHypergraph, DisorderRealization, Geometry};
use crate::observables::{pattern_table, EnergyHistogram};

/// Hard cap on enumerable sizes (2^24 = 16.7M states).
pub const MAX_ENUM_SPINS: usize = 24;

/// Exact degeneracy spectrum of one disorder realization, reusable for any
/// temperature.
#[derive(Debug, Clone)]
pub struct EnergySpectrum {
    n_spins: usize,
    n_couplings: usize,
    /// degeneracy[(E + n_couplings) as usize]
    degeneracy: Vec<u64>,
    /// Exact sum of the correlator pattern over all states at each energy,
    /// `[energy_index][r]`; present only for checkerboard geometry.
    correlator_sums: Option<Vec<Vec<i64>>>,
    corr_len: usize,
}

/// Exact thermal solution at one inverse temperature.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub beta: f64,
    pub log_z: f64,
    pub mean_energy: f64,
    pub mean_energy_sq: f64,
    /// Achievable energies with their exact Boltzmann probabilities.
    pub p_of_e: Vec<(i64, f64)>,
    /// Thermal correlator profile, when the geometry supports it.
    pub correlator: Option<Vec<f64>>,
}

/// Enumerate the full spectrum of `(h, d)`.
pub fn enumerate_spectrum(
    h: &CouplingHypergraph,
    d: &DisorderRealization,
) -> Result<EnergySpectrum> {
    let n = h.spin_count();
    if n > MAX_ENUM_SPINS {
        return Err(Error::TooLarge {
            spins: n,
            cap: MAX_ENUM_SPINS,
        });
    }
    if d.eta.len() != h.coupling_count() {
        return Err(Error::InvalidArgument(
            "disorder length does not match coupling count".into(),
        ));
    }

    // Incidence lists.
    let mut incident: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (c, spins) in h.couplings().iter().enumerate() {
        for &s in spins {
            incident[s].push(c as u32);
        }
    }

    let corr_table = match h.geometry() {
        Geometry::CheckerboardFcc { .. } => Some(pattern_table(h)?),
        _ => None,
    };
    let corr_len = corr_table.as_ref().map_or(0, |t| t.len());

    let n_c = h.coupling_count();
    let mut degeneracy = vec![0u64; 2 * n_c + 1];
    let mut correlator_sums =
        corr_table.as_ref().map(|_| vec![vec![0i64; corr_len]; 2 * n_c + 1]);

    let mut spins = vec![1i8; n];
    // Product of the spins of each coupling; eta folded in at energy time.
    let mut prod: Vec<i8> = h.couplings().iter().map(|_| 1i8).collect();
    let mut energy: i64 = -(0..n_c).map(|c| d.eta[c] as i64).sum::<i64>();

    let mut record =
        |energy: i64, spins: &[i8], sums: &mut Option<Vec<Vec<i64>>>| {
            let idx = (energy + n_c as i64) as usize;
            degeneracy[idx] += 1;
            if let (Some(sums), Some(table)) = (sums.as_mut(), corr_table.as_ref()) {
                for (r, quads) in table.iter().enumerate() {
                    let mut acc = 0i64;
                    for q in quads {
                        acc += (spins[q[0]] * spins[q[1]] * spins[q[2]] * spins[q[3]]) as i64;
                    }
                    sums[idx][r] += acc;
                }
            }
        };

    record(energy, &spins, &mut correlator_sums);
    for i in 1u64..(1u64 << n) {
        let j = i.trailing_zeros() as usize;
        // Flip spin j: dE = 2 sum_{c in j} eta_c prod_c (before the flip).
        let mut de = 0i64;
        for &c in &incident[j] {
            de += d.eta[c as usize] as i64 * prod[c as usize] as i64;
        }
        energy += 2 * de;
        for &c in &incident[j] {
            prod[c as usize] = -prod[c as usize];
        }
        spins[j] = -spins[j];
        record(energy, &spins, &mut correlator_sums);
    }

    Ok(EnergySpectrum {
        n_spins: n,
        n_couplings: n_c,
        degeneracy,
        correlator_sums,
        corr_len,
    })
}

impl EnergySpectrum {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Occupied energy levels with exact degeneracies.
    pub fn levels(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.degeneracy
            .iter()
            .enumerate()
            .filter(|(_, &g)| g > 0)
            .map(|(i, &g)| (i as i64 - self.n_couplings as i64, g))
    }

    pub fn min_energy(&self) -> i64 {
        self.levels().next().map(|(e, _)| e).expect("nonempty spectrum")
    }

    /// Number of configurations attaining the minimal energy.
    pub fn ground_state_count(&self) -> u64 {
        let e0 = self.min_energy();
        self.levels().find(|&(e, _)| e == e0).map(|(_, g)| g).unwrap()
    }

    /// Thermal solution at `beta` from the degeneracy spectrum, via
    /// log-sum-exp.
    pub fn solve(&self, beta: f64) -> ExactSolution {
        let levels: Vec<(i64, u64)> = self.levels().collect();
        let log_terms: Vec<f64> = levels
            .iter()
            .map(|&(e, g)| (g as f64).ln() - beta * e as f64)
            .collect();
        let m = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = m + log_terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();

        let mut mean_energy = 0.0;
        let mut mean_energy_sq = 0.0;
        let mut p_of_e = Vec::with_capacity(levels.len());
        let mut correlator = self
            .correlator_sums
            .as_ref()
            .map(|_| vec![0.0f64; self.corr_len]);
        for (idx, (&(e, _), &lt)) in levels.iter().zip(&log_terms).enumerate() {
            let p = (lt - log_z).exp();
            p_of_e.push((e, p));
            mean_energy += e as f64 * p;
            mean_energy_sq += (e as f64) * (e as f64) * p;
            if let (Some(corr), Some(sums)) = (correlator.as_mut(), self.correlator_sums.as_ref())
            {
                let level_idx = (e + self.n_couplings as i64) as usize;
                let g = levels[idx].1 as f64;
                for (r, acc) in corr.iter_mut().enumerate() {
                    // mean pattern value within the level, thermally weighted
                    *acc += p * sums[level_idx][r] as f64
                        / (g * (self.n_spins as f64));
                }
            }
        }
        ExactSolution {
            beta,
            log_z,
            mean_energy,
            mean_energy_sq,
            p_of_e,
            correlator,
        }
    }
}

/// One-shot exact solution.
pub fn enumerate(
    h: &CouplingHypergraph,
    d: &DisorderRealization,
    beta: f64,
) -> Result<ExactSolution> {
    Ok(enumerate_spectrum(h, d)?.solve(beta))
}

impl ExactSolution {
    pub fn variance(&self) -> f64 {
        self.mean_energy_sq - self.mean_energy * self.mean_energy
    }

    /// Total variation distance between the exact distribution and an
    /// empirical histogram.
    pub fn total_variation(&self, hist: &EnergyHistogram) -> f64 {
        crate::observables::total_variation(self.p_of_e.iter().copied(), hist.normalized())
    }
}

/// Free-energy difference for negating the couplings owned by `qubit_set`:
/// `delta_f = (ln Z(eta) - ln Z(eta')) / beta`, exactly 0 at `beta = 0`.
pub fn delta_f(
    h: &CouplingHypergraph,
    d: &DisorderRealization,
    qubit_set: &[usize],
    beta: f64,
) -> Result<f64> {
    Ok(delta_log_z(h, d, qubit_set, beta)?.map_or(0.0, |dlz| dlz / beta))
}

/// `ln Z(eta) - ln Z(eta + lambda)` at `beta`; `None` when `beta = 0`
/// (the partition functions are equal by counting).
pub fn delta_log_z(
    h: &CouplingHypergraph,
    d: &DisorderRealization,
    qubit_set: &[usize],
    beta: f64,
) -> Result<Option<f64>> {
    if beta == 0.0 {
        return Ok(None);
    }
    let flipped = h.flip_couplings(d, qubit_set)?;
    let z1 = enumerate_spectrum(h, d)?.solve(beta).log_z;
    let z2 = enumerate_spectrum(h, &flipped)?.solve(beta).log_z;
    Ok(Some(z1 - z2))
}

/// Degeneracy of the minimum-energy states.
pub fn exact_gsd_count(h: &CouplingHypergraph, d: &DisorderRealization) -> Result<u64> {
    Ok(enumerate_spectrum(h, d)?.ground_state_count())
}
