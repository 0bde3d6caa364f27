//! Single-replica Markov kernels: Metropolis sweeps and zero-cost
//! microcanonical sweeps with incremental integer energy bookkeeping.
//!
//! "Overrelaxation" for +-1 spins is realized as microcanonical zero-cost
//! flips: a sweep visits every spin and flips it iff the move is exactly
//! free, which accelerates motion along the flat directions opened by the
//! subsystem symmetries while preserving the energy bit-exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{CouplingHypergraph, DisorderRealization};
use crate::rng::{Stream, StreamKey};

/// Precomputed neighborhood tables: per-spin incident couplings and
/// per-coupling spin lists, flattened.
#[derive(Debug, Clone)]
pub struct AdjacencyIndex {
    n_spins: usize,
    n_couplings: usize,
    spin_offsets: Vec<u32>,
    spin_couplings: Vec<u32>,
    coupling_offsets: Vec<u32>,
    coupling_spins: Vec<u32>,
}

impl AdjacencyIndex {
    pub fn new(h: &CouplingHypergraph) -> Self {
        let n_spins = h.spin_count();
        let mut degree = vec![0u32; n_spins];
        for spins in h.couplings() {
            for &s in spins {
                degree[s] += 1;
            }
        }
        let mut spin_offsets = vec![0u32; n_spins + 1];
        for i in 0..n_spins {
            spin_offsets[i + 1] = spin_offsets[i] + degree[i];
        }
        let mut cursor = spin_offsets.clone();
        let mut spin_couplings = vec![0u32; spin_offsets[n_spins] as usize];
        let mut coupling_offsets = Vec::with_capacity(h.coupling_count() + 1);
        let mut coupling_spins = Vec::new();
        coupling_offsets.push(0u32);
        for (c, spins) in h.couplings().iter().enumerate() {
            for &s in spins {
                spin_couplings[cursor[s] as usize] = c as u32;
                cursor[s] += 1;
            }
            coupling_spins.extend(spins.iter().map(|&s| s as u32));
            coupling_offsets.push(coupling_spins.len() as u32);
        }
        AdjacencyIndex {
            n_spins,
            n_couplings: h.coupling_count(),
            spin_offsets,
            spin_couplings,
            coupling_offsets,
            coupling_spins,
        }
    }

    #[inline]
    pub fn couplings_of(&self, spin: usize) -> &[u32] {
        &self.spin_couplings[self.spin_offsets[spin] as usize..self.spin_offsets[spin + 1] as usize]
    }

    #[inline]
    pub fn spins_of(&self, coupling: usize) -> &[u32] {
        &self.coupling_spins
            [self.coupling_offsets[coupling] as usize..self.coupling_offsets[coupling + 1] as usize]
    }

    pub fn degree(&self, spin: usize) -> usize {
        self.couplings_of(spin).len()
    }
}

/// A hypergraph bound to one disorder realization; the immutable input of
/// the kernels.
#[derive(Debug, Clone)]
pub struct SpinModel {
    adj: AdjacencyIndex,
    eta: Vec<i8>,
}

impl SpinModel {
    pub fn new(h: &CouplingHypergraph, d: &DisorderRealization) -> Result<Self> {
        if d.eta.len() != h.coupling_count() {
            return Err(Error::InvalidArgument(
                "disorder length does not match coupling count".into(),
            ));
        }
        Ok(SpinModel {
            adj: AdjacencyIndex::new(h),
            eta: d.eta.clone(),
        })
    }

    pub fn n_spins(&self) -> usize {
        self.adj.n_spins
    }

    pub fn n_couplings(&self) -> usize {
        self.adj.n_couplings
    }

    pub fn adjacency(&self) -> &AdjacencyIndex {
        &self.adj
    }

    pub fn eta(&self) -> &[i8] {
        &self.eta
    }

    /// Full recount of `E = -sum_c eta_c prod sigma`.
    pub fn energy(&self, spins: &[i8]) -> i64 {
        let mut e = 0i64;
        for c in 0..self.adj.n_couplings {
            let mut prod = self.eta[c] as i64;
            for &s in self.adj.spins_of(c) {
                prod *= spins[s as usize] as i64;
            }
            e -= prod;
        }
        e
    }
}

/// Acceptance rule of the Metropolis kernel. `Corrupted` deliberately uses
/// a wrong acceptance probability; it exists only as a negative control for
/// the oracle comparison suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptanceRule {
    Exact,
    Corrupted,
}

/// One replica: spin configuration, cached energy, inverse temperature and
/// its private random stream. The cached energy equals a full recount at
/// all times (verified in debug builds).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaState {
    spins: Vec<i8>,
    energy: i64,
    beta: f64,
    rng: Stream,
    sweep_count: u64,
    #[serde(skip)]
    products: Vec<i8>,
    #[serde(skip)]
    order: Vec<u32>,
}

impl ReplicaState {
    /// Fresh replica with spins drawn uniformly from the stream.
    pub fn new_random(model: &SpinModel, beta: f64, key: StreamKey) -> Self {
        let mut rng = Stream::new(key);
        let spins: Vec<i8> = (0..model.n_spins()).map(|_| rng.sign(0.5)).collect();
        let mut state = ReplicaState {
            spins,
            energy: 0,
            beta,
            rng,
            sweep_count: 0,
            products: Vec::new(),
            order: Vec::new(),
        };
        state.rebind(model);
        state
    }

    /// Replica starting from a given configuration.
    pub fn from_spins(model: &SpinModel, spins: Vec<i8>, beta: f64, key: StreamKey) -> Self {
        assert_eq!(spins.len(), model.n_spins());
        let mut state = ReplicaState {
            spins,
            energy: 0,
            beta,
            rng: Stream::new(key),
            sweep_count: 0,
            products: Vec::new(),
            order: Vec::new(),
        };
        state.rebind(model);
        state
    }

    /// Rebuild the per-coupling product cache and the cached energy;
    /// required after deserialization.
    pub fn rebind(&mut self, model: &SpinModel) {
        let adj = &model.adj;
        self.products = (0..adj.n_couplings)
            .map(|c| {
                adj.spins_of(c)
                    .iter()
                    .map(|&s| self.spins[s as usize])
                    .product()
            })
            .collect();
        self.energy = self
            .products
            .iter()
            .zip(&model.eta)
            .map(|(&p, &eta)| -((p * eta) as i64))
            .sum();
        self.order = (0..adj.n_spins as u32).collect();
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn energy(&self) -> i64 {
        self.energy
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta;
    }

    pub fn sweep_count(&self) -> u64 {
        self.sweep_count
    }

    /// Energy change of flipping one spin:
    /// `dE = 2 sum_{c in i} eta_c prod_{j in c} sigma_j`.
    #[inline]
    pub fn local_delta_e(&self, model: &SpinModel, spin: usize) -> i64 {
        let mut de = 0i64;
        for &c in model.adj.couplings_of(spin) {
            de += (model.eta[c as usize] * self.products[c as usize]) as i64;
        }
        2 * de
    }

    #[inline]
    fn flip(&mut self, model: &SpinModel, spin: usize, de: i64) {
        self.spins[spin] = -self.spins[spin];
        self.energy += de;
        for &c in model.adj.couplings_of(spin) {
            self.products[c as usize] = -self.products[c as usize];
        }
    }

    /// One Metropolis sweep: every spin proposed once in a freshly drawn
    /// random order; moves with `dE <= 0` always accepted, others with
    /// probability `e^{-beta dE}`. Returns the number of accepted moves.
    pub fn metropolis_sweep(&mut self, model: &SpinModel) -> usize {
        self.metropolis_sweep_with_rule(model, AcceptanceRule::Exact)
    }

    pub fn metropolis_sweep_with_rule(
        &mut self,
        model: &SpinModel,
        rule: AcceptanceRule,
    ) -> usize {
        debug_assert_eq!(self.spins.len(), model.n_spins());
        let mut order = std::mem::take(&mut self.order);
        self.rng.shuffle(&mut order);
        let mut accepted = 0;
        for &i in &order {
            let i = i as usize;
            let de = self.local_delta_e(model, i);
            let take = if de <= 0 {
                // draw anyway to keep the stream advance independent of the
                // trajectory shape
                self.rng.next_f64();
                true
            } else {
                let threshold = match rule {
                    AcceptanceRule::Exact => (-self.beta * de as f64).exp(),
                    AcceptanceRule::Corrupted => (-self.beta * de as f64 / 3.0).exp(),
                };
                self.rng.next_f64() < threshold
            };
            if take {
                self.flip(model, i, de);
                accepted += 1;
            }
        }
        self.order = order;
        self.sweep_count += 1;
        debug_assert_eq!(self.energy, model.energy(&self.spins));
        accepted
    }

    /// One microcanonical sweep: every spin visited in a freshly drawn
    /// random order and flipped iff `dE = 0`. The energy is preserved
    /// exactly; does not advance the Metropolis sweep counter.
    pub fn microcanonical_sweep(&mut self, model: &SpinModel) {
        let mut order = std::mem::take(&mut self.order);
        self.rng.shuffle(&mut order);
        for &i in &order {
            let i = i as usize;
            if self.local_delta_e(model, i) == 0 {
                self.flip(model, i, 0);
            }
        }
        self.order = order;
        debug_assert_eq!(self.energy, model.energy(&self.spins));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_checkerboard, Sector};
    use crate::ising::{map_error_model, DisorderRealization};

    fn clean_checkerboard_model(l: usize) -> SpinModel {
        let code = build_checkerboard(l).unwrap();
        let h = map_error_model(&code, Sector::X).unwrap();
        let d = DisorderRealization::clean(h.coupling_count());
        SpinModel::new(&h, &d).unwrap()
    }

    #[test]
    fn every_spin_touches_eight_couplings() {
        let model = clean_checkerboard_model(4);
        for s in 0..model.n_spins() {
            assert_eq!(model.adjacency().degree(s), 8);
        }
        let code = crate::code::build_haah(2).unwrap();
        let h = map_error_model(&code, Sector::Z).unwrap();
        let model = SpinModel::new(&h, &DisorderRealization::clean(h.coupling_count())).unwrap();
        for s in 0..model.n_spins() {
            assert_eq!(model.adjacency().degree(s), 8);
        }
    }

    #[test]
    fn ground_state_delta_e_is_sixteen() {
        let model = clean_checkerboard_model(4);
        let spins = vec![1i8; model.n_spins()];
        let state = ReplicaState::from_spins(&model, spins, 1.0, StreamKey::root(1));
        for i in 0..model.n_spins() {
            assert_eq!(state.local_delta_e(&model, i), 16);
        }
    }

    #[test]
    fn plane_flipped_ground_state_delta_e_is_sixteen() {
        let code = build_checkerboard(4).unwrap();
        let h = map_error_model(&code, Sector::X).unwrap();
        let d = DisorderRealization::clean(h.coupling_count());
        let model = SpinModel::new(&h, &d).unwrap();
        let mut spins = vec![1i8; h.spin_count()];
        for (i, p) in h.spin_positions().iter().enumerate() {
            if p[2] == 2 {
                spins[i] = -1;
            }
        }
        let state = ReplicaState::from_spins(&model, spins, 1.0, StreamKey::root(1));
        assert_eq!(state.energy(), -64);
        for i in 0..model.n_spins() {
            assert_eq!(state.local_delta_e(&model, i), 16);
        }
    }

    #[test]
    fn cache_stays_coherent_under_sweeps() {
        let model = clean_checkerboard_model(4);
        let mut state = ReplicaState::new_random(&model, 0.45, StreamKey::root(5));
        for _ in 0..50 {
            state.metropolis_sweep(&model);
            state.microcanonical_sweep(&model);
        }
        assert_eq!(state.energy(), model.energy(state.spins()));
        assert_eq!(state.sweep_count(), 50);
    }

    #[test]
    fn infinite_temperature_accepts_everything() {
        let model = clean_checkerboard_model(2);
        let mut state = ReplicaState::new_random(&model, 0.0, StreamKey::root(9));
        for _ in 0..20 {
            assert_eq!(state.metropolis_sweep(&model), model.n_spins());
        }
    }

    #[test]
    fn deep_freeze_keeps_ground_state() {
        let model = clean_checkerboard_model(4);
        let spins = vec![1i8; model.n_spins()];
        let mut state = ReplicaState::from_spins(&model, spins, 50.0, StreamKey::root(2));
        let mut accepted = 0;
        for _ in 0..100 {
            accepted += state.metropolis_sweep(&model);
        }
        assert_eq!(accepted, 0);
        assert_eq!(state.energy(), -64);
    }

    #[test]
    fn microcanonical_preserves_energy_exactly() {
        let model = clean_checkerboard_model(4);
        let mut state = ReplicaState::new_random(&model, 0.3, StreamKey::root(11));
        for _ in 0..10 {
            state.metropolis_sweep(&model);
        }
        let e = state.energy();
        for _ in 0..50 {
            state.microcanonical_sweep(&model);
            assert_eq!(state.energy(), e);
        }
    }

    #[test]
    fn ground_state_has_no_free_moves() {
        let model = clean_checkerboard_model(4);
        let spins = vec![1i8; model.n_spins()];
        let mut state = ReplicaState::from_spins(&model, spins.clone(), 1.0, StreamKey::root(3));
        state.microcanonical_sweep(&model);
        assert_eq!(state.spins(), &spins[..]);
    }

    #[test]
    fn trajectories_are_deterministic() {
        let model = clean_checkerboard_model(4);
        let run = |key: StreamKey| {
            let mut state = ReplicaState::new_random(&model, 0.6, key);
            for _ in 0..30 {
                state.metropolis_sweep(&model);
                state.microcanonical_sweep(&model);
            }
            (state.spins().to_vec(), state.energy())
        };
        let key = StreamKey::root(123).child(7);
        assert_eq!(run(key), run(key));
    }

    #[test]
    fn mixed_chain_matches_exact_distribution() {
        // Interleaving microcanonical sweeps must leave the stationary
        // energy distribution unchanged.
        use crate::exact::enumerate_spectrum;
        use crate::ising::{nishimori_beta, random_four_body_hypergraph, sample_disorder};
        use crate::observables::EnergyHistogram;
        use crate::rng::derive_seed;

        let seed = 37u64;
        let h = random_four_body_hypergraph(12, 24, seed).unwrap();
        let d = sample_disorder(&h, 0.2, derive_seed(seed, 1)).unwrap();
        let model = SpinModel::new(&h, &d).unwrap();
        let beta = nishimori_beta(0.11).unwrap();
        let exact = enumerate_spectrum(&h, &d).unwrap().solve(beta);

        let mut state = ReplicaState::new_random(&model, beta, StreamKey::root(seed).child(400));
        for _ in 0..20_000 {
            state.metropolis_sweep(&model);
            state.microcanonical_sweep(&model);
        }
        let mut hist = EnergyHistogram::new(2);
        for _ in 0..300_000 {
            state.metropolis_sweep(&model);
            state.microcanonical_sweep(&model);
            hist.record(state.energy());
        }
        let tv = exact.total_variation(&hist);
        assert!(tv <= 0.02, "mixed chain TV {tv}");
    }

    #[test]
    fn serde_round_trip_rebinds() {
        let model = clean_checkerboard_model(2);
        let mut state = ReplicaState::new_random(&model, 0.8, StreamKey::root(4));
        for _ in 0..5 {
            state.metropolis_sweep(&model);
        }
        let json = serde_json::to_string(&state).unwrap();
        let mut back: ReplicaState = serde_json::from_str(&json).unwrap();
        back.rebind(&model);
        for _ in 0..5 {
            let a = state.metropolis_sweep(&model);
            let b = back.metropolis_sweep(&model);
            assert_eq!(a, b);
        }
        assert_eq!(state.spins(), back.spins());
        assert_eq!(state.energy(), back.energy());
    }
}
