//! Disorder-ensemble orchestration: independent parallel-tempering runs per
//! realization, the thermalize/sample split, jackknife disorder averages and
//! checkpoint/resume.
//!
//! Realization `i` of a run draws its disorder from the sub-seed
//! `(master_seed, i)` and its replica `r` from the stream `(master_seed,
//! i, r)`, so results are independent of execution order and degree of
//! parallelism. A realization runs `2^tau` thermalization sweeps followed
//! by `2^tau` sampling sweeps with one measurement per sweep; swap passes
//! fire every `swap_cadence` Metropolis sweeps. Realizations that fail the
//! logarithmic-binning equilibration test are excluded from the disorder
//! average and reported in `excluded`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{build_checkerboard, build_haah, CodeKind, Sector, StabilizerCode};
use crate::error::{Error, Result};
use crate::ising::{map_error_model, sample_disorder, CouplingHypergraph, Geometry};
use crate::mc::SpinModel;
use crate::observables::{
    blocked_std_error, equilibration_check, specific_heat, susceptibility,
    CorrelatorAccumulator, CorrelatorProfile, EnergyHistogram, EquilibrationReport,
};
use crate::pt::{build_ladder, LadderScheme, MixingReport, PtState, TemperatureLadder};
use crate::rng::{derive_seed, StreamKey};

/// Parameters of one disorder ensemble at a single `(code, L, p)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub code: CodeKind,
    pub sector: Sector,
    pub l: usize,
    pub p: f64,
    /// Number of independent disorder realizations.
    pub n_disorder: usize,
    /// Ladder size.
    pub n_temps: usize,
    /// `2^tau` sweeps of thermalization followed by `2^tau` of sampling.
    pub tau: u32,
    pub beta_min: f64,
    pub beta_max: f64,
    pub scheme: LadderScheme,
    /// Metropolis sweeps between swap passes.
    pub swap_cadence: usize,
    pub seed: u64,
    /// Accumulate the four-spin correlator (checkerboard geometry only).
    pub measure_correlator: bool,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_disorder == 0 {
            return Err(Error::Config("N_d must be positive".into()));
        }
        if self.tau < 3 {
            return Err(Error::Config(
                "tau must be at least 3 (the equilibration test needs 8 samples)".into(),
            ));
        }
        if self.swap_cadence == 0 {
            return Err(Error::Config("swap_cadence must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidProbability { p: self.p });
        }
        self.ladder()?;
        self.build_code()?;
        Ok(())
    }

    pub fn build_code(&self) -> Result<StabilizerCode> {
        match self.code {
            CodeKind::Checkerboard => build_checkerboard(self.l),
            CodeKind::Haah => build_haah(self.l),
        }
    }

    pub fn build_hypergraph(&self) -> Result<CouplingHypergraph> {
        map_error_model(&self.build_code()?, self.sector)
    }

    pub fn ladder(&self) -> Result<TemperatureLadder> {
        build_ladder(self.beta_min, self.beta_max, self.n_temps, self.scheme)
    }

    pub fn sweeps_per_phase(&self) -> u64 {
        1u64 << self.tau
    }

    /// Canonical key=value text, used for snapshots and fingerprints.
    pub fn canonical_text(&self) -> String {
        let scheme = match self.scheme {
            LadderScheme::Linear => "linear",
            LadderScheme::Geometric => "geometric",
        };
        format!(
            "# fracton-lab run config v1\n[model]\ncode = {}\nL = {}\nsector = {}\np = {}\n\n\
             [sampling]\nN_d = {}\nN_T = {}\ntau = {}\nbeta_min = {}\nbeta_max = {}\n\
             scheme = {}\nswap_cadence = {}\nseed = {}\nmeasure_correlator = {}\n",
            self.code,
            self.l,
            self.sector,
            self.p,
            self.n_disorder,
            self.n_temps,
            self.tau,
            self.beta_min,
            self.beta_max,
            scheme,
            self.swap_cadence,
            self.seed,
            self.measure_correlator,
        )
    }

    pub fn fingerprint(&self) -> u64 {
        fnv1a(self.canonical_text().as_bytes())
    }
}

/// FNV-1a content hash used for config fingerprints and file checksums.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

// ---------------------------------------------------------------------------
// Jackknife
// ---------------------------------------------------------------------------

/// Leave-one-out estimate with bias-corrected value and error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JackknifeEstimate {
    pub value: f64,
    pub error: f64,
    pub n_samples: usize,
}

/// Jackknife a statistic over a sample of values:
/// `value = n t - (n-1) mean(t_i)`, `error = sqrt((n-1)/n sum (t_i - mean)^2)`
/// with `t` the full-sample statistic and `t_i` the leave-one-out ones.
pub fn jackknife<T: Clone, F: Fn(&[T]) -> f64>(values: &[T], stat: F) -> Result<JackknifeEstimate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let full = stat(values);
    let mut loo = Vec::with_capacity(n);
    for i in 0..n {
        let mut subset = Vec::with_capacity(n - 1);
        subset.extend_from_slice(&values[..i]);
        subset.extend_from_slice(&values[i + 1..]);
        loo.push(stat(&subset));
    }
    let mean = loo.iter().sum::<f64>() / n as f64;
    let ss: f64 = loo.iter().map(|t| (t - mean) * (t - mean)).sum();
    Ok(JackknifeEstimate {
        value: n as f64 * full - (n as f64 - 1.0) * mean,
        error: ((n as f64 - 1.0) / n as f64 * ss).sqrt(),
        n_samples: n,
    })
}

// ---------------------------------------------------------------------------
// Per-realization run
// ---------------------------------------------------------------------------

/// Observables of one realization at one ladder slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaObservables {
    pub beta: f64,
    pub mean_energy: f64,
    /// Blocked standard error of the mean energy.
    pub mean_energy_err: f64,
    pub specific_heat: f64,
    pub susceptibility: f64,
    pub histogram: EnergyHistogram,
    pub correlator: Option<Vec<f64>>,
    pub equilibration: EquilibrationReport,
}

/// Everything measured in one disorder realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationBundle {
    pub realization: usize,
    pub config_fingerprint: u64,
    pub disorder_seed: u64,
    pub per_beta: Vec<BetaObservables>,
    pub mixing: MixingReport,
    /// Exclusion flag from the coldest slot's log-binning report: the
    /// realization is kept when that energy series reached a stationary
    /// window (`tau_first` found). Near-transition slots visit both phases
    /// and their bins scatter even when healthy, and requiring the *last*
    /// three bins to agree rejects about half of all stationary chains, so
    /// the keep/drop decision uses the earliest-agreement field of the
    /// deepest temperature; the full per-slot reports stay in `per_beta`.
    pub equilibrated: bool,
}

/// Serializable snapshot of an in-flight realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationCheckpoint {
    magic: String,
    version: u32,
    config: EnsembleConfig,
    realization: usize,
    sweeps_done: u64,
    pt: PtState,
    energy_series: Vec<Vec<i64>>,
    corr_states: Option<Vec<(Vec<f64>, u64)>>,
}

/// An in-progress realization; advance it, checkpoint it, or run it to
/// completion and convert it into a [`RealizationBundle`].
pub struct RealizationRun {
    config: EnsembleConfig,
    realization: usize,
    hypergraph: CouplingHypergraph,
    model: SpinModel,
    disorder_seed: u64,
    pt: PtState,
    /// Metropolis sweeps completed so far (thermalization + sampling).
    sweeps_done: u64,
    /// Full per-slot energy series, one entry per sweep.
    energy_series: Vec<Vec<i64>>,
    corr: Option<Vec<CorrelatorAccumulator>>,
}

impl RealizationRun {
    pub fn new(config: &EnsembleConfig, realization: usize) -> Result<Self> {
        config.validate()?;
        let hypergraph = config.build_hypergraph()?;
        let disorder_seed = derive_seed(config.seed, realization as u64);
        let disorder = sample_disorder(&hypergraph, config.p, disorder_seed)?;
        let model = SpinModel::new(&hypergraph, &disorder)?;
        let ladder = config.ladder()?;
        let key = StreamKey::root(config.seed).child(realization as u64);
        let pt = PtState::new(&model, &ladder, key);
        let corr = if config.measure_correlator
            && matches!(hypergraph.geometry(), Geometry::CheckerboardFcc { .. })
        {
            Some(
                (0..config.n_temps)
                    .map(|_| CorrelatorAccumulator::new(&hypergraph))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(RealizationRun {
            energy_series: vec![Vec::new(); config.n_temps],
            config: config.clone(),
            realization,
            hypergraph,
            model,
            disorder_seed,
            pt,
            sweeps_done: 0,
            corr,
        })
    }

    pub fn total_sweeps(&self) -> u64 {
        2 * self.config.sweeps_per_phase()
    }

    pub fn is_done(&self) -> bool {
        self.sweeps_done >= self.total_sweeps()
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    fn one_sweep(&mut self) {
        let sampling = self.sweeps_done >= self.config.sweeps_per_phase();
        self.pt.sweep_all(&self.model);
        self.sweeps_done += 1;
        for slot in 0..self.config.n_temps {
            let replica = self.pt.replica_at_slot(slot);
            self.energy_series[slot].push(replica.energy());
        }
        if sampling {
            if let Some(accs) = self.corr.as_mut() {
                for (slot, acc) in accs.iter_mut().enumerate() {
                    acc.add(self.pt.replica_at_slot(slot).spins());
                }
            }
        }
        if self.sweeps_done.is_multiple_of(self.config.swap_cadence as u64) {
            self.pt.propose_swaps();
        }
    }

    /// Advance up to `budget` sweeps; returns the number actually run.
    pub fn advance(&mut self, budget: u64) -> u64 {
        let mut done = 0;
        while done < budget && !self.is_done() {
            self.one_sweep();
            done += 1;
        }
        done
    }

    pub fn run_to_completion(&mut self) {
        self.advance(u64::MAX);
    }

    pub fn checkpoint(&self) -> RealizationCheckpoint {
        RealizationCheckpoint {
            magic: "fracton-lab checkpoint".into(),
            version: 1,
            config: self.config.clone(),
            realization: self.realization,
            sweeps_done: self.sweeps_done,
            pt: self.pt.clone(),
            energy_series: self.energy_series.clone(),
            corr_states: self
                .corr
                .as_ref()
                .map(|accs| accs.iter().map(|a| a.state()).collect()),
        }
    }

    /// Rebuild a run from a checkpoint; the checkpoint must match `config`
    /// exactly (version, geometry, every parameter).
    pub fn from_checkpoint(config: &EnsembleConfig, cp: RealizationCheckpoint) -> Result<Self> {
        if cp.magic != "fracton-lab checkpoint" || cp.version != 1 {
            return Err(Error::CheckpointMismatch("unknown checkpoint format".into()));
        }
        if &cp.config != config {
            return Err(Error::CheckpointMismatch(
                "checkpoint was taken under a different configuration".into(),
            ));
        }
        let mut run = RealizationRun::new(config, cp.realization)?;
        if cp.energy_series.len() != config.n_temps || cp.pt.n_temps() != config.n_temps {
            return Err(Error::CheckpointMismatch("ladder size".into()));
        }
        if (0..cp.pt.n_temps()).any(|r| cp.pt.replica(r).spins().len() != run.model.n_spins()) {
            return Err(Error::CheckpointMismatch("spin count".into()));
        }
        run.pt = cp.pt;
        run.pt.rebind(&run.model);
        run.sweeps_done = cp.sweeps_done;
        run.energy_series = cp.energy_series;
        run.corr = match (run.corr.take(), cp.corr_states) {
            (Some(_), Some(states)) => Some(
                states
                    .into_iter()
                    .map(|(sums, n)| CorrelatorAccumulator::restore(&run.hypergraph, sums, n))
                    .collect::<Result<Vec<_>>>()?,
            ),
            (None, None) => None,
            _ => {
                return Err(Error::CheckpointMismatch(
                    "correlator accumulators do not match the configuration".into(),
                ))
            }
        };
        Ok(run)
    }

    /// Finish the measurement bundle; the run must be complete.
    pub fn into_bundle(self) -> Result<RealizationBundle> {
        if !self.is_done() {
            return Err(Error::Internal(
                "into_bundle called before the run completed".into(),
            ));
        }
        let n_spins = self.model.n_spins();
        let n_couplings = self.model.n_couplings() as f64;
        let sample_start = self.config.sweeps_per_phase() as usize;
        let betas = self.pt.betas().to_vec();
        let mut per_beta = Vec::with_capacity(betas.len());
        for (slot, &beta) in betas.iter().enumerate() {
            let full: Vec<f64> = self.energy_series[slot].iter().map(|&e| e as f64).collect();
            let samples = &self.energy_series[slot][sample_start..];
            let samples_f: Vec<f64> = full[sample_start..].to_vec();
            let mean = samples_f.iter().sum::<f64>() / samples_f.len() as f64;
            let order: Vec<f64> = samples_f.iter().map(|e| -e / n_couplings).collect();
            per_beta.push(BetaObservables {
                beta,
                mean_energy: mean,
                mean_energy_err: blocked_std_error(&samples_f),
                specific_heat: specific_heat(&samples_f, beta, n_spins),
                susceptibility: susceptibility(&order, beta, n_spins),
                histogram: EnergyHistogram::from_samples(samples.iter().copied()),
                correlator: self
                    .corr
                    .as_ref()
                    .map(|accs| accs[slot].profile().map(|p| p.g))
                    .transpose()?,
                equilibration: equilibration_check(&full),
            });
        }
        let equilibrated = per_beta
            .last()
            .map(|b| b.equilibration.tau_first.is_some())
            .unwrap_or(false);
        Ok(RealizationBundle {
            realization: self.realization,
            config_fingerprint: self.config.fingerprint(),
            disorder_seed: self.disorder_seed,
            per_beta,
            mixing: self.pt.mixing_report(),
            equilibrated,
        })
    }
}

/// Run one realization start to finish.
pub fn run_realization(config: &EnsembleConfig, realization: usize) -> Result<RealizationBundle> {
    let mut run = RealizationRun::new(config, realization)?;
    run.run_to_completion();
    run.into_bundle()
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Disorder-averaged record at one inverse temperature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaAggregate {
    pub beta: f64,
    pub energy: JackknifeEstimate,
    pub specific_heat: JackknifeEstimate,
    pub susceptibility: JackknifeEstimate,
    pub xi: Option<JackknifeEstimate>,
    /// Equal-weight average of the per-realization normalized histograms.
    pub histogram: Vec<(i64, f64)>,
    /// Raw count-summed histogram across realizations.
    pub histogram_counts: EnergyHistogram,
    pub correlator: Option<CorrelatorProfile>,
}

/// Per-realization summary kept alongside the averages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationDiag {
    pub realization: usize,
    pub equilibrated: bool,
    pub round_trips: u64,
    /// Swap acceptance averaged over the proposed adjacent pairs.
    pub mean_swap_acceptance: Option<f64>,
}

/// Disorder-averaged observables of an ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub config: EnsembleConfig,
    pub n_total: usize,
    pub n_effective: usize,
    pub excluded: Vec<usize>,
    pub records: Vec<BetaAggregate>,
    pub realizations: Vec<RealizationDiag>,
}

/// Aggregate bundles into disorder averages with jackknife errors,
/// excluding realizations that failed equilibration.
pub fn aggregate(config: &EnsembleConfig, bundles: &[RealizationBundle]) -> Result<EnsembleResult> {
    if bundles.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: bundles.len(),
        });
    }
    let fp = config.fingerprint();
    for b in bundles {
        if b.config_fingerprint != fp {
            return Err(Error::CheckpointMismatch(format!(
                "bundle {} belongs to a different configuration",
                b.realization
            )));
        }
    }
    let excluded: Vec<usize> = bundles
        .iter()
        .filter(|b| !b.equilibrated)
        .map(|b| b.realization)
        .collect();
    let kept: Vec<&RealizationBundle> = bundles.iter().filter(|b| b.equilibrated).collect();
    if kept.is_empty() {
        return Err(Error::AllRealizationsFailed);
    }
    if kept.len() < 2 {
        return Err(Error::EquilibrationQuorum {
            kept: kept.len(),
            total: bundles.len(),
        });
    }

    let n_temps = config.n_temps;
    let l = config.l;
    let mut records = Vec::with_capacity(n_temps);
    for slot in 0..n_temps {
        let beta = kept[0].per_beta[slot].beta;
        let energies: Vec<f64> = kept.iter().map(|b| b.per_beta[slot].mean_energy).collect();
        let cvs: Vec<f64> = kept.iter().map(|b| b.per_beta[slot].specific_heat).collect();
        let chis: Vec<f64> = kept
            .iter()
            .map(|b| b.per_beta[slot].susceptibility)
            .collect();
        let mean_stat = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;

        // Averaged normalized histogram, equal weight per realization.
        let mut avg: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
        let mut counts = EnergyHistogram::new(2);
        for b in &kept {
            for (e, p) in b.per_beta[slot].histogram.normalized() {
                *avg.entry(e).or_insert(0.0) += p / kept.len() as f64;
            }
            counts = counts.merge(&b.per_beta[slot].histogram)?;
        }

        // Disorder-averaged correlator profile and its correlation length.
        let profiles: Option<Vec<Vec<f64>>> = kept
            .iter()
            .map(|b| b.per_beta[slot].correlator.clone())
            .collect();
        let (correlator, xi) = match profiles {
            Some(profiles) if kept.len() >= 2 => {
                let mean_profile = |ps: &[Vec<f64>]| -> Vec<f64> {
                    let mut g = vec![0.0; l];
                    for p in ps {
                        for (acc, v) in g.iter_mut().zip(p) {
                            *acc += v / ps.len() as f64;
                        }
                    }
                    g
                };
                let g = mean_profile(&profiles);
                let mut err = vec![0.0; l];
                for (r, e) in err.iter_mut().enumerate() {
                    *e = jackknife(&profiles, |ps| mean_profile(ps)[r])?.error;
                }
                let xi = jackknife_xi(&profiles, l, &mean_profile)?;
                (
                    Some(CorrelatorProfile { l, g, err }),
                    xi,
                )
            }
            _ => (None, None),
        };

        records.push(BetaAggregate {
            beta,
            energy: jackknife(&energies, mean_stat)?,
            specific_heat: jackknife(&cvs, mean_stat)?,
            susceptibility: jackknife(&chis, mean_stat)?,
            xi,
            histogram: avg.into_iter().collect(),
            histogram_counts: counts,
            correlator,
        });
    }

    let realizations = bundles
        .iter()
        .map(|b| {
            let proposed: u64 = b.mixing.pair_proposals.iter().sum();
            let accepted: f64 = b
                .mixing
                .pair_acceptance
                .iter()
                .zip(&b.mixing.pair_proposals)
                .map(|(a, &p)| a.unwrap_or(0.0) * p as f64)
                .sum();
            RealizationDiag {
                realization: b.realization,
                equilibrated: b.equilibrated,
                round_trips: b.mixing.round_trips.iter().sum(),
                mean_swap_acceptance: (proposed > 0).then(|| accepted / proposed as f64),
            }
        })
        .collect();

    Ok(EnsembleResult {
        config: config.clone(),
        n_total: bundles.len(),
        n_effective: kept.len(),
        excluded,
        records,
        realizations,
    })
}

/// Jackknife of the correlation length of the disorder-averaged profile;
/// `None` as soon as any subset renders the estimator undefined.
fn jackknife_xi(
    profiles: &[Vec<f64>],
    l: usize,
    mean_profile: &dyn Fn(&[Vec<f64>]) -> Vec<f64>,
) -> Result<Option<JackknifeEstimate>> {
    let xi_of = |ps: &[Vec<f64>]| -> Option<f64> {
        crate::observables::xi_second_moment(&CorrelatorProfile {
            l,
            g: mean_profile(ps),
            err: vec![0.0; l],
        })
    };
    if xi_of(profiles).is_none() {
        return Ok(None);
    }
    for i in 0..profiles.len() {
        let mut subset = profiles.to_vec();
        subset.remove(i);
        if xi_of(&subset).is_none() {
            return Ok(None);
        }
    }
    Ok(Some(jackknife(profiles, |ps| {
        xi_of(ps).expect("checked above")
    })?))
}

// ---------------------------------------------------------------------------
// Run directory orchestration
// ---------------------------------------------------------------------------

/// Options of a directory-backed ensemble run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Sweeps between mid-flight checkpoints in sequential mode; 0 disables.
    pub checkpoint_interval: u64,
    /// Run realizations in parallel on the current rayon pool.
    pub parallel: bool,
}

pub fn bundle_path(dir: &Path, realization: usize) -> PathBuf {
    dir.join("bundles").join(format!("real_{realization:05}.json"))
}

pub fn checkpoint_path(dir: &Path) -> PathBuf {
    dir.join("checkpoint.json")
}

/// Write a file atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Execute (or resume) an ensemble in `opts.out_dir`: config snapshot,
/// per-realization bundle files, aggregate result. Polls `interrupt`
/// between units of work; on interruption writes a clean checkpoint and
/// returns `Ok(None)`.
pub fn run_ensemble(
    config: &EnsembleConfig,
    opts: &RunOptions,
    interrupt: &AtomicBool,
) -> Result<Option<EnsembleResult>> {
    config.validate()?;
    let dir = &opts.out_dir;
    fs::create_dir_all(dir.join("bundles"))?;

    // Config snapshot: write on first run, verify on resume.
    let snapshot = dir.join("config.cfg");
    if snapshot.exists() {
        let existing = fs::read_to_string(&snapshot)?;
        if fnv1a(existing.as_bytes()) != fnv1a(config.canonical_text().as_bytes()) {
            return Err(Error::CheckpointMismatch(
                "run directory belongs to a different configuration".into(),
            ));
        }
    } else {
        write_atomic(&snapshot, config.canonical_text().as_bytes())?;
    }

    // Load already-finished bundles.
    let fp = config.fingerprint();
    let mut bundles: Vec<Option<RealizationBundle>> = vec![None; config.n_disorder];
    for (i, slot) in bundles.iter_mut().enumerate() {
        let path = bundle_path(dir, i);
        if path.exists() {
            let bundle: RealizationBundle = serde_json::from_slice(&fs::read(&path)?)?;
            if bundle.config_fingerprint != fp || bundle.realization != i {
                return Err(Error::CheckpointMismatch(format!(
                    "bundle file {} does not match the run",
                    path.display()
                )));
            }
            *slot = Some(bundle);
        }
    }

    // Resume a mid-flight realization if a checkpoint is present.
    let cp_path = checkpoint_path(dir);
    if cp_path.exists() {
        let cp: RealizationCheckpoint = serde_json::from_slice(&fs::read(&cp_path)?)?;
        let mut run = RealizationRun::from_checkpoint(config, cp)?;
        let idx = run.realization;
        if bundles[idx].is_none() {
            if !finish_sequential(&mut run, opts, interrupt)? {
                return Ok(None);
            }
            let bundle = run.into_bundle()?;
            write_atomic(&bundle_path(dir, idx), &serde_json::to_vec_pretty(&bundle)?)?;
            bundles[idx] = Some(bundle);
        }
        fs::remove_file(&cp_path)?;
    }

    let missing: Vec<usize> = bundles
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_none())
        .map(|(i, _)| i)
        .collect();

    if opts.parallel {
        // Bundle-granularity checkpointing: in-flight work is discarded on
        // interrupt and redone deterministically on resume.
        let done: Vec<(usize, RealizationBundle)> = missing
            .par_iter()
            .filter_map(|&i| {
                if interrupt.load(Ordering::Relaxed) {
                    return None;
                }
                Some(run_realization(config, i).map(|b| (i, b)))
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, bundle) in done {
            write_atomic(&bundle_path(dir, i), &serde_json::to_vec_pretty(&bundle)?)?;
            bundles[i] = Some(bundle);
        }
    } else {
        for &i in &missing {
            if interrupt.load(Ordering::Relaxed) {
                return Ok(None);
            }
            let mut run = RealizationRun::new(config, i)?;
            if !finish_sequential(&mut run, opts, interrupt)? {
                return Ok(None);
            }
            let bundle = run.into_bundle()?;
            write_atomic(&bundle_path(dir, i), &serde_json::to_vec_pretty(&bundle)?)?;
            bundles[i] = Some(bundle);
            if cp_path.exists() {
                fs::remove_file(&cp_path)?;
            }
        }
    }

    if bundles.iter().any(|b| b.is_none()) {
        return Ok(None);
    }
    let bundles: Vec<RealizationBundle> = bundles.into_iter().map(|b| b.unwrap()).collect();
    let result = aggregate(config, &bundles)?;
    write_tables(dir, &result)?;
    Ok(Some(result))
}

/// Advance a realization to completion in interruptible slices, writing
/// mid-flight checkpoints. Returns false when interrupted (checkpoint
/// written, run abandoned).
fn finish_sequential(
    run: &mut RealizationRun,
    opts: &RunOptions,
    interrupt: &AtomicBool,
) -> Result<bool> {
    let slice = if opts.checkpoint_interval == 0 {
        u64::MAX
    } else {
        opts.checkpoint_interval
    };
    while !run.is_done() {
        run.advance(slice);
        if run.is_done() {
            break;
        }
        write_atomic(
            &checkpoint_path(&opts.out_dir),
            &serde_json::to_vec(&run.checkpoint())?,
        )?;
        if interrupt.load(Ordering::Relaxed) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Emit the plot-ready aggregate tables into the run directory.
pub fn write_tables(dir: &Path, result: &EnsembleResult) -> Result<()> {
    use std::fmt::Write as _;

    let mut table = String::new();
    writeln!(table, "# fracton-lab aggregate v1").unwrap();
    writeln!(
        table,
        "# code={} L={} p={} N_d_effective={} of {}",
        result.config.code, result.config.l, result.config.p, result.n_effective, result.n_total
    )
    .unwrap();
    writeln!(
        table,
        "# beta\te_mean\te_err\tcv\tcv_err\tchi\tchi_err\txi\txi_err  (J = 1, energies total, cv/chi per spin)"
    )
    .unwrap();
    for r in &result.records {
        let (xi, xi_err) = r
            .xi
            .map(|j| (format!("{:.10e}", j.value), format!("{:.10e}", j.error)))
            .unwrap_or_else(|| ("nan".into(), "nan".into()));
        writeln!(
            table,
            "{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{}\t{}",
            r.beta,
            r.energy.value,
            r.energy.error,
            r.specific_heat.value,
            r.specific_heat.error,
            r.susceptibility.value,
            r.susceptibility.error,
            xi,
            xi_err
        )
        .unwrap();
    }
    write_atomic(&dir.join("aggregate.tsv"), table.as_bytes())?;

    for (t, r) in result.records.iter().enumerate() {
        let mut hist = String::new();
        writeln!(hist, "# fracton-lab averaged-histogram v1").unwrap();
        writeln!(hist, "# beta = {:.10e}; columns: energy probability", r.beta).unwrap();
        for (e, p) in &r.histogram {
            writeln!(hist, "{e}\t{p:.10e}").unwrap();
        }
        write_atomic(&dir.join(format!("hist_b{t:03}.tsv")), hist.as_bytes())?;

        // raw count-summed histogram in the canonical histogram format
        let mut buf = Vec::new();
        r.histogram_counts.write(&mut buf)?;
        write_atomic(&dir.join(format!("hist_counts_b{t:03}.txt")), &buf)?;

        if let Some(corr) = &r.correlator {
            let mut buf = Vec::new();
            corr.write(&mut buf)?;
            write_atomic(&dir.join(format!("corr_b{t:03}.tsv")), &buf)?;
        }
    }

    let mut diag = String::new();
    writeln!(diag, "# fracton-lab diagnostics v1").unwrap();
    writeln!(diag, "n_effective\t{}", result.n_effective).unwrap();
    writeln!(
        diag,
        "excluded\t{}",
        result
            .excluded
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )
    .unwrap();
    writeln!(
        diag,
        "# realization\tequilibrated\tround_trips\tmean_swap_acceptance"
    )
    .unwrap();
    for r in &result.realizations {
        writeln!(
            diag,
            "{}\t{}\t{}\t{}",
            r.realization,
            r.equilibrated,
            r.round_trips,
            r.mean_swap_acceptance
                .map(|a| format!("{a:.6}"))
                .unwrap_or_else(|| "nan".into())
        )
        .unwrap();
    }
    write_atomic(&dir.join("diagnostics.tsv"), diag.as_bytes())?;
    Ok(())
}
