//! Measurement and analysis: energy histograms, single-histogram
//! reweighting, the four-spin correlator with its second-moment correlation
//! length, fluctuation observables, and the logarithmic-binning
//! equilibration test.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{CouplingHypergraph, Geometry};

// ---------------------------------------------------------------------------
// Energy histograms
// ---------------------------------------------------------------------------

/// Exact integer-energy histogram. Bin width defaults to 2, the step
/// between achievable energies of the +-1-coupling models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyHistogram {
    e_min: i64,
    bin_width: i64,
    counts: Vec<u64>,
    total: u64,
}

impl EnergyHistogram {
    pub fn new(bin_width: i64) -> Self {
        assert!(bin_width > 0);
        EnergyHistogram {
            e_min: 0,
            bin_width,
            counts: Vec::new(),
            total: 0,
        }
    }

    /// Lossless accumulation of an integer energy series (bin width 2).
    pub fn from_samples(samples: impl IntoIterator<Item = i64>) -> Self {
        let mut h = EnergyHistogram::new(2);
        for e in samples {
            h.record(e);
        }
        h
    }

    pub fn record(&mut self, e: i64) {
        if self.counts.is_empty() {
            self.e_min = e;
            self.counts.push(0);
        }
        let mut idx = e - self.e_min;
        if idx < 0 {
            // grow downward, keeping bin alignment
            let extra = (-idx + self.bin_width - 1) / self.bin_width;
            let mut grown = vec![0u64; extra as usize];
            grown.extend_from_slice(&self.counts);
            self.counts = grown;
            self.e_min -= extra * self.bin_width;
            idx = e - self.e_min;
        }
        let bin = (idx / self.bin_width) as usize;
        if bin >= self.counts.len() {
            self.counts.resize(bin + 1, 0);
        }
        self.counts[bin] += 1;
        self.total += 1;
    }

    pub fn e_min(&self) -> i64 {
        self.e_min
    }

    pub fn bin_width(&self) -> i64 {
        self.bin_width
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn bin_energy(&self, bin: usize) -> i64 {
        self.e_min + bin as i64 * self.bin_width
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Counts of both histograms summed; bin grids must be congruent.
    pub fn merge(&self, other: &EnergyHistogram) -> Result<EnergyHistogram> {
        if self.bin_width != other.bin_width {
            return Err(Error::IncompatibleHistograms);
        }
        if self.is_empty() {
            return Ok(other.clone());
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        if (self.e_min - other.e_min) % self.bin_width != 0 {
            return Err(Error::IncompatibleHistograms);
        }
        let e_min = self.e_min.min(other.e_min);
        let e_max = (self.e_min + self.bin_width * self.counts.len() as i64)
            .max(other.e_min + other.bin_width * other.counts.len() as i64);
        let n_bins = ((e_max - e_min) / self.bin_width) as usize;
        let mut counts = vec![0u64; n_bins];
        for (b, &c) in self.counts.iter().enumerate() {
            counts[((self.bin_energy(b) - e_min) / self.bin_width) as usize] += c;
        }
        for (b, &c) in other.counts.iter().enumerate() {
            counts[((other.bin_energy(b) - e_min) / self.bin_width) as usize] += c;
        }
        Ok(EnergyHistogram {
            e_min,
            bin_width: self.bin_width,
            counts,
            total: self.total + other.total,
        })
    }

    /// Probability view; sums to 1 within 1e-12 when nonempty.
    pub fn normalized(&self) -> Vec<(i64, f64)> {
        let t = self.total as f64;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(b, &c)| (self.bin_energy(b), c as f64 / t))
            .collect()
    }

    /// Text format: magic comment, header `e_min bin_width n_bins total`,
    /// one count per line.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# fracton-lab histogram v1")?;
        writeln!(
            w,
            "{} {} {} {}",
            self.e_min,
            self.bin_width,
            self.counts.len(),
            self.total
        )?;
        for &c in &self.counts {
            writeln!(w, "{c}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R, path: &str) -> Result<Self> {
        let fmt = |reason: &str| Error::Format {
            path: path.to_string(),
            reason: reason.to_string(),
        };
        let mut lines = r.lines();
        if lines.next().ok_or_else(|| fmt("empty file"))??.trim() != "# fracton-lab histogram v1"
        {
            return Err(fmt("bad magic line"));
        }
        let header = lines.next().ok_or_else(|| fmt("missing header"))??;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(fmt("header must be `e_min bin_width n_bins total`"));
        }
        let e_min: i64 = toks[0].parse().map_err(|_| fmt("bad e_min"))?;
        let bin_width: i64 = toks[1].parse().map_err(|_| fmt("bad bin_width"))?;
        let n_bins: usize = toks[2].parse().map_err(|_| fmt("bad n_bins"))?;
        let total: u64 = toks[3].parse().map_err(|_| fmt("bad total"))?;
        let mut counts = Vec::with_capacity(n_bins);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            counts.push(line.trim().parse().map_err(|_| fmt("bad count"))?);
        }
        if counts.len() != n_bins || counts.iter().sum::<u64>() != total {
            return Err(fmt("count lines inconsistent with header"));
        }
        Ok(EnergyHistogram {
            e_min,
            bin_width,
            counts,
            total,
        })
    }
}

/// Normalized histogram produced by reweighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightedHistogram {
    pub e_min: i64,
    pub bin_width: i64,
    pub probs: Vec<f64>,
    /// Effective sample size of the reweighting, `(sum w)^2 / sum w^2`.
    pub ess: f64,
    pub low_ess: bool,
}

impl ReweightedHistogram {
    pub fn normalized(&self) -> Vec<(i64, f64)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(b, &p)| (self.e_min + b as i64 * self.bin_width, p))
            .collect()
    }
}

/// Reweight a histogram taken at `beta_from` to `beta_to` by applying the
/// weight `e^{-(beta_to - beta_from) E}` per bin, in log space, and
/// renormalizing. A small effective sample size sets `low_ess` but is not
/// fatal.
pub fn reweight_histogram(
    h: &EnergyHistogram,
    beta_from: f64,
    beta_to: f64,
) -> Result<ReweightedHistogram> {
    if h.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let db = beta_to - beta_from;
    let log_terms: Vec<(usize, f64, f64)> = h
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(b, &c)| {
            let lw = -db * h.bin_energy(b) as f64;
            (b, (c as f64).ln(), lw)
        })
        .collect();
    let lse = |xs: &[f64]| {
        let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    };
    let l1: Vec<f64> = log_terms.iter().map(|&(_, lc, lw)| lc + lw).collect();
    let l2: Vec<f64> = log_terms.iter().map(|&(_, lc, lw)| lc + 2.0 * lw).collect();
    let log_norm = lse(&l1);
    let ess = (2.0 * log_norm - lse(&l2)).exp();

    let mut probs = vec![0.0; h.counts.len()];
    for (&(b, _, _), &lt) in log_terms.iter().zip(&l1) {
        probs[b] = (lt - log_norm).exp();
    }
    let low_ess = ess < (h.total as f64).min(100.0) - 1e-9;
    Ok(ReweightedHistogram {
        e_min: h.e_min,
        bin_width: h.bin_width,
        probs,
        ess,
        low_ess,
    })
}

/// Total variation distance between two discrete distributions over
/// integer energies.
pub fn total_variation(
    a: impl IntoIterator<Item = (i64, f64)>,
    b: impl IntoIterator<Item = (i64, f64)>,
) -> f64 {
    let mut diff: BTreeMap<i64, f64> = BTreeMap::new();
    for (e, p) in a {
        *diff.entry(e).or_insert(0.0) += p;
    }
    for (e, p) in b {
        *diff.entry(e).or_insert(0.0) -= p;
    }
    diff.values().map(|d| d.abs()).sum::<f64>() / 2.0
}

// ---------------------------------------------------------------------------
// Four-spin correlator and correlation length
// ---------------------------------------------------------------------------

/// Anchor-averaged correlator profile along the z axis, `r in [0, L-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorProfile {
    pub l: usize,
    pub g: Vec<f64>,
    pub err: Vec<f64>,
}

impl CorrelatorProfile {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# fracton-lab correlator v1")?;
        writeln!(w, "{}", self.l)?;
        for r in 0..self.g.len() {
            writeln!(w, "{} {:.12e} {:.12e}", r, self.g[r], self.err[r])?;
        }
        Ok(())
    }
}

/// Spin-index quadruples of the correlation pattern, `[r][anchor] -> 4
/// spins`. The pattern correlates the bond `sigma_v sigma_{v+x+y}` with the
/// conjugate bond `sigma_w sigma_{w+x-y}` at `w = v + y + r z` for odd `r`
/// (the upward tetrahedron at `r = 1`) and `w = v + r z` for even `r`,
/// which keeps all four sites on the even sublattice for every separation.
pub(crate) fn pattern_table(h: &CouplingHypergraph) -> Result<Vec<Vec<[usize; 4]>>> {
    let Geometry::CheckerboardFcc { l } = h.geometry() else {
        return Err(Error::GeometryMismatch);
    };
    let mut spin_at = vec![usize::MAX; l * l * l];
    for (s, p) in h.spin_positions().iter().enumerate() {
        spin_at[(p[2] * l + p[1]) * l + p[0]] = s;
    }
    let site = |x: usize, y: usize, z: usize| -> Result<usize> {
        let s = spin_at[(z % l * l + y % l) * l + x % l];
        if s == usize::MAX {
            return Err(Error::Internal(
                "correlator pattern left the spin sublattice".into(),
            ));
        }
        Ok(s)
    };
    let mut table = Vec::with_capacity(l);
    for r in 0..l {
        let dy = r % 2; // restores sublattice parity for odd separations
        let mut quads = Vec::with_capacity(h.spin_count());
        for p in h.spin_positions() {
            let (x, y, z) = (p[0], p[1], p[2]);
            quads.push([
                site(x, y, z)?,
                site(x + 1, y + 1, z)?,
                site(x, y + dy, z + r)?,
                site(x + 1, y + dy + l - 1, z + r)?,
            ]);
        }
        table.push(quads);
    }
    Ok(table)
}

/// Streaming accumulator for the correlator profile.
#[derive(Debug, Clone)]
pub struct CorrelatorAccumulator {
    l: usize,
    table: Vec<Vec<[usize; 4]>>,
    sums: Vec<f64>,
    n: u64,
}

impl CorrelatorAccumulator {
    pub fn new(h: &CouplingHypergraph) -> Result<Self> {
        let table = pattern_table(h)?;
        let l = table.len();
        Ok(CorrelatorAccumulator {
            l,
            table,
            sums: vec![0.0; l],
            n: 0,
        })
    }

    pub fn add(&mut self, spins: &[i8]) {
        for (r, quads) in self.table.iter().enumerate() {
            let mut acc = 0i64;
            for q in quads {
                acc += (spins[q[0]] * spins[q[1]] * spins[q[2]] * spins[q[3]]) as i64;
            }
            self.sums[r] += acc as f64 / quads.len() as f64;
        }
        self.n += 1;
    }

    pub fn samples(&self) -> u64 {
        self.n
    }

    /// Running sums, for checkpointing; restore with [`Self::restore`].
    pub fn state(&self) -> (Vec<f64>, u64) {
        (self.sums.clone(), self.n)
    }

    pub fn restore(h: &CouplingHypergraph, sums: Vec<f64>, n: u64) -> Result<Self> {
        let mut acc = CorrelatorAccumulator::new(h)?;
        if sums.len() != acc.l {
            return Err(Error::CheckpointMismatch(
                "correlator accumulator length".into(),
            ));
        }
        acc.sums = sums;
        acc.n = n;
        Ok(acc)
    }

    pub fn profile(&self) -> Result<CorrelatorProfile> {
        if self.n == 0 {
            return Err(Error::TooFewSamples { need: 1, got: 0 });
        }
        Ok(CorrelatorProfile {
            l: self.l,
            g: self.sums.iter().map(|s| s / self.n as f64).collect(),
            err: vec![0.0; self.l],
        })
    }
}

/// Thermal-average correlator over a sample set; checkerboard geometry only.
pub fn correlator<'a>(
    h: &CouplingHypergraph,
    samples: impl IntoIterator<Item = &'a [i8]>,
) -> Result<CorrelatorProfile> {
    let mut acc = CorrelatorAccumulator::new(h)?;
    for s in samples {
        acc.add(s);
    }
    acc.profile()
}

/// Second-moment correlation length from a length-`L` profile:
/// `xi = sqrt(G(0)/G(k_min) - 1) / (2 sin(k_min/2))` with `k_min = 2 pi / L`
/// and `G(k)` the one-dimensional Fourier sum (real part). Returns `None`
/// when `G(k_min) <= 0` or the ratio falls below 1.
pub fn xi_second_moment(profile: &CorrelatorProfile) -> Option<f64> {
    let l = profile.g.len();
    if l < 2 {
        return None;
    }
    let k = 2.0 * std::f64::consts::PI / l as f64;
    let g0: f64 = profile.g.iter().sum();
    let gk: f64 = profile
        .g
        .iter()
        .enumerate()
        .map(|(r, g)| g * (k * r as f64).cos())
        .sum();
    if gk <= 0.0 {
        return None;
    }
    let ratio = g0 / gk;
    if ratio < 1.0 {
        return None;
    }
    Some((ratio - 1.0).sqrt() / (2.0 * (k / 2.0).sin()))
}

// ---------------------------------------------------------------------------
// Fluctuation observables
// ---------------------------------------------------------------------------

fn mean_and_var(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Specific heat per spin, `beta^2 (<E^2> - <E>^2) / N`.
pub fn specific_heat(energy_samples: &[f64], beta: f64, n_spins: usize) -> f64 {
    assert!(energy_samples.len() >= 2);
    let (_, var) = mean_and_var(energy_samples);
    beta * beta * var / n_spins as f64
}

/// Susceptibility of an intensive order parameter, `beta N (<O^2> - <O>^2)`.
pub fn susceptibility(order_samples: &[f64], beta: f64, n_spins: usize) -> f64 {
    assert!(order_samples.len() >= 2);
    let (_, var) = mean_and_var(order_samples);
    beta * n_spins as f64 * var
}

/// Standard error of the mean, blocked against autocorrelation: the
/// estimate is taken at several block granularities and the largest wins,
/// so slowly decorrelating series are not underestimated.
pub fn blocked_std_error(series: &[f64]) -> f64 {
    let se_with = |n_blocks: usize| {
        let block_len = series.len() / n_blocks;
        let means: Vec<f64> = (0..n_blocks)
            .map(|b| {
                let window = &series[b * block_len..(b + 1) * block_len];
                window.iter().sum::<f64>() / window.len() as f64
            })
            .collect();
        let grand = means.iter().sum::<f64>() / n_blocks as f64;
        let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>()
            / (n_blocks as f64 - 1.0);
        (var / n_blocks as f64).sqrt()
    };
    [4usize, 8, 16, 32, 64]
        .iter()
        .filter(|&&b| series.len() >= 2 * b)
        .map(|&b| se_with(b))
        .fold(se_with(2), f64::max)
}

// ---------------------------------------------------------------------------
// Logarithmic binning and equilibration
// ---------------------------------------------------------------------------

/// Statistics of one logarithmic bin covering 1-based sample indices
/// `[2^tau, 2^{tau+1} - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub tau: u32,
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
}

/// Complete logarithmic bins of a scalar time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedSeries {
    pub bins: Vec<BinStats>,
}

pub fn log_bin(series: &[f64]) -> BinnedSeries {
    let mut bins = Vec::new();
    let mut tau = 0u32;
    loop {
        let start = (1u64 << tau) as usize; // 1-based
        let end = ((1u64 << (tau + 1)) - 1) as usize;
        if end > series.len() {
            break;
        }
        let window = &series[start - 1..end];
        let n = window.len();
        let mean = window.iter().sum::<f64>() / n as f64;
        let std_err = if n >= 2 {
            let var =
                window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        bins.push(BinStats {
            tau,
            n,
            mean,
            std_err,
        });
        tau += 1;
    }
    BinnedSeries { bins }
}

/// Outcome of the logarithmic-binning equilibration test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationReport {
    /// Do the last three complete bins agree pairwise within combined
    /// one-sigma errors?
    pub equilibrated: bool,
    /// Earliest tau whose trailing three bins agree.
    pub tau_first: Option<u32>,
    pub n_bins: usize,
    pub note: Option<String>,
}

fn bins_agree(a: &BinStats, b: &BinStats) -> bool {
    (a.mean - b.mean).abs() <= (a.std_err * a.std_err + b.std_err * b.std_err).sqrt()
}

/// Log-bin the series and report whether the last three complete bins'
/// means mutually agree within error bars. Series shorter than 8 samples
/// are reported as not equilibrated.
pub fn equilibration_check(series: &[f64]) -> EquilibrationReport {
    if series.len() < 8 {
        return EquilibrationReport {
            equilibrated: false,
            tau_first: None,
            n_bins: 0,
            note: Some(format!(
                "series of {} samples is too short (need >= 8)",
                series.len()
            )),
        };
    }
    let binned = log_bin(series);
    let bins = &binned.bins;
    let agree_at = |t: usize| {
        bins_agree(&bins[t - 2], &bins[t - 1])
            && bins_agree(&bins[t - 1], &bins[t])
            && bins_agree(&bins[t - 2], &bins[t])
    };
    let tau_first = (2..bins.len()).find(|&t| agree_at(t)).map(|t| t as u32);
    let last = bins.len() - 1;
    EquilibrationReport {
        equilibrated: last >= 2 && agree_at(last),
        tau_first,
        n_bins: bins.len(),
        note: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_checkerboard, Sector};
    use crate::ising::{map_error_model, DisorderRealization};
    use crate::rng::{Stream, StreamKey};

    #[test]
    fn histogram_single_bin_for_constant_series() {
        let h = EnergyHistogram::from_samples(std::iter::repeat_n(-64, 100));
        assert_eq!(h.total(), 100);
        assert_eq!(h.normalized(), vec![(-64, 1.0)]);
    }

    #[test]
    fn histogram_merge_preserves_total_and_commutes() {
        let a = EnergyHistogram::from_samples([-4, -2, 0, 0, 2]);
        let b = EnergyHistogram::from_samples([-8, 0, 4, 4]);
        let ab = a.merge(&b).unwrap();
        assert_eq!(ab.total(), a.total() + b.total());
        assert_eq!(ab, b.merge(&a).unwrap());
        let c = EnergyHistogram::from_samples([6, -6]);
        let assoc1 = a.merge(&b).unwrap().merge(&c).unwrap();
        let assoc2 = a.merge(&b.merge(&c).unwrap()).unwrap();
        assert_eq!(assoc1, assoc2);
    }

    #[test]
    fn histogram_normalization_sums_to_one() {
        let mut s = Stream::new(StreamKey::root(2));
        let h = EnergyHistogram::from_samples(
            (0..1000).map(|_| (s.next_below(41) as i64 - 20) * 2),
        );
        let sum: f64 = h.normalized().iter().map(|&(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_io_round_trip() {
        let h = EnergyHistogram::from_samples([-6, -6, -4, 0, 8]);
        let mut buf = Vec::new();
        h.write(&mut buf).unwrap();
        assert_eq!(EnergyHistogram::read(&buf[..], "mem").unwrap(), h);

        let corrupt = "# fracton-lab histogram v1\n-6 2 2 5\n2\n2\n";
        assert!(EnergyHistogram::read(corrupt.as_bytes(), "mem").is_err());
        assert!(EnergyHistogram::read(&b"nonsense\n"[..], "mem").is_err());
    }

    #[test]
    fn reweight_identity_at_equal_beta() {
        let h = EnergyHistogram::from_samples([-8, -8, -6, -4, -4, -4, 0]);
        let rw = reweight_histogram(&h, 0.7, 0.7).unwrap();
        let direct = h.normalized();
        let tv = total_variation(rw.normalized(), direct);
        assert!(tv < 1e-14);
        assert!(!rw.low_ess);
    }

    #[test]
    fn reweight_two_level_closed_form() {
        // Counts n(-1), n(+1); reweighting multiplies the ratio by
        // e^{2 (beta' - beta)}.
        let mut h = EnergyHistogram::new(2);
        for _ in 0..300 {
            h.record(-1);
        }
        for _ in 0..700 {
            h.record(1);
        }
        let (b0, b1) = (0.4, 0.9);
        let rw = reweight_histogram(&h, b0, b1).unwrap();
        let probs = rw.normalized();
        let ratio = probs[0].1 / probs[1].1;
        let expect = (300.0 / 700.0) * (2.0 * (b1 - b0)).exp();
        assert!((ratio - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn reweight_rejects_empty() {
        let h = EnergyHistogram::new(2);
        assert!(reweight_histogram(&h, 0.1, 0.2).is_err());
    }

    fn checkerboard_graph(l: usize) -> CouplingHypergraph {
        map_error_model(&build_checkerboard(l).unwrap(), Sector::X).unwrap()
    }

    #[test]
    fn correlator_of_uniform_configuration_is_one() {
        let h = checkerboard_graph(4);
        let spins = vec![1i8; h.spin_count()];
        let prof = correlator(&h, [spins.as_slice()]).unwrap();
        assert_eq!(prof.g.len(), 4);
        assert!(prof.g.iter().all(|&g| (g - 1.0).abs() < 1e-15));
    }

    #[test]
    fn correlator_rejects_non_checkerboard_geometry() {
        let h = CouplingHypergraph::irregular(4, vec![vec![0, 1, 2, 3]]).unwrap();
        assert!(CorrelatorAccumulator::new(&h).is_err());
    }

    #[test]
    fn correlator_r1_equals_minus_upward_energy_per_site() {
        let h = checkerboard_graph(4);
        let d = DisorderRealization::clean(h.coupling_count());
        let mut s = Stream::new(StreamKey::root(6));
        for _ in 0..5 {
            let spins: Vec<i8> = (0..h.spin_count()).map(|_| s.sign(0.5)).collect();
            let prof = correlator(&h, [spins.as_slice()]).unwrap();
            // Upward-tetra energy per anchor from the coupling list.
            let mut e_plus = 0i64;
            let mut n_plus = 0u64;
            for (c, spins_of_c) in h.couplings().iter().enumerate() {
                if h.anchors()[c].parity == crate::ising::Parity::Plus {
                    let prod: i64 = spins_of_c.iter().map(|&i| spins[i] as i64).product();
                    e_plus -= d.eta[c] as i64 * prod;
                    n_plus += 1;
                }
            }
            let expect = -(e_plus as f64) / n_plus as f64;
            assert!((prof.g[1] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn correlator_vanishes_for_free_spins() {
        let h = checkerboard_graph(4);
        let mut s = Stream::new(StreamKey::root(8));
        let mut acc = CorrelatorAccumulator::new(&h).unwrap();
        let n_samp = 4000;
        for _ in 0..n_samp {
            let spins: Vec<i8> = (0..h.spin_count()).map(|_| s.sign(0.5)).collect();
            acc.add(&spins);
        }
        let prof = acc.profile().unwrap();
        // Each g(r >= 1) is a mean of n_samp * n_anchor independent +-1
        // products (anchors overlap, so allow a generous factor).
        let sigma = 1.0 / ((n_samp * h.spin_count()) as f64).sqrt();
        for r in 1..prof.g.len() {
            assert!(
                prof.g[r].abs() < 4.0 * sigma * 3.0,
                "g({r}) = {} vs sigma {}",
                prof.g[r],
                sigma
            );
        }
    }

    #[test]
    fn correlator_translation_invariance() {
        let h = checkerboard_graph(4);
        let l = 4usize;
        let mut s = Stream::new(StreamKey::root(9));
        let spins: Vec<i8> = (0..h.spin_count()).map(|_| s.sign(0.5)).collect();
        // Shift every configuration by the lattice vector (1, 1, 0).
        let mut index_at = std::collections::HashMap::new();
        for (i, p) in h.spin_positions().iter().enumerate() {
            index_at.insert(*p, i);
        }
        let shifted: Vec<i8> = h
            .spin_positions()
            .iter()
            .map(|p| {
                let from = [(p[0] + l - 1) % l, (p[1] + l - 1) % l, p[2]];
                spins[index_at[&from]]
            })
            .collect();
        let a = correlator(&h, [spins.as_slice()]).unwrap();
        let b = correlator(&h, [shifted.as_slice()]).unwrap();
        for r in 0..l {
            assert!((a.g[r] - b.g[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn xi_flags_and_values() {
        let flat = CorrelatorProfile {
            l: 8,
            g: vec![0.5; 8],
            err: vec![0.0; 8],
        };
        assert!(xi_second_moment(&flat).is_none());

        let delta = CorrelatorProfile {
            l: 8,
            g: std::iter::once(1.0).chain(std::iter::repeat(0.0)).take(8).collect(),
            err: vec![0.0; 8],
        };
        assert_eq!(xi_second_moment(&delta), Some(0.0));
    }

    #[test]
    fn xi_recovers_synthetic_exponential() {
        let l = 64usize;
        let xi0 = 2.0;
        let g: Vec<f64> = (0..l).map(|r| (-(r as f64) / xi0).exp()).collect();
        let prof = CorrelatorProfile {
            l,
            g,
            err: vec![0.0; l],
        };
        let xi = xi_second_moment(&prof).unwrap();

        // Closed-form geometric Fourier sums for the same profile.
        let k = 2.0 * std::f64::consts::PI / l as f64;
        let q = (-1.0 / xi0).exp();
        let g0 = (1.0 - q.powi(l as i32)) / (1.0 - q);
        // Real part of sum q^r e^{-i k r}.
        let denom = 1.0 - 2.0 * q * k.cos() + q * q;
        let num = 1.0 - q * k.cos() - q.powi(l as i32) * (1.0 - q * k.cos()); // e^{-ikL} = 1
        let gk = num / denom;
        let closed = ((g0 / gk - 1.0).sqrt()) / (2.0 * (k / 2.0).sin());
        assert!(
            (xi - closed).abs() / closed < 0.05,
            "xi {xi} vs closed {closed}"
        );
    }

    #[test]
    fn xi_scale_invariance() {
        let l = 16usize;
        let g: Vec<f64> = (0..l).map(|r| (-(r as f64) / 3.0).exp()).collect();
        let a = xi_second_moment(&CorrelatorProfile {
            l,
            g: g.clone(),
            err: vec![0.0; l],
        })
        .unwrap();
        let b = xi_second_moment(&CorrelatorProfile {
            l,
            g: g.iter().map(|x| 7.5 * x).collect(),
            err: vec![0.0; l],
        })
        .unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn fluctuation_observables() {
        assert_eq!(specific_heat(&[3.0, 3.0, 3.0], 1.2, 10), 0.0);
        assert_eq!(susceptibility(&[0.4, 0.4], 1.2, 10), 0.0);

        // Two-level system E in {-1, +1} with occupation p: the closed form
        // is C_V = beta^2 * 4 p (1 - p); build the samples with exactly that
        // occupation so the comparison is limited only by rounding.
        let beta = 0.8f64;
        let (n_minus, n) = (300usize, 1000usize);
        let p = n_minus as f64 / n as f64;
        let mut samples = vec![-1.0f64; n_minus];
        samples.extend(vec![1.0f64; n - n_minus]);
        let cv = specific_heat(&samples, beta, 1);
        let expect = beta * beta * 4.0 * p * (1.0 - p);
        assert!((cv - expect).abs() < 1e-9, "cv {cv} vs {expect}");

        let mut s = Stream::new(StreamKey::root(77));
        let xs: Vec<f64> = (0..100).map(|_| s.next_f64()).collect();
        assert!(specific_heat(&xs, 0.9, 5) >= 0.0);
        assert!(susceptibility(&xs, 0.9, 5) >= 0.0);
    }

    #[test]
    fn equilibration_on_iid_and_drifting_series() {
        let constant = vec![1.5; 64];
        let rep = equilibration_check(&constant);
        assert!(rep.equilibrated);
        assert_eq!(rep.tau_first, Some(2));

        let mut s = Stream::new(StreamKey::root(13));
        let iid: Vec<f64> = (0..1 << 12).map(|_| s.next_f64()).collect();
        let rep = equilibration_check(&iid);
        assert!(rep.equilibrated);

        let drifting: Vec<f64> = (0..1 << 12).map(|t| -(t as f64)).collect();
        let rep = equilibration_check(&drifting);
        assert!(!rep.equilibrated);

        let short = vec![1.0; 4];
        let rep = equilibration_check(&short);
        assert!(!rep.equilibrated);
        assert!(rep.note.is_some());
    }

    #[test]
    fn log_bin_boundaries_are_powers_of_two() {
        let series: Vec<f64> = (0..100).map(|t| t as f64).collect();
        let binned = log_bin(&series);
        // Bins [1,1], [2,3], [4,7], [8,15], [16,31], [32,63]; [64,127] is
        // incomplete at length 100.
        assert_eq!(binned.bins.len(), 6);
        for (i, b) in binned.bins.iter().enumerate() {
            assert_eq!(b.tau, i as u32);
            assert_eq!(b.n, 1 << i);
        }
        assert_eq!(binned.bins[2].mean, (3.0 + 4.0 + 5.0 + 6.0) / 4.0);
    }
}
