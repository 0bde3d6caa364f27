//! Entropy-duality toolkit for code-capacity thresholds.
//!
//! Binary entropy, the entropy-sum relation `H(p_1) + H(p_2) ~ 1` between
//! mutually dual models on the Nishimori line, dual-threshold solving, and
//! the replicated Boltzmann factors with their exact parity hierarchy.

use crate::error::{Error, Result};

/// Binary Shannon entropy in bits; `H(0) = H(1) = 0` by continuity.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability { p });
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// A pair of error rates with their entropy sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyPair {
    pub p_x: f64,
    pub p_z: f64,
    pub entropy_sum: f64,
}

pub fn entropy_sum(p_x: f64, p_z: f64) -> Result<EntropyPair> {
    Ok(EntropyPair {
        p_x,
        p_z,
        entropy_sum: binary_entropy(p_x)? + binary_entropy(p_z)?,
    })
}

const BISECTION_TOL: f64 = 1e-10;

/// Solve `H(p) = target` for `p` on the monotone branch `(0, 1/2)`.
fn solve_entropy(target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid).unwrap() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Threshold of the dual model on the branch `p < 1/2`, solving
/// `H(p2) = 1 - H(p1)` by bisection.
pub fn dual_threshold(p1: f64) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "dual_threshold requires 0 < p < 0.5, got {p1}"
        )));
    }
    Ok(solve_entropy(1.0 - binary_entropy(p1)?))
}

/// Fixed point of the duality, `H(p*) = 1/2`.
pub fn self_dual_point() -> f64 {
    solve_entropy(0.5)
}

/// Replicated Boltzmann factors of an `n`-replica disordered coupling at
/// strength `K` and flip rate `p`, with their duals:
///
/// `x_k = p e^{(n-2k)K} + (1-p) e^{-(n-2k)K}` and
/// `x_k* = 2^{-n/2} (1 - p + (-1)^k p) (e^K + e^{-K})^{n-k} (e^K - e^{-K})^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatedFactors {
    pub n: usize,
    pub coupling: f64,
    pub p: f64,
    pub x: Vec<f64>,
    pub x_star: Vec<f64>,
}

pub fn replicated_factors(n: usize, coupling: f64, p: f64) -> Result<ReplicatedFactors> {
    if n < 1 {
        return Err(Error::InvalidArgument("need n >= 1 replicas".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability { p });
    }
    if coupling <= 0.0 || coupling.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "need coupling K > 0, got {coupling}"
        )));
    }
    let k_exp = coupling.exp();
    let k_exp_inv = (-coupling).exp();
    let x = (0..=n)
        .map(|k| {
            let m = (n as f64) - 2.0 * k as f64;
            p * (m * coupling).exp() + (1.0 - p) * (-m * coupling).exp()
        })
        .collect();
    let x_star = (0..=n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            2f64.powf(-(n as f64) / 2.0)
                * (1.0 - p + sign * p)
                * (k_exp + k_exp_inv).powi((n - k) as i32)
                * (k_exp - k_exp_inv).powi(k as i32)
        })
        .collect();
    Ok(ReplicatedFactors {
        n,
        coupling,
        p,
        x,
        x_star,
    })
}

/// One row of a threshold table.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEntry {
    pub code: String,
    pub p_x: f64,
    pub p_z: f64,
    /// Entropy sum as quoted in the source, with its uncertainty when one
    /// is stated.
    pub quoted_sum: f64,
    pub quoted_err: Option<f64>,
}

impl ThresholdEntry {
    pub fn new(
        code: &str,
        p_x: f64,
        p_z: f64,
        quoted_sum: f64,
        quoted_err: Option<f64>,
    ) -> Self {
        ThresholdEntry {
            code: code.to_string(),
            p_x,
            p_z,
            quoted_sum,
            quoted_err,
        }
    }

    /// Tolerance for reproducing the quoted sum: the stated uncertainty, or
    /// half an ulp of the quoting precision when none is stated.
    pub fn tolerance(&self) -> f64 {
        self.quoted_err.unwrap_or(5e-4)
    }
}

/// Reference optimal code-capacity thresholds of representative
/// three-dimensional and two-dimensional codes, with quoted entropy sums.
pub fn builtin_threshold_table() -> Vec<ThresholdEntry> {
    vec![
        ThresholdEntry::new("2d-surface", 0.1094, 0.1094, 0.9962, Some(0.0009)),
        ThresholdEntry::new("2d-color", 0.109, 0.109, 0.994, Some(0.009)),
        ThresholdEntry::new("3d-toric", 0.2327, 0.033, 0.99, Some(0.02)),
        ThresholdEntry::new("3d-color", 0.276, 0.019, 0.986, None),
        ThresholdEntry::new("x-cube", 0.152, 0.075, 1.00, Some(0.01)),
        ThresholdEntry::new("checkerboard", 0.108, 0.108, 0.987, Some(0.008)),
    ]
}

/// One verified row of a [`QgvReport`].
#[derive(Debug, Clone)]
pub struct QgvRow {
    pub entry: ThresholdEntry,
    pub computed_sum: f64,
    /// `|computed - quoted| <= tolerance`.
    pub reproduces_quoted: bool,
    /// Entropy sum exceeds 1 beyond the stated uncertainty.
    pub exceeds_bound: bool,
}

#[derive(Debug, Clone, Default)]
pub struct QgvReport {
    pub rows: Vec<QgvRow>,
}

impl QgvReport {
    pub fn all_reproduced(&self) -> bool {
        self.rows.iter().all(|r| r.reproduces_quoted)
    }

    pub fn violations(&self) -> impl Iterator<Item = &QgvRow> {
        self.rows.iter().filter(|r| r.exceeds_bound)
    }
}

/// Recompute the entropy sums of a threshold table and flag entries whose
/// sum exceeds 1 beyond the stated uncertainty.
pub fn qgv_check(entries: &[ThresholdEntry]) -> Result<QgvReport> {
    let mut rows = Vec::with_capacity(entries.len());
    for entry in entries {
        let sum = entropy_sum(entry.p_x, entry.p_z)?.entropy_sum;
        rows.push(QgvRow {
            computed_sum: sum,
            reproduces_quoted: (sum - entry.quoted_sum).abs() <= entry.tolerance(),
            exceeds_bound: sum - entry.quoted_err.unwrap_or(0.0) > 1.0,
            entry: entry.clone(),
        });
    }
    Ok(QgvReport { rows })
}
