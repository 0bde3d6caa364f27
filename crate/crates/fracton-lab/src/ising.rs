//! Mapping from a code sector to a disordered multi-spin Ising model.
//!
//! One Ising spin is placed on every stabilizer of the sector *dual* to the
//! error type, and every qubit contributes one coupling over the set of
//! spins whose stabilizers share it. Frustrated-coupling patterns then
//! coincide with error syndromes. For the checkerboard code this produces
//! the tetrahedral model on the face-centered-cubic sublattice of even
//! sites: every even anchor `v` carries an upward tetrahedron
//! `{v, v+x+y, v+y+z, v+x+z}` and a downward one
//! `{v, v-x-y, v-y-z, v-x-z}`. For the cubic code it produces the fractal
//! Ising model with one corner tetrahedron `{v, v+x, v+y, v+z}` and one
//! even tetrahedron `{v, v+x+y, v+y+z, v+x+z}` per vertex; for the X error
//! sector the spin positions are the inverted cube anchors `-c mod L`,
//! which brings the two sectors to the identical literal form.
//!
//! Couplings are indexed lexicographically by anchor coordinate `(z, y, x)`
//! and then parity (`+` before `-`), so disorder realizations are
//! reproducible across runs and machines given a seed.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::code::{CodeKind, Sector, StabilizerCode};
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::rng::{keyed_f64, StreamKey};

/// Anchor parity of a lattice coupling: `Plus` for the upward/corner
/// tetrahedron at an anchor, `Minus` for the downward/even one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn symbol(self) -> char {
        match self {
            Parity::Plus => '+',
            Parity::Minus => '-',
        }
    }
}

/// Geometry class of a hypergraph; lattice-aware observables check this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    /// Even-site FCC lattice of the checkerboard mapping, linear size `l`.
    CheckerboardFcc { l: usize },
    /// Full cubic lattice of the cubic-code mapping, linear size `l`.
    HaahCubic { l: usize },
    /// No lattice structure (e.g. random test instances).
    Irregular,
}

/// Per-coupling anchor tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub pos: [usize; 3],
    pub parity: Parity,
}

/// Ising spins plus multi-spin couplings.
///
/// `couplings[c]` lists the spins of coupling `c` (size >= 1). For
/// code-derived graphs every qubit owns exactly one coupling;
/// `coupling_of_qubit` maps qubit indices to coupling indices. Immutable
/// after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingHypergraph {
    n_spins: usize,
    couplings: Vec<Vec<usize>>,
    geometry: Geometry,
    spin_positions: Vec<[usize; 3]>,
    anchors: Vec<Anchor>,
    coupling_of_qubit: Vec<usize>,
    qubit_of_coupling: Vec<usize>,
}

impl CouplingHypergraph {
    /// A hypergraph with no lattice tags; couplings stand for their own
    /// qubits.
    pub fn irregular(n_spins: usize, couplings: Vec<Vec<usize>>) -> Result<Self> {
        for c in &couplings {
            if c.is_empty() {
                return Err(Error::InvalidArgument("empty coupling".into()));
            }
            for &s in c {
                if s >= n_spins {
                    return Err(Error::IndexOutOfRange {
                        what: "spin",
                        index: s,
                        len: n_spins,
                    });
                }
            }
        }
        let ident: Vec<usize> = (0..couplings.len()).collect();
        Ok(CouplingHypergraph {
            n_spins,
            couplings,
            geometry: Geometry::Irregular,
            spin_positions: Vec::new(),
            anchors: Vec::new(),
            coupling_of_qubit: ident.clone(),
            qubit_of_coupling: ident,
        })
    }

    pub fn spin_count(&self) -> usize {
        self.n_spins
    }

    pub fn couplings(&self) -> &[Vec<usize>] {
        &self.couplings
    }

    pub fn coupling_count(&self) -> usize {
        self.couplings.len()
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn spin_positions(&self) -> &[[usize; 3]] {
        &self.spin_positions
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn coupling_of_qubit(&self, qubit: usize) -> Result<usize> {
        self.coupling_of_qubit
            .get(qubit)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                what: "qubit",
                index: qubit,
                len: self.coupling_of_qubit.len(),
            })
    }

    pub fn qubit_of_coupling(&self, coupling: usize) -> usize {
        self.qubit_of_coupling[coupling]
    }

    /// Energy of a spin configuration under a disorder realization:
    /// `E = -sum_c eta_c prod_{i in c} sigma_i`, exact integer.
    pub fn energy(&self, d: &DisorderRealization, spins: &[i8]) -> i64 {
        assert_eq!(spins.len(), self.n_spins, "spin count mismatch");
        assert_eq!(d.eta.len(), self.couplings.len(), "coupling count mismatch");
        let mut e = 0i64;
        for (c, spins_of_c) in self.couplings.iter().enumerate() {
            let mut prod = d.eta[c] as i64;
            for &s in spins_of_c {
                prod *= spins[s] as i64;
            }
            e -= prod;
        }
        e
    }

    /// Copy of `d` with the signs negated on the couplings owned by the
    /// listed qubits. Models composing the underlying error pattern with a
    /// qubit set (stabilizer supports, logical representatives, ...).
    pub fn flip_couplings(
        &self,
        d: &DisorderRealization,
        qubit_set: &[usize],
    ) -> Result<DisorderRealization> {
        let mut out = d.clone();
        for &q in qubit_set {
            let c = self.coupling_of_qubit(q)?;
            out.eta[c] = -out.eta[c];
        }
        Ok(out)
    }

    /// Exponent `g` of the clean ground-state degeneracy `2^g`, computed as
    /// `N_s - rank_GF2(incidence)` with one incidence row per coupling.
    pub fn classical_gsd_exponent(&self) -> usize {
        let m = BitMatrix::from_supports(self.n_spins, &self.couplings);
        self.n_spins - m.rank()
    }

    /// Write the documented text format (see `read_hypergraph`).
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# fracton-lab hypergraph v1")?;
        let geom = match self.geometry {
            Geometry::CheckerboardFcc { l } => format!("checkerboard-fcc {l}"),
            Geometry::HaahCubic { l } => format!("haah-cubic {l}"),
            Geometry::Irregular => "irregular 0".into(),
        };
        writeln!(
            w,
            "{} {} {}",
            self.n_spins,
            self.couplings.len(),
            geom
        )?;
        for p in &self.spin_positions {
            writeln!(w, "s {} {} {}", p[0], p[1], p[2])?;
        }
        for (c, spins) in self.couplings.iter().enumerate() {
            let (anchor, parity) = if self.anchors.is_empty() {
                ("0 0 0".to_string(), '.')
            } else {
                let a = &self.anchors[c];
                (
                    format!("{} {} {}", a.pos[0], a.pos[1], a.pos[2]),
                    a.parity.symbol(),
                )
            };
            let list: Vec<String> = spins.iter().map(|s| s.to_string()).collect();
            writeln!(
                w,
                "c {} {} {} {}",
                self.qubit_of_coupling[c],
                anchor,
                parity,
                list.join(" ")
            )?;
        }
        Ok(())
    }
}

/// Parse the text format emitted by [`CouplingHypergraph::write`].
pub fn read_hypergraph<R: BufRead>(r: R, path: &str) -> Result<CouplingHypergraph> {
    let fmt = |reason: &str| Error::Format {
        path: path.to_string(),
        reason: reason.to_string(),
    };
    let mut lines = r.lines();
    let magic = lines.next().ok_or_else(|| fmt("empty file"))??;
    if magic.trim() != "# fracton-lab hypergraph v1" {
        return Err(fmt("bad magic line"));
    }
    let header = lines.next().ok_or_else(|| fmt("missing header"))??;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 4 {
        return Err(fmt("header must be `n_spins n_couplings geometry l`"));
    }
    let n_spins: usize = toks[0].parse().map_err(|_| fmt("bad spin count"))?;
    let n_couplings: usize = toks[1].parse().map_err(|_| fmt("bad coupling count"))?;
    let l: usize = toks[3].parse().map_err(|_| fmt("bad lattice size"))?;
    let geometry = match toks[2] {
        "checkerboard-fcc" => Geometry::CheckerboardFcc { l },
        "haah-cubic" => Geometry::HaahCubic { l },
        "irregular" => Geometry::Irregular,
        _ => return Err(fmt("unknown geometry tag")),
    };

    let mut spin_positions = Vec::new();
    let mut couplings = Vec::with_capacity(n_couplings);
    let mut anchors = Vec::new();
    let mut qubit_of_coupling = Vec::with_capacity(n_couplings);
    for line in lines {
        let line = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first() {
            Some(&"s") => {
                if toks.len() != 4 {
                    return Err(fmt("bad spin line"));
                }
                let p: Vec<usize> = toks[1..4]
                    .iter()
                    .map(|t| t.parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| fmt("bad spin coordinate"))?;
                spin_positions.push([p[0], p[1], p[2]]);
            }
            Some(&"c") => {
                if toks.len() < 7 {
                    return Err(fmt("bad coupling line"));
                }
                let qubit: usize = toks[1].parse().map_err(|_| fmt("bad qubit index"))?;
                let pos: Vec<usize> = toks[2..5]
                    .iter()
                    .map(|t| t.parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| fmt("bad anchor coordinate"))?;
                let parity = match toks[5] {
                    "+" => Some(Parity::Plus),
                    "-" => Some(Parity::Minus),
                    "." => None,
                    _ => return Err(fmt("bad parity tag")),
                };
                let spins: Vec<usize> = toks[6..]
                    .iter()
                    .map(|t| t.parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| fmt("bad spin index"))?;
                qubit_of_coupling.push(qubit);
                if let Some(parity) = parity {
                    anchors.push(Anchor {
                        pos: [pos[0], pos[1], pos[2]],
                        parity,
                    });
                }
                couplings.push(spins);
            }
            _ => return Err(fmt("unexpected line")),
        }
    }
    if couplings.len() != n_couplings {
        return Err(fmt("coupling count mismatch"));
    }
    let mut coupling_of_qubit = vec![usize::MAX; qubit_of_coupling.len()];
    for (c, &q) in qubit_of_coupling.iter().enumerate() {
        if q >= coupling_of_qubit.len() || coupling_of_qubit[q] != usize::MAX {
            return Err(fmt("qubit ownership is not a bijection"));
        }
        coupling_of_qubit[q] = c;
    }
    Ok(CouplingHypergraph {
        n_spins,
        couplings,
        geometry,
        spin_positions,
        anchors,
        coupling_of_qubit,
        qubit_of_coupling,
    })
}

/// Quenched coupling signs at error rate `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub eta: Vec<i8>,
    pub p: f64,
    pub seed: u64,
}

impl DisorderRealization {
    /// All-ferromagnetic signs (`eta = +1`).
    pub fn clean(n_couplings: usize) -> Self {
        DisorderRealization {
            eta: vec![1; n_couplings],
            p: 0.0,
            seed: 0,
        }
    }

    /// Qubits whose couplings carry a flipped sign.
    pub fn flipped_qubits(&self, h: &CouplingHypergraph) -> Vec<usize> {
        self.eta
            .iter()
            .enumerate()
            .filter(|(_, &e)| e < 0)
            .map(|(c, _)| h.qubit_of_coupling(c))
            .collect()
    }

    /// Write the replay format: magic comment, header `p seed n_couplings`,
    /// then one sign per line.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# fracton-lab disorder v1")?;
        writeln!(w, "{} {} {}", self.p, self.seed, self.eta.len())?;
        for &e in &self.eta {
            writeln!(w, "{}", if e > 0 { "+1" } else { "-1" })?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R, path: &str) -> Result<Self> {
        let fmt = |reason: &str| Error::Format {
            path: path.to_string(),
            reason: reason.to_string(),
        };
        let mut lines = r.lines();
        let magic = lines.next().ok_or_else(|| fmt("empty file"))??;
        if magic.trim() != "# fracton-lab disorder v1" {
            return Err(fmt("bad magic line"));
        }
        let header = lines.next().ok_or_else(|| fmt("missing header"))??;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(fmt("header must be `p seed n_couplings`"));
        }
        let p: f64 = toks[0].parse().map_err(|_| fmt("bad p"))?;
        let seed: u64 = toks[1].parse().map_err(|_| fmt("bad seed"))?;
        let n: usize = toks[2].parse().map_err(|_| fmt("bad count"))?;
        let mut eta = Vec::with_capacity(n);
        for line in lines {
            let line = line?;
            match line.trim() {
                "+1" => eta.push(1i8),
                "-1" => eta.push(-1i8),
                "" => {}
                _ => return Err(fmt("signs must be +1 or -1")),
            }
        }
        if eta.len() != n {
            return Err(fmt("sign count mismatch"));
        }
        Ok(DisorderRealization { eta, p, seed })
    }
}

/// Independently flip each coupling sign to -1 with probability `p`.
/// Each sign is a keyed per-index draw, so the realization is identical
/// regardless of evaluation order.
pub fn sample_disorder(h: &CouplingHypergraph, p: f64, seed: u64) -> Result<DisorderRealization> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability { p });
    }
    let key = StreamKey::root(seed).child(0x6469_736f); // "diso"
    let eta = (0..h.coupling_count() as u64)
        .map(|c| if keyed_f64(key, c) < p { -1 } else { 1 })
        .collect();
    Ok(DisorderRealization { eta, p, seed })
}

/// Random 4-body hypergraph with no lattice structure; the workhorse of the
/// Monte-Carlo-versus-enumeration comparison suites.
pub fn random_four_body_hypergraph(
    n_spins: usize,
    n_couplings: usize,
    seed: u64,
) -> Result<CouplingHypergraph> {
    if n_spins < 4 {
        return Err(Error::InvalidArgument(
            "need at least 4 spins for 4-body couplings".into(),
        ));
    }
    let mut rng = crate::rng::Stream::new(StreamKey::root(seed).child(0x6879_7067)); // "hypg"
    let couplings = (0..n_couplings)
        .map(|_| {
            let mut spins = Vec::with_capacity(4);
            while spins.len() < 4 {
                let s = rng.next_below(n_spins as u64) as usize;
                if !spins.contains(&s) {
                    spins.push(s);
                }
            }
            spins.sort_unstable();
            spins
        })
        .collect();
    CouplingHypergraph::irregular(n_spins, couplings)
}

/// Inverse temperature on the Nishimori line, `beta = -ln(p/(1-p)) / 2`.
/// `p = 0` maps to `+inf` and `p = 1` to `-inf` (distinguished values, not
/// errors); rates outside [0, 1] are rejected.
pub fn nishimori_beta(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability { p });
    }
    Ok(-0.5 * (p / (1.0 - p)).ln())
}

/// Error rate matching an inverse temperature on the Nishimori line,
/// `p = 1 / (1 + e^{2 beta})`. Rejects `beta < 0`.
pub fn nishimori_p(beta: f64) -> Result<f64> {
    if beta < 0.0 || beta.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "nishimori_p requires beta >= 0, got {beta}"
        )));
    }
    Ok(1.0 / (1.0 + (2.0 * beta).exp()))
}

/// A point on the Nishimori line: `e^{-2 beta} = p / (1 - p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NishimoriPoint {
    pub p: f64,
    pub beta: f64,
}

impl NishimoriPoint {
    pub fn from_p(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability { p });
        }
        Ok(NishimoriPoint {
            p,
            beta: nishimori_beta(p)?,
        })
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        Ok(NishimoriPoint {
            p: nishimori_p(beta)?,
            beta,
        })
    }
}

fn sub_mod(a: usize, d: usize, l: usize) -> usize {
    (a + l - d % l) % l
}

/// Compile a code sector into its disordered Ising hypergraph.
///
/// `error_sector` is the Pauli type of the noise; spins live on the dual
/// sector's stabilizers (indexed as in the code), and each qubit
/// contributes one coupling over the stabilizers sharing it.
pub fn map_error_model(
    code: &StabilizerCode,
    error_sector: Sector,
) -> Result<CouplingHypergraph> {
    let spin_sector = error_sector.dual();
    let stabilizers = code.stabilizers(spin_sector);
    let n_spins = stabilizers.len();
    let l = code.lattice_size();

    // Spins of each coupling: the dual-sector stabilizers sharing the qubit.
    let mut spins_of_qubit: Vec<Vec<usize>> = vec![Vec::new(); code.qubit_count()];
    for (s, support) in stabilizers.iter().enumerate() {
        for &q in support {
            spins_of_qubit[q].push(s);
        }
    }
    for (q, spins) in spins_of_qubit.iter().enumerate() {
        if spins.len() != 4 {
            return Err(Error::Internal(format!(
                "qubit {q} shared by {} stabilizers, expected 4",
                spins.len()
            )));
        }
    }

    // Anchor and parity of the coupling owned by each qubit, plus spin
    // position tags, per the lattice conventions in the module docs.
    let (geometry, spin_positions, anchor_of_qubit): (Geometry, Vec<[usize; 3]>, Vec<Anchor>) =
        match code.kind() {
            CodeKind::Checkerboard => {
                let positions = code.stabilizer_anchors(spin_sector).to_vec();
                let anchors = (0..code.qubit_count())
                    .map(|q| {
                        let c = code.qubit_coord(q);
                        if (c.x + c.y + c.z).is_multiple_of(2) {
                            Anchor {
                                pos: [c.x, c.y, c.z],
                                parity: Parity::Minus,
                            }
                        } else {
                            Anchor {
                                pos: [
                                    sub_mod(c.x, 1, l),
                                    sub_mod(c.y, 1, l),
                                    sub_mod(c.z, 1, l),
                                ],
                                parity: Parity::Plus,
                            }
                        }
                    })
                    .collect();
                (Geometry::CheckerboardFcc { l }, positions, anchors)
            }
            CodeKind::Haah => {
                // With spins on Z stabilizers the positions are the inverted
                // cube anchors and family 2 carries the corner tetrahedron;
                // with spins on X stabilizers the positions are the anchors
                // themselves and family 1 carries it. Both qubit families of
                // a site anchor at the same vertex.
                let invert = spin_sector == Sector::Z;
                let positions = code
                    .stabilizer_anchors(spin_sector)
                    .iter()
                    .map(|&[x, y, z]| {
                        if invert {
                            [sub_mod(0, x, l), sub_mod(0, y, l), sub_mod(0, z, l)]
                        } else {
                            [x, y, z]
                        }
                    })
                    .collect();
                let anchors = (0..code.qubit_count())
                    .map(|q| {
                        let c = code.qubit_coord(q);
                        let (pos, plus_family) = if invert {
                            (
                                [
                                    sub_mod(0, c.x, l),
                                    sub_mod(0, c.y, l),
                                    sub_mod(0, c.z, l),
                                ],
                                2u8,
                            )
                        } else {
                            (
                                [
                                    sub_mod(c.x, 1, l),
                                    sub_mod(c.y, 1, l),
                                    sub_mod(c.z, 1, l),
                                ],
                                1u8,
                            )
                        };
                        Anchor {
                            pos,
                            parity: if c.family == plus_family {
                                Parity::Plus
                            } else {
                                Parity::Minus
                            },
                        }
                    })
                    .collect();
                (Geometry::HaahCubic { l }, positions, anchors)
            }
        };

    // Order couplings by (z, y, x) of the anchor, then `+` before `-`.
    let mut order: Vec<usize> = (0..code.qubit_count()).collect();
    order.sort_by_key(|&q| {
        let a = &anchor_of_qubit[q];
        (
            a.pos[2],
            a.pos[1],
            a.pos[0],
            matches!(a.parity, Parity::Minus) as u8,
        )
    });

    let mut couplings = Vec::with_capacity(order.len());
    let mut anchors = Vec::with_capacity(order.len());
    let mut qubit_of_coupling = Vec::with_capacity(order.len());
    let mut coupling_of_qubit = vec![0usize; order.len()];
    for (c, &q) in order.iter().enumerate() {
        couplings.push(spins_of_qubit[q].clone());
        anchors.push(anchor_of_qubit[q]);
        qubit_of_coupling.push(q);
        coupling_of_qubit[q] = c;
    }

    Ok(CouplingHypergraph {
        n_spins,
        couplings,
        geometry,
        spin_positions,
        anchors,
        coupling_of_qubit,
        qubit_of_coupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_checkerboard, build_haah, ErrorConfig};
    use crate::rng::{Stream, StreamKey};
    use std::collections::BTreeSet;

    #[test]
    fn checkerboard_mapping_shape() {
        let code = build_checkerboard(4).unwrap();
        let h = map_error_model(&code, Sector::X).unwrap();
        assert_eq!(h.spin_count(), 32);
        assert_eq!(h.coupling_count(), 64);
        assert!(h.couplings().iter().all(|c| c.len() == 4));
        assert_eq!(h.geometry(), Geometry::CheckerboardFcc { l: 4 });
    }

    #[test]
    fn haah_mapping_shape() {
        let code = build_haah(2).unwrap();
        for sector in [Sector::X, Sector::Z] {
            let h = map_error_model(&code, sector).unwrap();
            assert_eq!(h.spin_count(), 8);
            assert_eq!(h.coupling_count(), 16);
            assert!(h.couplings().iter().all(|c| c.len() == 4));
        }
    }

    #[test]
    fn all_couplings_are_four_body_across_sizes() {
        for l in [2, 4, 6] {
            let code = build_checkerboard(l).unwrap();
            for sector in [Sector::X, Sector::Z] {
                let h = map_error_model(&code, sector).unwrap();
                assert!(h.couplings().iter().all(|c| c.len() == 4));
            }
        }
        for l in [2, 3, 4] {
            let code = build_haah(l).unwrap();
            for sector in [Sector::X, Sector::Z] {
                let h = map_error_model(&code, sector).unwrap();
                assert!(h.couplings().iter().all(|c| c.len() == 4));
            }
        }
    }

    #[test]
    fn haah_anchors_form_literal_tetrahedra() {
        // Every anchor must carry exactly one corner (+) and one even (-)
        // tetrahedron, with the stated offsets.
        let code = build_haah(3).unwrap();
        let l = 3;
        for sector in [Sector::X, Sector::Z] {
            let h = map_error_model(&code, sector).unwrap();
            let pos_of_spin = h.spin_positions();
            for (c, spins) in h.couplings().iter().enumerate() {
                let a = h.anchors()[c];
                let offsets: BTreeSet<[usize; 3]> = spins
                    .iter()
                    .map(|&s| {
                        let p = pos_of_spin[s];
                        [
                            (p[0] + l - a.pos[0]) % l,
                            (p[1] + l - a.pos[1]) % l,
                            (p[2] + l - a.pos[2]) % l,
                        ]
                    })
                    .collect();
                let expect: BTreeSet<[usize; 3]> = match a.parity {
                    Parity::Plus => [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
                    Parity::Minus => [[0, 0, 0], [1, 1, 0], [0, 1, 1], [1, 0, 1]],
                }
                .into_iter()
                .collect();
                assert_eq!(offsets, expect, "sector {sector} coupling {c}");
            }
        }
    }

    #[test]
    fn disorder_edge_rates() {
        let code = build_checkerboard(4).unwrap();
        let h = map_error_model(&code, Sector::X).unwrap();
        let d0 = sample_disorder(&h, 0.0, 7).unwrap();
        assert!(d0.eta.iter().all(|&e| e == 1));
        let d1 = sample_disorder(&h, 1.0, 7).unwrap();
        assert!(d1.eta.iter().all(|&e| e == -1));
        assert!(sample_disorder(&h, 1.5, 7).is_err());
        assert!(sample_disorder(&h, -0.1, 7).is_err());
    }

    #[test]
    fn disorder_rate_within_binomial_interval() {
        let code = build_checkerboard(10).unwrap();
        let h = map_error_model(&code, Sector::X).unwrap();
        let p = 0.107;
        let d = sample_disorder(&h, p, 20260417).unwrap();
        let n = h.coupling_count() as f64;
        let flips = d.eta.iter().filter(|&&e| e < 0).count() as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!(
            (flips - n * p).abs() <= 4.0 * sigma,
            "flips {flips} expected {} +- {}",
            n * p,
            4.0 * sigma
        );
    }

    #[test]
    fn clean_energy_is_minus_coupling_count() {
        let code = build_checkerboard(4).unwrap();
        let h = map_error_model(&code, Sector::X).unwrap();
        let d = DisorderRealization::clean(h.coupling_count());
        let spins = vec![1i8; h.spin_count()];
        assert_eq!(h.energy(&d, &spins), -64);
    }

    #[test]
    fn energy_matches_independent_recount() {
        let code = build_haah(2).unwrap();
        let h = map_error_model(&code, Sector::Z).unwrap();
        let d = sample_disorder(&h, 0.3, 99).unwrap();
        let mut s = Stream::new(StreamKey::root(4));
        for _ in 0..20 {
            let spins: Vec<i8> = (0..h.spin_count()).map(|_| s.sign(0.5)).collect();
            let mut expect = 0i64;
            for (c, cs) in h.couplings().iter().enumerate() {
                let prod: i64 = cs.iter().map(|&i| spins[i] as i64).product();
                expect -= d.eta[c] as i64 * prod;
            }
            assert_eq!(h.energy(&d, &spins), expect);
        }
    }

    #[test]
    fn plane_flips_preserve_clean_energy() {
        for l in [4, 6] {
            let code = build_checkerboard(l).unwrap();
            let h = map_error_model(&code, Sector::X).unwrap();
            let d = DisorderRealization::clean(h.coupling_count());
            let mut s = Stream::new(StreamKey::root(17));
            for _ in 0..10 {
                let spins: Vec<i8> = (0..h.spin_count()).map(|_| s.sign(0.5)).collect();
                let e0 = h.energy(&d, &spins);
                for axis in 0..3 {
                    for plane in 0..l {
                        let mut flipped = spins.clone();
                        for (i, p) in h.spin_positions().iter().enumerate() {
                            if p[axis] == plane {
                                flipped[i] = -flipped[i];
                            }
                        }
                        assert_eq!(h.energy(&d, &flipped), e0, "L={l} axis={axis} plane={plane}");
                    }
                }
            }
        }
    }

    #[test]
    fn nishimori_round_trip() {
        assert_eq!(nishimori_beta(0.5).unwrap(), 0.0);
        let beta = nishimori_beta(0.108).unwrap();
        assert!((nishimori_p(beta).unwrap() - 0.108).abs() < 1e-12);
        let mut s = Stream::new(StreamKey::root(3));
        for _ in 0..100 {
            let p = 0.001 + 0.498 * s.next_f64();
            let back = nishimori_p(nishimori_beta(p).unwrap()).unwrap();
            assert!((back - p).abs() < 1e-12);
        }
        assert!(nishimori_beta(0.0).unwrap().is_infinite());
        assert!(nishimori_beta(1.0).unwrap().is_infinite());
        assert!(nishimori_beta(-0.2).is_err());
        assert!(nishimori_p(-1.0).is_err());
        let pt = NishimoriPoint::from_p(0.11).unwrap();
        assert!(((-2.0 * pt.beta).exp() - pt.p / (1.0 - pt.p)).abs() < 1e-12);
    }

    #[test]
    fn gsd_exponents_checkerboard() {
        // g = 3L - 3: the plane-flip orbit of the uniform state provides
        // 2^{3L-3} distinct exact ground states, and the incidence rank
        // shows there are no others.
        for (l, g) in [(2usize, 3usize), (4, 9), (6, 15)] {
            let code = build_checkerboard(l).unwrap();
            let h = map_error_model(&code, Sector::X).unwrap();
            assert_eq!(h.classical_gsd_exponent(), g, "L={l}");
        }

        // Independent route at L = 4: enumerate the plane-flip images of
        // the uniform configuration and count the distinct ground states.
        let l = 4usize;
        let code = build_checkerboard(l).unwrap();
        let h = map_error_model(&code, Sector::X).unwrap();
        let d = DisorderRealization::clean(h.coupling_count());
        let mut distinct = std::collections::HashSet::new();
        for mask in 0u32..(1 << (3 * l)) {
            let mut spins = vec![1i8; h.spin_count()];
            for axis in 0..3 {
                for plane in 0..l {
                    if mask >> (axis * l + plane) & 1 == 1 {
                        for (i, p) in h.spin_positions().iter().enumerate() {
                            if p[axis] == plane {
                                spins[i] = -spins[i];
                            }
                        }
                    }
                }
            }
            assert_eq!(h.energy(&d, &spins), -(l as i64).pow(3));
            distinct.insert(spins);
        }
        assert_eq!(distinct.len(), 1 << (3 * l - 3));
    }

    #[test]
    fn gsd_exponents_haah() {
        for (l, g) in [(2usize, 3usize), (3, 1), (4, 7)] {
            let code = build_haah(l).unwrap();
            let h = map_error_model(&code, Sector::X).unwrap();
            assert_eq!(h.classical_gsd_exponent(), g, "L={l}");
        }
    }

    #[test]
    fn flip_couplings_involution_and_class() {
        let code = build_checkerboard(4).unwrap();
        let h = map_error_model(&code, Sector::X).unwrap();
        let d = sample_disorder(&h, 0.2, 5).unwrap();

        let same = h.flip_couplings(&d, &[]).unwrap();
        assert_eq!(same, d);

        let set: Vec<usize> = vec![0, 5, 17];
        let twice = h
            .flip_couplings(&h.flip_couplings(&d, &set).unwrap(), &set)
            .unwrap();
        assert_eq!(twice, d);

        assert!(h.flip_couplings(&d, &[9999]).is_err());

        // Flipping a same-sector stabilizer support leaves the syndrome of
        // the flipped-qubit pattern invariant.
        let support = &code.stabilizers(Sector::X)[3];
        let flipped = h.flip_couplings(&d, support).unwrap();
        let syn_before = code
            .syndrome(&ErrorConfig::new(Sector::X, d.flipped_qubits(&h)))
            .unwrap();
        let syn_after = code
            .syndrome(&ErrorConfig::new(Sector::X, flipped.flipped_qubits(&h)))
            .unwrap();
        assert_eq!(syn_before, syn_after);
    }

    #[test]
    fn single_error_frustration_matches_syndrome() {
        for code in [build_checkerboard(4).unwrap(), build_haah(2).unwrap()] {
            for sector in [Sector::X, Sector::Z] {
                let h = map_error_model(&code, sector).unwrap();
                for q in 0..code.qubit_count() {
                    let syn = code.syndrome(&ErrorConfig::new(sector, [q])).unwrap();
                    let c = h.coupling_of_qubit(q).unwrap();
                    let spins: BTreeSet<usize> = h.couplings()[c].iter().copied().collect();
                    assert_eq!(spins, syn.violated, "{:?} {sector} qubit {q}", code.kind());
                }
            }
        }
    }

    #[test]
    fn energy_invariant_under_coupling_relabeling() {
        let code = build_haah(2).unwrap();
        let h = map_error_model(&code, Sector::X).unwrap();
        let d = sample_disorder(&h, 0.3, 8).unwrap();
        // Rebuild with couplings listed in a permuted order.
        let mut perm: Vec<usize> = (0..h.coupling_count()).collect();
        let mut s = Stream::new(StreamKey::root(30));
        s.shuffle(&mut perm);
        let permuted = CouplingHypergraph::irregular(
            h.spin_count(),
            perm.iter().map(|&c| h.couplings()[c].clone()).collect(),
        )
        .unwrap();
        let permuted_d = DisorderRealization {
            eta: perm.iter().map(|&c| d.eta[c]).collect(),
            p: d.p,
            seed: d.seed,
        };
        let mut rng = Stream::new(StreamKey::root(31));
        for _ in 0..10 {
            let spins: Vec<i8> = (0..h.spin_count()).map(|_| rng.sign(0.5)).collect();
            assert_eq!(h.energy(&d, &spins), permuted.energy(&permuted_d, &spins));
        }
    }

    #[test]
    fn hypergraph_file_round_trip() {
        let code = build_haah(2).unwrap();
        let h = map_error_model(&code, Sector::X).unwrap();
        let mut buf = Vec::new();
        h.write(&mut buf).unwrap();
        let back = read_hypergraph(&buf[..], "mem").unwrap();
        assert_eq!(h, back);
    }

    #[test]
    fn disorder_file_round_trip() {
        let code = build_checkerboard(2).unwrap();
        let h = map_error_model(&code, Sector::Z).unwrap();
        let d = sample_disorder(&h, 0.25, 1234).unwrap();
        let mut buf = Vec::new();
        d.write(&mut buf).unwrap();
        let back = DisorderRealization::read(&buf[..], "mem").unwrap();
        assert_eq!(d, back);
    }
}
