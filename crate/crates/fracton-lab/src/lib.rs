//! A simulation laboratory for the error thresholds of fracton stabilizer
//! codes.
//!
//! The crate maps CSS stabilizer codes on periodic cubic lattices (the
//! checkerboard code and the cubic code) onto disordered multi-spin Ising
//! models, runs parallel-tempering Monte Carlo over quenched-disorder
//! ensembles, and analyzes the phase-transition signatures and
//! entropy-duality relations used to locate optimal error thresholds.
//!
//! ## Examples
//!
//! The `examples/` directory is the primary tour of the library, one
//! runnable program per capability:
//!
//! - **`build_codes`** - construct both codes, inspect stabilizers,
//!   syndromes and logical-qubit counts
//! - **`map_to_ising`** - compile code sectors into coupling hypergraphs
//!   and verify ground-state degeneracies
//! - **`metropolis_vs_exact`** - single-replica kernels against exact
//!   enumeration on a small instance
//! - **`parallel_tempering`** - temperature ladders, swap statistics and
//!   ladder tuning
//! - **`reweighting`** - single-histogram reweighting against exact and
//!   direct-simulation references
//! - **`disorder_ensemble`** - a desk-scale quenched-disorder ensemble with
//!   jackknife errors, checkpointing and run-directory output
//! - **`nishimori_duality`** - binary-entropy duality: threshold tables,
//!   dual rates, the self-dual fixed point and the replicated-factor
//!   hierarchy
//! - **`first_order_scan`** - a long-running scan for the double-peaked
//!   energy histogram of the clean model (hours, off by default)
//!
//! ```bash
//! cargo run --release -p fracton-lab --example build_codes
//! cargo run --release -p fracton-lab --example disorder_ensemble
//! ```
//!
//! The same functionality is scriptable through the thin `fracton-lab`
//! binary (`map`, `run`, `analyze`, `duality`, `gsd`, `oracle-check`,
//! `resume`); see the README for the file formats.

pub mod cli;
pub mod code;
pub mod duality;
pub mod ensemble;
pub mod error;
pub mod exact;
pub mod gf2;
pub mod ising;
pub mod mc;
pub mod observables;
pub mod pt;
pub mod rng;

pub use code::{build_checkerboard, build_haah, CodeKind, ErrorConfig, Sector, StabilizerCode};
pub use error::{Error, Result};
pub use ising::{
    map_error_model, nishimori_beta, nishimori_p, sample_disorder, CouplingHypergraph,
    DisorderRealization, NishimoriPoint,
};
pub use mc::{ReplicaState, SpinModel};
pub use pt::{build_ladder, LadderScheme, PtState, TemperatureLadder};
