use thiserror::Error;

/// Errors produced by the laboratory's construction, mapping, sampling and
/// analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice size L={l}: {reason}")]
    InvalidLatticeSize { l: usize, reason: &'static str },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("probability {p} outside [0, 1]")]
    InvalidProbability { p: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("temperature ladder invalid: {0}")]
    InvalidLadder(String),

    #[error("instance too large for exact enumeration: {spins} spins (cap {cap})")]
    TooLarge { spins: usize, cap: usize },

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("histograms have incompatible binning")]
    IncompatibleHistograms,

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("operation requires checkerboard lattice geometry")]
    GeometryMismatch,

    #[error("missing config field `{0}`")]
    MissingConfigField(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("file format error in {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("checkpoint does not match the run configuration: {0}")]
    CheckpointMismatch(String),

    #[error("all disorder realizations failed equilibration")]
    AllRealizationsFailed,

    #[error("equilibration quorum not met: {kept} of {total} realizations usable, need 2")]
    EquilibrationQuorum { kept: usize, total: usize },

    #[error("internal invariant breach: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
