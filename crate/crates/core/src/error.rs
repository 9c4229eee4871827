use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {}", .0.join("; "))]
    InvalidGrid(Vec<String>),

    #[error("invalid physics parameters: {0}")]
    InvalidParams(String),

    #[error("preset not applicable: {0}")]
    InvalidPreset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("slice {slice} needs {needed} snapshots centred on it, {available} available")]
    InsufficientSnapshots {
        needed: usize,
        available: usize,
        slice: usize,
    },

    #[error("snapshot times are not uniformly spaced near index {index}")]
    NonUniformSpacing { index: usize },

    #[error("numerical abort at t = {t}: {reason}")]
    NumericalAbort { t: f64, reason: String },

    #[error("sign audit is ambiguous: {0}")]
    AmbiguousAudit(String),

    #[error("source history [{have_start}, {have_end}] does not cover emission times [{need_start}, {need_end}]")]
    ConeNotCovered {
        need_start: f64,
        need_end: f64,
        have_start: f64,
        have_end: f64,
    },

    #[error("reception point lies inside the source support; enable near-field mode")]
    InsideSourceSupport,

    #[error("loop segment {segment} passes through the masked (low-density) region")]
    LoopMasked { segment: usize },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    StabilityBound { dt: f64, bound: f64 },

    #[error("solver stopped after {iterations} iterations at relative residual {residual:e} (condition estimate {condition_estimate:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        condition_estimate: f64,
    },

    #[error(
        "perturbation has support outside the background mask (max |dn| there = {max_outside:e})"
    )]
    SupportViolation { max_outside: f64 },

    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
