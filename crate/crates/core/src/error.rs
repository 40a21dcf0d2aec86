//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by signal construction, encoding, and recovery.
#[derive(Debug, Error)]
pub enum Error {
    /// Signal parameters violate a model invariant (empty pulse list,
    /// delay outside (0, T], duplicate delays, non-positive period).
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    /// Kernel parameters are malformed (K = 0 or non-positive omega0).
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// Signal and kernel disagree on the fundamental frequency.
    #[error("kernel/signal mismatch: signal omega0 = {signal_omega0}, kernel omega0 = {kernel_omega0}")]
    KernelSignalMismatch {
        signal_omega0: f64,
        kernel_omega0: f64,
    },

    /// The pulse spectrum vanishes on a working frequency, so the
    /// corresponding coefficient cannot be divided out.
    #[error("pulse spectrum is zero at harmonic k = {k} (omega = {omega})")]
    PulseSpectrumZero { k: i64, omega: f64 },

    /// TEM parameters are non-positive.
    #[error("invalid TEM parameters: {0}")]
    InvalidTemParams(String),

    /// The encoder bias does not dominate the signal bound.
    #[error("bias {bias} must exceed the signal bound {bound}")]
    BiasTooSmall { bias: f64, bound: f64 },

    /// The firing-time bracket did not contain a sign change even after
    /// recomputing the signal bound.
    #[error("no sign change in firing bracket after t = {t_prev}")]
    BracketFailure { t_prev: f64 },

    /// Fewer firings than the linear system needs.
    #[error("too few firings: got {got}, need at least {needed}")]
    TooFewFirings { got: usize, needed: usize },

    /// The forward matrix lost rank (numerical rank below the unknown count).
    #[error("rank-deficient system: numerical rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },

    /// Ambiguous null space or otherwise degenerate estimation problem.
    #[error("ill-posed estimation: {0}")]
    IllPosed(String),

    /// The eigensolver for the companion matrix did not converge.
    #[error("polynomial root finding failed")]
    RootFindingFailure,

    /// Delay estimates too close together to separate amplitudes.
    #[error("ill-conditioned amplitude system: minimum delay separation {min_separation}")]
    IllConditionedVandermonde { min_separation: f64 },

    /// Sequence lengths disagree where they must match.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A band handed to the denoiser is shorter than the lift requires.
    #[error("band of length {len} too short: need at least {needed}")]
    BandTooShort { len: usize, needed: usize },

    /// A text input could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },

    /// Caller violated an operation precondition not covered above.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
