use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps these onto its exit-code contract via [`Error::exit_code`]:
/// `1` for hypothesis/verification failures, `2` for numerical
/// non-convergence, `3` for configuration and input errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The power iteration failed to converge, or converged to an eigenvector
    /// that is not strictly positive. Carries the last iterate.
    #[error("spectral gap: {message}")]
    SpectralGap { message: String, iterate: Vec<f64> },

    /// A model hypothesis does not hold numerically.
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    /// Traveling waves exist only for speeds strictly above the minimum.
    #[error("no traveling wave exists for c <= c*: requested c = {c}, minimum speed c* = {c_star}")]
    SpeedNotAboveCStar { c: f64, c_star: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    /// The grid cannot resolve the fastest kernel decay rate.
    #[error("grid too coarse: h * max(lambda2) = {0} exceeds 1")]
    Resolution(f64),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// An assertion the algorithm relies on (e.g. monotonicity of iterates)
    /// failed beyond tolerance.
    #[error("internal consistency: {0}")]
    Internal(String),

    /// A simulated state left the invariant box [0, k+].
    #[error("invariance alarm: {0}")]
    Invariance(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code for the CLI: 0 success, 1 hypothesis/verification failure,
    /// 2 numerical non-convergence, 3 config error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => 3,
            Error::NonConvergence(_) | Error::Resolution(_) => 2,
            Error::SpectralGap { .. }
            | Error::Hypothesis(_)
            | Error::SpeedNotAboveCStar { .. }
            | Error::Internal(_)
            | Error::Invariance(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
