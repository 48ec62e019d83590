use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator must be square with dim >= 1, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("{what} is not Hermitian: max|M - M^dagger| = {deviation:.3e}")]
    NotHermitian { what: String, deviation: f64 },

    #[error("scattering coefficient must have unit modulus, |s| = {modulus}")]
    NonUnitScattering { modulus: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("superoperator of size {size}x{size} exceeds the configured cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("step size underflow at t = {t:.6e} (dt = {dt:.3e}); system is too stiff for the requested tolerance")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("Liouvillian kernel has dimension {kernel_dim}; steady state is not unique")]
    DegenerateKernel { kernel_dim: usize },

    #[error("drift matrix is not Hurwitz (max Re eigenvalue = {max_re:.3e}); no unique steady covariance")]
    NotHurwitz { max_re: f64 },

    #[error("coherent amplitude |alpha|^2 = {alpha_sq:.3} exceeds N/2 = {limit:.1} for truncation N = {truncation}")]
    TruncationUnsafe {
        alpha_sq: f64,
        limit: f64,
        truncation: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no results found in {0}")]
    MissingResults(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
