use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported norm order {0} (expected 0..=3)")]
    UnsupportedNormOrder(u8),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered at t = {time}")]
    BlowUp { time: f64 },

    #[error("operator is not positive definite (lowest bound {bound}); increase the shift constant")]
    NotPositive { bound: f64 },

    #[error("Krylov propagation did not converge (error estimate {estimate:.3e}, tolerance {tol:.3e})")]
    KrylovNonConvergence { estimate: f64, tol: f64 },

    #[error("operator too large: {nonzeros} estimated nonzeros (~{bytes} bytes) exceeds limit {limit}")]
    DimensionOverflow { nonzeros: usize, bytes: usize, limit: usize },

    #[error("zero state")]
    ZeroState,

    #[error("state leaves the admissible sector space: {0}")]
    SectorSupport(String),

    #[error("orthogonality defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    OrthogonalityDefect { defect: f64, tol: f64 },

    #[error("coherent weight {tail:.3e} beyond the phonon cutoff exceeds tolerance {tol:.3e}")]
    TruncationTail { tail: f64, tol: f64 },

    #[error("normalization violated: |psi| = {norm}")]
    Normalization { norm: f64 },

    #[error("trajectory has no sample at t = {time}")]
    SamplingMismatch { time: f64 },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("memory guard: cell {cell} needs dimension {dim}, limit is {limit}")]
    MemoryGuard { cell: String, dim: usize, limit: usize },

    #[error("unknown check suite '{0}'")]
    UnknownSuite(String),

    #[error("rate fit: {0}")]
    RateFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
