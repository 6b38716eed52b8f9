use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be positive: {what}")]
    ZeroDimension { what: &'static str },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{what} is not normalized: norm² = {norm_sq}")]
    NotNormalized { what: &'static str, norm_sq: f64 },

    #[error("{what} contains a non-finite value")]
    NonFinite { what: &'static str },

    #[error("matrix is not Hermitian: max |A - A†| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("density matrix trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("density matrix has negative eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("matrix dimension {dim} exceeds the cap of {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("moment order {order} outside 1..=4")]
    BadMomentOrder { order: u32 },

    #[error("time grid invalid: {reason}")]
    BadGrid { reason: String },

    #[error("perturbative result left its regime: smallest eigenvalue {min_eigenvalue:e}")]
    OutOfRegime { min_eigenvalue: f64 },

    #[error("epsilon = {epsilon:e}: no einselection at this order")]
    NoEinselection { epsilon: f64 },

    #[error("Re(eta) = {re_eta:e} <= 0: no decay at this order")]
    NoDecay { re_eta: f64 },

    #[error("pair-beta identity violated: residual {residual:e}")]
    InconsistentMoments { residual: f64 },

    #[error("Lambda = {lambda:e} is negative beyond tolerance")]
    NegativeLambda { lambda: f64 },

    #[error("initial-state coefficient {index} is zero; use the embedded two-level formulas")]
    ZeroCoefficient { index: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
