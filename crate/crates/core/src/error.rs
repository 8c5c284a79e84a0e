use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e}, residual {residual:e})")]
    NoConvergence { sweeps: usize, off_norm: f64, residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("site {site} out of range for a network of {n} qubits")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("sector of {n} qubits with {ell} excitations has dimension {dim}, above the cap {cap}")]
    SectorTooLarge { n: usize, ell: usize, dim: usize, cap: usize },

    #[error("non-finite value produced: {0}")]
    NonFinite(String),

    #[error("consistency violation: {0}")]
    Consistency(String),

    #[error("time grid under-resolves the fast oscillation: step {step:e} exceeds the required {required:e}")]
    Resolution { step: f64, required: f64 },

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },
}
