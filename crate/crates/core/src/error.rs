use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{model} requires {requirement}, got L = {l}")]
    UnsupportedSize { model: &'static str, l: usize, requirement: &'static str },

    #[error("matrix is not unitary: max |U^dag U - 1| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian: max |H - H^dag| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("dimension {dim} exceeds the dense cap {cap}")]
    SizeCap { dim: usize, cap: usize },

    #[error("ambiguous spectral clustering: {reason}; gaps near threshold: {gaps:?}")]
    AmbiguousClusters { reason: String, gaps: Vec<f64> },

    #[error("decomposition check failed: max violation {violation:.3e}")]
    Verification { violation: f64 },

    #[error("eigensolver did not converge (d = {dim})")]
    NoConvergence { dim: usize },

    #[error("block shape mismatch: {0}")]
    Shape(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
