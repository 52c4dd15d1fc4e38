use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("policy emitted invalid weights at t={t}: {reason}")]
    InvalidPolicyOutput { t: usize, reason: String },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("product component {index} reads history outside its own variable")]
    ForeignHistory { index: usize },

    #[error("policy mismatch: {0}")]
    PolicyMismatch(String),

    #[error("non-binary response {value} at row {row}")]
    NonBinaryResponse { row: usize, value: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("covariance not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("empty pool at t={t} for x arm {x_arm}, z arm {z_arm}")]
    EmptyPool { t: usize, x_arm: usize, z_arm: usize },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
