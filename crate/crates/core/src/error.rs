use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integrand is not evaluable at e = {at} (returned {value})")]
    NonEvaluable { at: f64, value: String },

    #[error("density is negative at e = {at} ({value})")]
    NegativeDensity { at: f64, value: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("state does not commute with the unperturbed Hamiltonian (commutator norm {norm:.3e})")]
    StateNotCommuting { norm: f64 },

    #[error("Fock space dimension {dim} exceeds the cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("vector is numerically an eigenvector (relative residual {residual:.3e})")]
    EigenvectorInput { residual: f64 },

    #[error("coupling norm |e^(-1/2) f| = {norm} coincides with sqrt(eps_o) = {sqrt_eps}")]
    DegenerateCoupling { norm: f64, sqrt_eps: f64 },

    #[error("moment generating function diverges: gamma = {gamma} is beyond the critical value {critical}")]
    MgfDiverges { gamma: f64, critical: f64 },

    #[error("intensity measure has infinite total mass")]
    DivergentMass,

    #[error("not enough positive tail values: need {needed}, have {available}")]
    InsufficientTail { needed: usize, available: usize },

    #[error("quadrature inconclusive: {0}")]
    Inconclusive(String),

    #[error("configuration error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
