use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The circulant embedding has an eigenvalue below `-tol_eig`.
    #[error("circulant embedding of size {size} is not PSD (min eigenvalue {min_eigenvalue:e})")]
    EmbeddingNotPsd { size: usize, min_eigenvalue: f64 },

    #[error("{count} points exceed the dense sampler cap of {cap}")]
    TooManyPoints { count: usize, cap: usize },

    #[error("covariance of {size} points is not numerically PSD after jitter {jitter:e}")]
    FactorizationFailure { size: usize, jitter: f64 },

    #[error("inspection cap of {cap} points reached at time {reached} before horizon {horizon}")]
    CapExceeded { cap: usize, reached: f64, horizon: f64 },

    #[error("asymptotic branch `{branch}` needs the constant `{constant}`")]
    MissingConstant { branch: &'static str, constant: &'static str },

    #[error("{what} requires {requirement}")]
    WrongBranch { what: &'static str, requirement: &'static str },

    #[error("x-grid upper end {x_hi} too short: e^x_hi * P(max > x_hi) = {tail_mass:e}")]
    GridTooShort { x_hi: f64, tail_mass: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
