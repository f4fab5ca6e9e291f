use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("boundary weight is not strictly positive (sampled minimum {min:e})")]
    NonPositiveWeight { min: f64 },

    #[error("degenerate sampling: {samples} samples cannot resolve degree {degree}")]
    DegenerateSampling { samples: usize, degree: usize },

    #[error("mass matrix is not positive definite (weight non-positive or aliased)")]
    MassNotPositiveDefinite,

    #[error("domain {0} is not supported by this solver")]
    UnsupportedDomain(&'static str),

    #[error("boundary operator is numerically singular")]
    SingularOperator,

    #[error("eigenvalue cluster at index {index} (size {size}): {context}")]
    Cluster {
        index: usize,
        size: usize,
        context: &'static str,
    },

    #[error("requested {requested} eigenvalues but the discrete space has dimension {available}")]
    TooManyEigenvalues { requested: usize, available: usize },

    #[error("iterative eigensolver did not converge after {0} steps")]
    NoConvergence(usize),

    #[error("Fourier degree {needed} required, exceeds cap {cap}")]
    DegreeCap { needed: usize, cap: usize },

    #[error("weights overlap: epsilon {eps} too large for attachment separation {separation}")]
    OverlappingBumps { eps: f64, separation: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
