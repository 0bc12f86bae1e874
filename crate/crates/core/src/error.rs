//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by model construction, estimation and portfolio routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector that must lie on the unit sphere does not.
    #[error("vector is not unit norm: |norm - 1| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NonUnitVector { deviation: f64, tolerance: f64 },

    /// A variance (factor or specific) is zero, negative or non-finite.
    #[error("non-positive or non-finite variance: {value}")]
    NonPositiveVariance { value: f64 },

    /// Vector or matrix dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A dense covariance matrix is not symmetric within tolerance.
    #[error("matrix is not symmetric: max relative asymmetry {max_asymmetry:.3e}")]
    NotSymmetric { max_asymmetry: f64 },

    /// The returns panel is empty or carries no variance.
    #[error("degenerate returns panel: {0}")]
    DegeneratePanel(String),

    /// A geometric quantity sits at a point where a formula is undefined.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// The leading eigenvalue is too small relative to the bulk for the
    /// correction parameter estimate to exist.
    #[error(
        "weak-factor regime: T*lambda1 - N*delta2_hat = {denominator:.3e} is not positive"
    )]
    WeakFactor { denominator: f64 },

    /// The (N, T) pair violates a formula's validity constraint.
    #[error("invalid sample shape: {0}")]
    InvalidSampleShape(String),

    /// Covariance matrix cannot be inverted.
    #[error("singular covariance matrix")]
    SingularCovariance,

    /// Invalid run or calibration configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Malformed CSV or key=value input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
