use thiserror::Error;

/// Errors raised by the post-processing kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// A covariance matrix violates the uncertainty principle.
    #[error("unphysical state: symplectic eigenvalue {0} < 1")]
    Unphysical(f64),
    /// Not enough samples for the requested estimate.
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    /// The regressor of a linear fit has zero energy.
    #[error("degenerate regressor: sum of squares is zero")]
    DegenerateRegressor,
    /// Worst-case estimation produced a non-positive transmittance bound.
    #[error("estimation failure: worst-case slope bound {0} is not positive")]
    EstimationFailure(f64),
    /// An octonion with (numerically) zero norm was inverted.
    #[error("singular element: norm {0} too small")]
    Singular(f64),
    /// A slice length does not match the expected length.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    /// A requested code rate cannot be realized by puncturing and shortening.
    #[error("rate {requested} outside achievable interval [{min}, {max}]")]
    RateOutOfRange { requested: f64, min: f64, max: f64 },
    /// No code in the catalog can be operated within the modulation-variance range.
    #[error("no feasible code in catalog")]
    NoFeasibleCode,
    /// A code description is inconsistent.
    #[error("invalid code: {0}")]
    InvalidCode(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
