use alloc::string::String;

/// Everything that can go wrong between parameter validation and pricing.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid model parameter: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("substep count M = {0} must be even and at least 2")]
    OddSubsteps(usize),

    #[error("step length must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("total particle weight is zero")]
    ZeroTotalWeight,

    #[error("particle extinction at step {step}: no particles left after branching")]
    ParticleExtinction { step: usize },

    #[error(
        "particle count {count} at step {step} exceeds capacity {capacity}; \
         the branching threshold is probably too aggressive"
    )]
    CapacityExceeded { step: usize, count: usize, capacity: usize },

    #[error("non-finite {what} for particle {particle} at step {step}")]
    NonFinite { what: &'static str, step: usize, particle: usize },

    #[error("broken genealogy: particle {index} at step {step} points outside the previous step")]
    BrokenGenealogy { step: usize, index: usize },

    #[error("regression design is singular (pivot {pivot:e}, pivot ratio {pivot_ratio:e})")]
    SingularDesign { pivot: f64, pivot_ratio: f64 },

    #[error("non-finite regression coefficient at exercise step {step}, path {path}")]
    NonFiniteCoefficients { step: usize, path: usize },

    #[error(
        "quadrature did not converge: error estimate {estimated_error:e} after {intervals} intervals \
         (requested {tolerance:e})"
    )]
    QuadratureNonConvergence { estimated_error: f64, tolerance: f64, intervals: usize },
}
