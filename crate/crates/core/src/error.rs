use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("atoms {first} and {second} are closer than the minimum separation")]
    AtomsTooClose { first: usize, second: usize },

    #[error("coupled-dipole system is singular (condition estimate {condition_estimate:.3e})")]
    SingularSystem { condition_estimate: f64 },

    #[error("grid point {index} lies within the minimum separation of an atom")]
    GridTooClose { index: usize },

    #[error("lossless resonant atom has no finite transfer matrix")]
    SingularAtomMatrix,

    #[error("transfer matrix admits no transmission solution (m22 vanishes)")]
    NoTransmissionSolution,

    #[error("two-atom geometric series diverges (lossless resonant pair)")]
    ResonantDivergence,

    #[error("hypergeometric power series did not converge after {terms} terms")]
    NonconvergentSeries { terms: usize },

    #[error("adaptive quadrature failed to reach tolerance (error estimate {estimate:.3e})")]
    QuadratureFailure { estimate: f64 },

    #[error("mean-field amplitude vanishes; relative deviation undefined")]
    MftVanishes,

    #[error("Metropolis acceptance rate {acceptance:.3} outside [0.1, 0.9] after adaptation")]
    ChainNotEquilibrated { acceptance: f64 },

    #[error("spectrum maximum lies on the grid boundary")]
    PeakAtBoundary,
}
