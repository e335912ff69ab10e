use thiserror::Error;

/// Errors raised by model evaluation, control synthesis and simulation setup.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Total population at or below the extinction threshold; the incidence term divides by it.
    #[error("singular state: total population {total} is not positive")]
    SingularState { total: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid control configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// The constant-part/perturbation split needs N⁰ ≥ I⁰ ≥ N⁰·I/N.
    #[error("decomposition infeasible: {0}")]
    DecompositionInfeasible(String),

    /// A g-family formula was requested under indicator values it is not defined for.
    #[error("inapplicable case: {0}")]
    InapplicableCase(String),

    #[error("degenerate constant: {0}")]
    DegenerateConstant(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("trajectory is not uniformly sampled at record {index}")]
    NonUniformTrajectory { index: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
