//! SEIR epidemic model under true mass action with feedback vaccination.
//!
//! The math is generic over [`Scalar`]; the aliases below fix it to `f64`.

// `!(x > 0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod model;
pub mod positivity;
pub mod presets;
pub mod scalar;
pub mod sim;
pub mod stability;

pub use control::{
    evaluate_law, g_signal, gain_schedule, immune_fade_closed_form, reference, steady_reference_level, tracking_bound,
    vaccination_saturated, vaccination_unsaturated, ControlConfig, ControlSample, GFamily, HFamily, Indicators,
    TrackingCase, VaccinationLaw,
};
pub use error::{Error, Result};
pub use model::{
    build_matrix, derivative, total_population_rate, Compartment, DynamicsMatrix, MatrixVariant, ModelParams,
    StateRate, StateVec,
};
pub use positivity::{apply_reset, check_metzler, decompose_star, metzler_by_parameters, monitor_nonnegativity};
pub use scalar::Scalar;
pub use sim::{
    convergence_study, detect_composition_steady_state, detect_steady_state, integrate, ControlHold, Record, RunStatus,
    ScenarioConfig, SteadyState, Trajectory,
};
pub use stability::{all_verdicts, integral_test, IntegralDiagnostic, StabilityTest, StabilityVerdict};

pub type Params = ModelParams<f64>;
pub type State = StateVec<f64>;
pub type Rate = StateRate<f64>;
pub type Control = ControlConfig<f64>;
pub type Sample = ControlSample<f64>;
pub type Scenario = ScenarioConfig<f64>;
pub type Traj = Trajectory<f64>;
pub type Verdict = StabilityVerdict<f64>;
pub type Diagnostic = IntegralDiagnostic<f64>;
