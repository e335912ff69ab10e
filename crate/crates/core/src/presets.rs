//! Named scenarios built on the reference parameter set.

use crate::control::{ControlConfig, GFamily, HFamily, VaccinationLaw};
use crate::model::{ModelParams, StateVec};
use crate::scalar::Scalar;
use crate::sim::{ControlHold, ScenarioConfig};

/// `1/μ = 255`, `1/σ = 2.2`, `γ = σ`, `1/ω = 15`, `ρ = 0.1`, `1/ν = 150`,
/// `β = 1.66`, reference levels `I⁰ = N⁰ = 1000`. Rates are per day.
pub fn baseline_params<T: Scalar>() -> ModelParams<T> {
    let inv = |d: f64| T::one() / T::lit(d);
    ModelParams::new(
        inv(255.0),
        inv(15.0),
        T::lit(1.66),
        inv(2.2),
        inv(2.2),
        T::lit(0.1),
        inv(150.0),
    )
    .with_reference_levels(T::lit(1000.0), T::lit(1000.0))
}

pub fn baseline_state<T: Scalar>() -> StateVec<T> {
    StateVec::new(T::lit(400.0), T::lit(150.0), T::lit(250.0), T::lit(200.0))
}

/// Unit gains, `1/c = 5` days, exponential-approach reference and the
/// compensating `g`. `ε₀ = 0.5` keeps the compensating choice inside its
/// admissible range `ε₀ > max(ν, γ(1−ρ))`; `V_a` does not depend on it.
pub fn baseline_control<T: Scalar>(params: &ModelParams<T>, law: VaccinationLaw) -> ControlConfig<T> {
    ControlConfig {
        eps0: T::half(),
        c: T::one() / T::lit(5.0),
        g_family: GFamily::InteriorCompensating,
        h_family: HFamily::ExponentialApproach,
        law,
        ..ControlConfig::defaults_for(params)
    }
}

fn baseline<T: Scalar>(name: &str, law: VaccinationLaw) -> ScenarioConfig<T> {
    let params = baseline_params();
    ScenarioConfig {
        name: name.into(),
        control: baseline_control(&params, law),
        params,
        x0: baseline_state(),
        horizon: T::lit(600.0),
        dt: T::lit(0.01),
        steady_state_tol: T::lit(1e-6),
        hold: ControlHold::Stage,
    }
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: [Preset; 5] = [
    Preset {
        name: "fig1-no-vaccination",
        description: "reference epidemic without vaccination, 600 days",
    },
    Preset {
        name: "fig2-saturated",
        description: "feedback vaccination with V clipped to [0, 1]",
    },
    Preset {
        name: "fig3-unsaturated",
        description: "feedback vaccination allowed above one, with zero resets",
    },
    Preset {
        name: "immunity-fade",
        description: "infection-free run where the exponential-fade g drives R to zero",
    },
    Preset {
        name: "natural-tracking",
        description: "constant population, no infection recovery, R tracks h N with g = 0",
    },
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.name)
}

pub fn preset<T: Scalar>(name: &str) -> Option<ScenarioConfig<T>> {
    Some(match name {
        "fig1-no-vaccination" => baseline(name, VaccinationLaw::None),
        "fig2-saturated" => baseline(name, VaccinationLaw::Saturated),
        "fig3-unsaturated" => baseline(name, VaccinationLaw::Unsaturated),
        "immunity-fade" => immunity_fade(),
        "natural-tracking" => natural_tracking(),
        _ => return None,
    })
}

/// Infection-free start, `ε₀ = ν`, `ϑ = 0.08`, fade profile for the reference.
pub fn immunity_fade<T: Scalar>() -> ScenarioConfig<T> {
    let mut sc = baseline::<T>("immunity-fade", VaccinationLaw::Saturated);
    sc.x0 = StateVec::new(T::lit(800.0), T::zero(), T::zero(), T::lit(200.0));
    sc.control.eps0 = sc.params.nu;
    sc.control.vartheta = T::lit(0.08);
    sc.control.g_family = GFamily::ExponentialFade;
    sc.control.h_family = HFamily::ExponentialFade;
    sc.horizon = T::lit(200.0);
    sc
}

/// `ρ = 0`, `ν = μ`, `ε₀ = μ + ω`, `g ≡ 0`, natural-approach reference.
///
/// Tracking needs `V_a = (μ+ω)/ν ≫ 1`, so the unsaturated law is used.
pub fn natural_tracking<T: Scalar>() -> ScenarioConfig<T> {
    let mut sc = baseline::<T>("natural-tracking", VaccinationLaw::Unsaturated);
    sc.params.rho = T::zero();
    sc.params.nu = sc.params.mu;
    sc.x0 = StateVec::new(T::lit(800.0), T::zero(), T::zero(), T::lit(200.0));
    sc.control.eps0 = sc.params.immune_decay();
    sc.control.g_family = GFamily::Zero;
    sc.control.h_family = HFamily::NaturalApproach;
    sc
}
