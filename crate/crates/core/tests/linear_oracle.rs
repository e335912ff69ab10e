//! With β = 0 and no vaccination the model is linear, `dx/dt = M x`, so the
//! matrix exponential gives the exact trajectory.

use nalgebra::{Matrix4, Vector4};
use seirvax::presets::{baseline_params, baseline_state};
use seirvax::{integrate, ControlConfig, ControlHold, Params, Scenario, State, VaccinationLaw};

fn linear_params() -> Params {
    let mut p = baseline_params::<f64>();
    p.beta = 0.0;
    p
}

fn system_matrix(p: &Params) -> Matrix4<f64> {
    let a = p.immune_decay();
    #[rustfmt::skip]
    let m = Matrix4::new(
        -p.mu + p.nu, p.nu, p.nu, p.omega + p.nu,
        0.0, -(p.mu + p.sigma), 0.0, 0.0,
        0.0, p.sigma, -(p.mu + p.gamma), 0.0,
        0.0, 0.0, p.recovery_to_immune(), -a,
    );
    m
}

fn exact(p: &Params, x0: &State, t: f64) -> State {
    let y = (system_matrix(p) * t).exp() * Vector4::new(x0.s, x0.e, x0.i, x0.r);
    State::new(y[0], y[1], y[2], y[3])
}

fn scenario(dt: f64, horizon: f64) -> Scenario {
    let params = linear_params();
    let mut control = ControlConfig::defaults_for(&params);
    control.law = VaccinationLaw::None;
    Scenario {
        name: "linear".into(),
        params,
        x0: baseline_state(),
        control,
        horizon,
        dt,
        steady_state_tol: 1e-6,
        hold: ControlHold::Stage,
    }
}

fn final_error(dt: f64, horizon: f64) -> f64 {
    let sc = scenario(dt, horizon);
    let tr = integrate(&sc).unwrap();
    let x = tr.last().unwrap().state;
    let y = exact(&sc.params, &sc.x0, horizon);
    let n0 = sc.x0.total();
    x.to_array()
        .iter()
        .zip(y.to_array())
        .map(|(a, b)| (a - b).abs() / n0)
        .fold(0.0, f64::max)
}

#[test]
fn matches_matrix_exponential_at_default_step() {
    let err = final_error(0.01, 50.0);
    assert!(err < 1e-8, "error {err}");
}

#[test]
fn fourth_order_error_ratios() {
    let errs: Vec<f64> = [0.8, 0.4, 0.2, 0.1].iter().map(|&dt| final_error(dt, 40.0)).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio} from {errs:?}");
    }
}

#[test]
fn exact_solution_conserves_the_drift_balance() {
    // the column sums of M are ν − μ except the I column, which loses ργ
    let p = linear_params();
    let m = system_matrix(&p);
    let ones = Vector4::repeat(1.0).transpose() * m;
    for c in [0, 1, 3] {
        assert!((ones[c] - (p.nu - p.mu)).abs() < 1e-15);
    }
    assert!((ones[2] - (p.nu - p.mu - p.rho * p.gamma)).abs() < 1e-15);
}
