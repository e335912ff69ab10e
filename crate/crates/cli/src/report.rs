//! Run summary: steady states, verdicts, integral diagnostic, positivity and identity checks.

use std::fmt::Write as _;

use seirvax::sim::STEADY_WINDOW_DAYS;
use seirvax::stability::all_verdicts;
use seirvax::{
    detect_composition_steady_state, detect_steady_state, integral_test, Diagnostic, RunStatus, Scenario, State,
    SteadyState, Traj, Verdict,
};

/// Tolerance handed to the integral-balance verdict, relative to `N(0)`.
pub const INTEGRAL_REL_TOL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub status: RunStatus<f64>,
    pub final_time: f64,
    pub final_state: State,
    pub steady_state: SteadyState<f64>,
    pub composition: SteadyState<f64>,
    /// `(E + I)/N` at the absolute steady state.
    pub infected_fraction: Option<f64>,
    /// `(E + I)/N` over the steady-composition window.
    pub composition_infected_fraction: Option<f64>,
    /// `(dN/dt)/N` at the last sample, 1/day.
    pub final_drift_rate: f64,
    pub verdicts: Vec<Verdict>,
    pub integral: Result<Diagnostic, String>,
    pub reset_count: usize,
    pub min_population: f64,
    pub identity_max_residual: f64,
}

fn infected_fraction(x: &State) -> f64 {
    (x.e + x.i) / x.total()
}

impl RunReport {
    pub fn build(sc: &Scenario, traj: &Traj) -> Self {
        let last = traj.last().expect("a trajectory holds at least its initial record");
        let steady_state = detect_steady_state(traj, sc.steady_state_tol, STEADY_WINDOW_DAYS);
        let composition = detect_composition_steady_state(traj, sc.steady_state_tol, STEADY_WINDOW_DAYS);
        let integral = integral_test(traj, &sc.params).map_err(|e| e.to_string());
        let n = last.state.total();
        RunReport {
            name: sc.name.clone(),
            status: traj.status,
            final_time: last.t,
            final_state: last.state,
            infected_fraction: steady_state.x_ss.as_ref().map(infected_fraction),
            composition_infected_fraction: composition.x_ss.as_ref().map(infected_fraction),
            steady_state,
            composition,
            final_drift_rate: if n > 0.0 { last.dn / n } else { f64::NAN },
            verdicts: all_verdicts(&sc.params, integral.as_ref().ok(), INTEGRAL_REL_TOL),
            integral,
            reset_count: traj.reset_count(),
            min_population: traj
                .records
                .iter()
                .map(|r| r.state.min_component())
                .fold(f64::INFINITY, f64::min),
            identity_max_residual: traj.max_identity_residual(),
        }
    }

    /// One-line rendering of the verdicts, for `--check-stability`.
    pub fn verdict_lines(&self) -> Vec<String> {
        self.verdicts
            .iter()
            .map(|v| {
                let state = match (v.applicable, v.hypothesis_holds) {
                    (_, true) => "holds",
                    (false, false) => "not applicable",
                    (true, false) => "fails",
                };
                format!("{}: {state}", v.test.key())
            })
            .collect()
    }

    pub fn render(&self, sc: &Scenario) -> String {
        let mut s = String::new();
        let w = &mut s;
        let x = self.final_state;
        let _ = writeln!(w, "scenario: {}", self.name);
        let _ = writeln!(
            w,
            "law: {}  g: {}  h: {}  hold: {}  dt: {}  horizon: {}",
            sc.control.law.key(),
            sc.control.g_family.key(),
            sc.control.h_family.key(),
            sc.hold.key(),
            sc.dt,
            sc.horizon
        );
        let _ = writeln!(w, "status: {}", status_text(&self.status));
        let _ = writeln!(
            w,
            "final state at t = {}: S = {}, E = {}, I = {}, R = {}, N = {}",
            self.final_time,
            x.s,
            x.e,
            x.i,
            x.r,
            x.total()
        );
        let _ = writeln!(w);

        let _ = writeln!(
            w,
            "steady state (max |dx/dt|/N < {} over {} days):",
            sc.steady_state_tol, STEADY_WINDOW_DAYS
        );
        match (&self.steady_state.t_ss, &self.steady_state.x_ss) {
            (Some(t), Some(xs)) => {
                let _ = writeln!(
                    w,
                    "  found at t_ss = {t}: E_ss = {}, I_ss = {}, N_ss = {}, infected fraction = {}",
                    xs.e,
                    xs.i,
                    xs.total(),
                    infected_fraction(xs)
                );
            }
            _ => {
                let _ = writeln!(
                    w,
                    "  not found (smallest value reached {:e})",
                    self.steady_state.min_metric
                );
            }
        }
        let _ = writeln!(w, "steady composition (max |d(x/N)/dt| < {}):", sc.steady_state_tol);
        match (&self.composition.t_ss, &self.composition.x_ss) {
            (Some(t), Some(xs)) => {
                let n = xs.total();
                let _ = writeln!(
                    w,
                    "  found at t = {t}: S/N = {}, E/N = {}, I/N = {}, R/N = {}, infected fraction = {}",
                    xs.s / n,
                    xs.e / n,
                    xs.i / n,
                    xs.r / n,
                    infected_fraction(xs)
                );
            }
            _ => {
                let _ = writeln!(
                    w,
                    "  not found (smallest value reached {:e})",
                    self.composition.min_metric
                );
            }
        }
        if !self.steady_state.found && self.composition.found {
            let _ = writeln!(
                w,
                "note: no absolute equilibrium is reached. The composition settles while N drifts at \
                 (dN/dt)/N = {:e} per day, so E and I keep changing in absolute numbers; the infected \
                 fraction above is the steady quantity.",
                self.final_drift_rate
            );
        }
        let _ = writeln!(w);

        let _ = writeln!(w, "stability verdicts:");
        for v in &self.verdicts {
            let _ = writeln!(
                w,
                "  {}: applicable = {}, hypothesis holds = {}",
                v.test.key(),
                v.applicable,
                v.hypothesis_holds
            );
            for c in &v.conditions {
                let _ = writeln!(w, "    {c}");
            }
            for f in &v.flags {
                let _ = writeln!(w, "    flag {} = {}", f.name, f.value);
            }
        }
        let _ = writeln!(w);
        match &self.integral {
            Ok(d) => {
                let _ = writeln!(w, "integral balance over {} days:", d.horizon);
                let _ = writeln!(w, "  N(0) = {}", d.lhs);
                let _ = writeln!(w, "  discounted infectious mass = {}", d.rhs);
                let _ = writeln!(w, "  residual = {}, tail bound = {}", d.residual, d.tail_bound);
                let _ = writeln!(w, "  max pointwise identity residual = {:e}", d.max_identity_residual);
            }
            Err(e) => {
                let _ = writeln!(w, "integral balance: {e}");
            }
        }
        let _ = writeln!(w, "resets: {}", self.reset_count);
        let _ = writeln!(w, "smallest population value: {}", self.min_population);
        let _ = writeln!(
            w,
            "max gain-identity residual (relative): {:e}",
            self.identity_max_residual
        );
        let _ = writeln!(w);

        let _ = writeln!(w, "[machine]");
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_else(|| "none".into());
        let kv = [
            ("scenario", self.name.clone()),
            ("status", status_key(&self.status).into()),
            ("steady_state_found", self.steady_state.found.to_string()),
            ("t_ss", opt(self.steady_state.t_ss)),
            ("e_ss", opt(self.steady_state.x_ss.map(|x| x.e))),
            ("i_ss", opt(self.steady_state.x_ss.map(|x| x.i))),
            ("infected_fraction", opt(self.infected_fraction)),
            ("composition_found", self.composition.found.to_string()),
            ("composition_infected_fraction", opt(self.composition_infected_fraction)),
            ("final_drift_rate", self.final_drift_rate.to_string()),
            ("reset_count", self.reset_count.to_string()),
            ("min_population", self.min_population.to_string()),
            ("identity_max_residual", self.identity_max_residual.to_string()),
        ];
        for (k, v) in kv {
            let _ = writeln!(w, "{k} = {v}");
        }
        for v in &self.verdicts {
            let _ = writeln!(w, "verdict.{} = {}", v.test.key(), v.hypothesis_holds);
        }
        s
    }
}

pub fn status_key(status: &RunStatus<f64>) -> &'static str {
    match status {
        RunStatus::Completed => "completed",
        RunStatus::Extinct { .. } => "extinct",
        RunStatus::Blowup { .. } => "blowup",
    }
}

fn status_text(status: &RunStatus<f64>) -> String {
    match status {
        RunStatus::Completed => "completed".into(),
        RunStatus::Extinct { t } => format!("extinct at t = {t}"),
        RunStatus::Blowup { t } => format!("numeric blowup at t = {t}"),
    }
}

/// Reads the `[machine]` section back as key-value pairs.
pub fn parse_machine_section(report: &str) -> Vec<(String, String)> {
    report
        .lines()
        .skip_while(|l| l.trim() != "[machine]")
        .skip(1)
        .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}
