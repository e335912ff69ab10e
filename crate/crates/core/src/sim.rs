//! Fixed-step RK4 integration of the controlled loop, steady-state detection
//! and step-halving convergence studies.

use crate::control::{evaluate_law, ControlConfig, ControlSample, VaccinationLaw};
use crate::error::{Error, Result};
use crate::model::{derivative, total_population_rate, ModelParams, StateRate, StateVec, EXTINCTION_THRESHOLD};
use crate::positivity::{apply_reset, ResetEvent};
use crate::scalar::Scalar;

/// Population size beyond which a run is declared divergent.
pub const BLOWUP_THRESHOLD: f64 = 1e15;

/// Steady-state detection window (days).
pub const STEADY_WINDOW_DAYS: f64 = 30.0;

/// How the vaccination input is held across an RK4 step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlHold {
    /// Re-evaluate the law at every stage: the loop is integrated as one ODE.
    #[default]
    Stage,
    /// Sample once per step and hold the value (zero-order hold).
    Step,
}

impl ControlHold {
    pub fn key(self) -> &'static str {
        match self {
            ControlHold::Stage => "stage",
            ControlHold::Step => "step",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stage" => Some(ControlHold::Stage),
            "step" => Some(ControlHold::Step),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<T> {
    pub name: String,
    pub params: ModelParams<T>,
    pub x0: StateVec<T>,
    pub control: ControlConfig<T>,
    /// Days.
    pub horizon: T,
    /// Days.
    pub dt: T,
    /// Threshold on `max |dx/dt| / N`, 1/day.
    pub steady_state_tol: T,
    pub hold: ControlHold,
}

impl<T: Scalar> ScenarioConfig<T> {
    pub fn law(&self) -> VaccinationLaw {
        self.control.law
    }

    /// Number of steps; the horizon must be a whole multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        let ratio = self.horizon / self.dt;
        let k = ratio.round();
        if (ratio - k).abs() > T::lit(1e-6) * k.max(T::one()) {
            return Err(Error::InvalidScenario(format!(
                "horizon {} is not a whole multiple of dt {}",
                self.horizon, self.dt
            )));
        }
        k.to_usize()
            .ok_or_else(|| Error::InvalidScenario(format!("cannot take {k} steps")))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.law() != VaccinationLaw::None {
            self.control.validate(&self.params)?;
        }
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !self.x0.is_finite() {
            return bad("initial state must be finite".into());
        }
        if self.x0.min_component() < T::zero() {
            return bad(format!("initial state must be nonnegative, got {:?}", self.x0));
        }
        if !(self.x0.total() > T::zero()) {
            return bad("initial population must be positive".into());
        }
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon > T::zero() && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.steady_state_tol > T::zero()) {
            return bad("steady_state_tol must be positive".into());
        }
        self.steps().map(|_| ())
    }
}

/// One sample of the run, taken at step start.
#[derive(Debug, Clone, PartialEq)]
pub struct Record<T> {
    pub t: T,
    pub state: StateVec<T>,
    pub control: ControlSample<T>,
    pub rate: StateRate<T>,
    pub dn: T,
    /// Resets applied at the step boundary that produced this state.
    pub resets: Vec<ResetEvent<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus<T> {
    Completed,
    Extinct { t: T },
    Blowup { t: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub dt: T,
    pub records: Vec<Record<T>>,
    pub status: RunStatus<T>,
}

impl<T: Scalar> Trajectory<T> {
    /// Errors at the first record whose time is off the `t₀ + k·dt` grid.
    pub fn check_uniform(&self) -> Result<()> {
        let Some(first) = self.records.first() else {
            return Ok(());
        };
        let tol = T::lit(1e-6) * self.dt;
        for (k, r) in self.records.iter().enumerate() {
            let expected = first.t + T::from_count(k) * self.dt;
            if (r.t - expected).abs() > tol {
                return Err(Error::NonUniformTrajectory { index: k });
            }
        }
        Ok(())
    }

    pub fn last(&self) -> Option<&Record<T>> {
        self.records.last()
    }

    pub fn reset_events(&self) -> impl Iterator<Item = &ResetEvent<T>> {
        self.records.iter().flat_map(|r| r.resets.iter())
    }

    pub fn reset_count(&self) -> usize {
        self.records.iter().map(|r| r.resets.len()).sum()
    }

    pub fn max_identity_residual(&self) -> T {
        self.records
            .iter()
            .map(|r| r.control.identity_residual)
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Records at or after `t`.
    pub fn since(&self, t: T) -> &[Record<T>] {
        let k = self.records.partition_point(|r| r.t < t);
        &self.records[k..]
    }
}

fn sample<T: Scalar>(sc: &ScenarioConfig<T>, t: T, x: &StateVec<T>, r0: T) -> Result<(ControlSample<T>, StateRate<T>)> {
    let c = evaluate_law(&sc.control, &sc.params, t, x, r0)?;
    let rate = derivative(&sc.params, x, c.v)?;
    Ok((c, rate))
}

fn rk4_step<T: Scalar>(
    sc: &ScenarioConfig<T>,
    t: T,
    x: &StateVec<T>,
    r0: T,
    k1: StateRate<T>,
    v_hold: T,
) -> Result<StateVec<T>> {
    let h = sc.dt;
    let half = T::half() * h;
    let rate_at = |tt: T, y: &StateVec<T>| -> Result<StateRate<T>> {
        match sc.hold {
            ControlHold::Stage => Ok(sample(sc, tt, y, r0)?.1),
            ControlHold::Step => derivative(&sc.params, y, v_hold),
        }
    };
    let k2 = rate_at(t + half, &x.advanced(k1, half))?;
    let k3 = rate_at(t + half, &x.advanced(k2, half))?;
    let k4 = rate_at(t + h, &x.advanced(k3, h))?;
    let incr = (k1 + k2 * T::two() + k3 * T::two() + k4) * (h / T::lit(6.0));
    Ok(x.advanced(incr, T::one()))
}

/// Integrates the scenario on the grid `t_k = k·dt`.
///
/// Under the unsaturated law negative populations are clamped to zero after
/// each step. A run that leaves the finite range or falls below the
/// extinction threshold stops early with the matching status.
pub fn integrate<T: Scalar>(sc: &ScenarioConfig<T>) -> Result<Trajectory<T>> {
    sc.validate()?;
    let steps = sc.steps()?;
    let r0 = sc.x0.r;
    let blowup = T::lit(BLOWUP_THRESHOLD);
    let extinct = T::lit(EXTINCTION_THRESHOLD);

    let mut records = Vec::with_capacity(steps + 1);
    let mut x = sc.x0;
    let mut resets = Vec::new();
    let mut status = RunStatus::Completed;
    for k in 0..=steps {
        let t = T::from_count(k) * sc.dt;
        let (control, rate) = sample(sc, t, &x, r0)?;
        records.push(Record {
            t,
            state: x,
            control,
            rate,
            dn: total_population_rate(&sc.params, &x),
            resets: std::mem::take(&mut resets),
        });
        if k == steps {
            break;
        }
        let t_next = T::from_count(k + 1) * sc.dt;
        let next = match rk4_step(sc, t, &x, r0, rate, control.v) {
            Ok(y) => y,
            Err(Error::SingularState { .. }) => {
                status = RunStatus::Extinct { t: t_next };
                break;
            }
            Err(e) => return Err(e),
        };
        if !next.is_finite() || next.total().abs() > blowup {
            status = RunStatus::Blowup { t: t_next };
            break;
        }
        x = next;
        if sc.law() == VaccinationLaw::Unsaturated {
            let (clamped, ev) = apply_reset(&x, t_next);
            x = clamped;
            resets = ev;
        }
        if x.total() < extinct {
            status = RunStatus::Extinct { t: t_next };
            break;
        }
    }
    Ok(Trajectory {
        dt: sc.dt,
        records,
        status,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState<T> {
    pub found: bool,
    /// Start of the first window over which the criterion held throughout.
    pub t_ss: Option<T>,
    /// Window-averaged state.
    pub x_ss: Option<StateVec<T>>,
    /// Smallest criterion value seen anywhere.
    pub min_metric: T,
}

fn detect_by<T: Scalar>(traj: &Trajectory<T>, tol: T, window: T, metric: impl Fn(&Record<T>) -> T) -> SteadyState<T> {
    let recs = &traj.records;
    let mut min_metric = T::infinity();
    let mut start: Option<usize> = None;
    for (k, r) in recs.iter().enumerate() {
        let m = metric(r);
        min_metric = min_metric.min(m);
        if m < tol {
            let s = *start.get_or_insert(k);
            if r.t - recs[s].t >= window {
                let span = &recs[s..=k];
                let sum = span.iter().fold([T::zero(); 4], |mut acc, r| {
                    for (a, v) in acc.iter_mut().zip(r.state.to_array()) {
                        *a = *a + v;
                    }
                    acc
                });
                let count = T::from_count(span.len());
                return SteadyState {
                    found: true,
                    t_ss: Some(recs[s].t),
                    x_ss: Some(StateVec::from_array(sum.map(|v| v / count))),
                    min_metric: recs[k..].iter().map(&metric).fold(min_metric, |a, b| a.min(b)),
                };
            }
        } else {
            start = None;
        }
    }
    SteadyState {
        found: false,
        t_ss: None,
        x_ss: None,
        min_metric,
    }
}

/// Absolute steady state: `max |dx/dt| / N < tol` sustained over `window` days.
pub fn detect_steady_state<T: Scalar>(traj: &Trajectory<T>, tol: T, window: T) -> SteadyState<T> {
    detect_by(traj, tol, window, |r| {
        let n = r.state.total();
        if n > T::zero() {
            r.rate.max_abs() / n
        } else {
            T::infinity()
        }
    })
}

/// Steady composition: `max |d(x/N)/dt| < tol` sustained over `window` days.
///
/// While the population drifts exponentially the absolute rates never vanish,
/// yet the fractions `x/N` can settle.
pub fn detect_composition_steady_state<T: Scalar>(traj: &Trajectory<T>, tol: T, window: T) -> SteadyState<T> {
    detect_by(traj, tol, window, |r| {
        let n = r.state.total();
        if !(n > T::zero()) {
            return T::infinity();
        }
        let rates = r.rate.to_array();
        r.state
            .to_array()
            .iter()
            .zip(rates)
            .map(|(&x, dx)| (dx / n - x * r.dn / (n * n)).abs())
            .fold(T::zero(), |a, b| a.max(b))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy<T> {
    pub dts: Vec<T>,
    pub finals: Vec<StateVec<T>>,
    /// `max |x_dt(T) − x_finest(T)| / N(0)` per step size; zero for the finest.
    pub errors: Vec<T>,
    /// `log2` of successive error ratios, for consecutive halvings.
    pub observed_orders: Vec<T>,
}

/// Runs the scenario at each step size and compares final states to the finest.
pub fn convergence_study<T: Scalar>(scenario: &ScenarioConfig<T>, dts: &[T]) -> Result<ConvergenceStudy<T>> {
    if dts.len() < 2 {
        return Err(Error::InvalidScenario(
            "a convergence study needs at least two step sizes".into(),
        ));
    }
    let mut sorted: Vec<T> = dts.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut finals = Vec::with_capacity(sorted.len());
    for &dt in &sorted {
        let mut sc = scenario.clone();
        sc.dt = dt;
        let traj = integrate(&sc)?;
        if traj.status != RunStatus::Completed {
            return Err(Error::Precondition(format!(
                "run at dt={dt} ended early: {:?}",
                traj.status
            )));
        }
        finals.push(traj.last().map(|r| r.state).unwrap_or(sc.x0));
    }
    let n0 = scenario.x0.total();
    let finest = *finals.last().unwrap_or(&scenario.x0);
    let errors: Vec<T> = finals
        .iter()
        .map(|f| {
            f.to_array()
                .iter()
                .zip(finest.to_array())
                .map(|(&a, b)| (a - b).abs() / n0)
                .fold(T::zero(), |m, v| m.max(v))
        })
        .collect();
    // the finest error is zero by construction; orders use the remaining pairs
    let observed_orders = errors[..errors.len() - 1]
        .windows(2)
        .zip(sorted.windows(2))
        .map(|(e, d)| (e[0] / e[1]).ln() / (d[0] / d[1]).ln())
        .collect();
    Ok(ConvergenceStudy {
        dts: sorted,
        finals,
        errors,
        observed_orders,
    })
}
