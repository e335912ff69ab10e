//! Feedback vaccination synthesis.
//!
//! The auxiliary signal
//!
//! ```text
//! V_a = (K_N N + K_I I + K_R R* + K_Rd dR*/dt) / (ν N)
//! ```
//!
//! tracks the immune reference `R* = h N`. With the scheduled gains
//! `K_N = −(K_R + (ν−μ)K_Rd) h − K_Rd dh/dt + ε₀(1 − ε g)` and
//! `K_I = γρ K_Rd h`, every reference term cancels and
//! `ν N V_a = ε₀ (1 − ε g) N`; the modulating function `g` then decides the
//! vaccination effort. The saturated law clips `V_a` to `[0, 1]`; the
//! unsaturated law lets it exceed one while every population is nonnegative.

use crate::error::{Error, Result};
use crate::model::{checked_total, total_population_rate, ModelParams, StateVec};
use crate::scalar::Scalar;
use crate::sim::Trajectory;
use crate::stability::Flag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VaccinationLaw {
    /// No vaccination (`V ≡ 0`); the auxiliary signal is still computed as a diagnostic.
    None,
    /// `V = clamp(V_a, 0, 1)`.
    #[default]
    Saturated,
    /// `V = V_a` while all populations are nonnegative; negative populations are reset to zero.
    Unsaturated,
}

impl VaccinationLaw {
    pub fn key(self) -> &'static str {
        match self {
            VaccinationLaw::None => "none",
            VaccinationLaw::Saturated => "saturated",
            VaccinationLaw::Unsaturated => "unsaturated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(VaccinationLaw::None),
            "saturated" => Some(VaccinationLaw::Saturated),
            "unsaturated" => Some(VaccinationLaw::Unsaturated),
            _ => None,
        }
    }
}

/// Choice of the modulating function `g(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GFamily {
    Zero,
    /// `g ≡ 1/ε`, which switches the auxiliary vaccination off.
    InverseEps,
    /// Cancels the saturation terms when `V ≠ V_a`:
    /// `((ε₀ϑ₀ + (ε₀ − ν)ϑ₁) N − γ(1−ρ) I) / (ε₀ ε N (ϑ₀ + ϑ₁))`.
    SaturationCompensating,
    /// Interior branch `(1/ε)(1 − γ(1−ρ) I / (ε₀ N))`, used when `V = V_a`.
    #[default]
    InteriorCompensating,
    /// `(N − e^{−ϑt}) / (ε N)`; drives the immune population to zero exponentially.
    ExponentialFade,
    /// Zero before the completion time `T`, then
    /// `(1/ε)(1 − (μ+ω)/(ε₀(1 − e^{−(μ+ω)t})))(1 − e^{−(μ+ω)t} R(0))`.
    FiniteTime,
    /// `γ(1−ρ) I / (ε ν N)`.
    BirthMatched,
    /// `(1/ε)(γ(1−ρ) I / (ν N) − 1)`.
    NegativeRegime,
}

impl GFamily {
    pub const ALL: [GFamily; 8] = [
        GFamily::Zero,
        GFamily::InverseEps,
        GFamily::SaturationCompensating,
        GFamily::InteriorCompensating,
        GFamily::ExponentialFade,
        GFamily::FiniteTime,
        GFamily::BirthMatched,
        GFamily::NegativeRegime,
    ];

    pub fn key(self) -> &'static str {
        match self {
            GFamily::Zero => "zero",
            GFamily::InverseEps => "inverse-eps",
            GFamily::SaturationCompensating => "saturation-compensating",
            GFamily::InteriorCompensating => "interior-compensating",
            GFamily::ExponentialFade => "exponential-fade",
            GFamily::FiniteTime => "finite-time",
            GFamily::BirthMatched => "birth-matched",
            GFamily::NegativeRegime => "negative-regime",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|f| f.key() == s)
    }

    /// The two branches of the indicator-switched compensating choice.
    pub fn is_compensating(self) -> bool {
        matches!(self, GFamily::SaturationCompensating | GFamily::InteriorCompensating)
    }
}

/// Choice of the reference profile `h(t)`, `R* = h N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HFamily {
    /// `(e^{−ct} R(0) + N (1 − e^{−ct})) / N`.
    #[default]
    ExponentialApproach,
    /// `(e^{−(μ+ω)t} R(0) + ε₀ N (1 − e^{−(μ+ω)t})/(μ+ω)) / N`.
    NaturalApproach,
    /// `(e^{−(μ+ω)t} R(0) + ε₀ (e^{−(μ+ω)t} − e^{−ϑt})/(ϑ − μ − ω)) / N`.
    ExponentialFade,
    /// `h ≡ h_value`.
    Constant,
}

impl HFamily {
    pub const ALL: [HFamily; 4] = [
        HFamily::ExponentialApproach,
        HFamily::NaturalApproach,
        HFamily::ExponentialFade,
        HFamily::Constant,
    ];

    pub fn key(self) -> &'static str {
        match self {
            HFamily::ExponentialApproach => "exponential-approach",
            HFamily::NaturalApproach => "natural-approach",
            HFamily::ExponentialFade => "exponential-fade",
            HFamily::Constant => "constant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|f| f.key() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig<T> {
    pub k_r: T,
    pub k_rd: T,
    pub eps: T,
    pub eps0: T,
    /// Decay rate of the exponential-fade families (1/day).
    pub vartheta: T,
    /// Approach rate of the exponential-approach reference (1/day).
    pub c: T,
    pub g_family: GFamily,
    pub h_family: HFamily,
    pub h_value: T,
    /// Completion time of the finite-time family (days).
    pub completion_time: T,
    pub law: VaccinationLaw,
}

impl<T: Scalar> ControlConfig<T> {
    /// Unit gains, `ε = 1`, `ε₀ = μ + ω`, `1/c = 5` days, `ϑ = 2(μ + ω)`.
    pub fn defaults_for(params: &ModelParams<T>) -> Self {
        let a = params.immune_decay();
        Self {
            k_r: T::one(),
            k_rd: T::one(),
            eps: T::one(),
            eps0: a,
            vartheta: T::two() * a,
            c: T::lit(0.2),
            g_family: GFamily::default(),
            h_family: HFamily::default(),
            h_value: T::one(),
            completion_time: T::lit(100.0),
            law: VaccinationLaw::default(),
        }
    }

    pub fn validate(&self, params: &ModelParams<T>) -> Result<()> {
        let z = T::zero();
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, v) in [
            ("k_r", self.k_r),
            ("k_rd", self.k_rd),
            ("eps", self.eps),
            ("eps0", self.eps0),
            ("vartheta", self.vartheta),
            ("c", self.c),
            ("h_value", self.h_value),
            ("completion_time", self.completion_time),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if !(self.eps0 > z) {
            return bad(format!("eps0 must be > 0, got {}", self.eps0));
        }
        if self.k_rd == z {
            return bad("k_rd must be nonzero".into());
        }
        if self.eps < z {
            return bad(format!("eps must be >= 0, got {}", self.eps));
        }
        if self.g_family != GFamily::Zero && !(self.eps > z) {
            return bad(format!("g family {} needs eps > 0", self.g_family.key()));
        }
        if self.c < z {
            return bad(format!("c must be >= 0, got {}", self.c));
        }
        let a = params.immune_decay();
        let fade = self.g_family == GFamily::ExponentialFade || self.h_family == HFamily::ExponentialFade;
        if fade && !(self.vartheta > a) {
            return bad(format!("vartheta must exceed mu + omega = {a}, got {}", self.vartheta));
        }
        if self.g_family.is_compensating() {
            let floor = params.nu.max(params.recovery_to_immune());
            if !(self.eps0 > floor) {
                return bad(format!(
                    "compensating g needs eps0 > max(nu, gamma(1-rho)) = {floor}, got {}",
                    self.eps0
                ));
            }
        }
        if self.g_family == GFamily::FiniteTime && !(self.completion_time > z) {
            return bad("completion_time must be > 0".into());
        }
        Ok(())
    }
}

/// Saturation indicators: `lower` is set when `V_a < 0`, `upper` when `V_a > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Indicators {
    pub lower: bool,
    pub upper: bool,
}

impl Indicators {
    pub const NONE: Indicators = Indicators {
        lower: false,
        upper: false,
    };

    pub fn from_auxiliary<T: Scalar>(v_a: T) -> Self {
        Self {
            lower: v_a < T::zero(),
            upper: v_a > T::one(),
        }
    }

    fn count<T: Scalar>(self) -> T {
        let b = |f: bool| if f { T::one() } else { T::zero() };
        b(self.lower) + b(self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceSample<T> {
    pub h: T,
    pub h_dot: T,
    pub r_star: T,
    pub r_star_dot: T,
}

/// Immune reference at time `t`.
///
/// `h_dot` differentiates the profile with `N` frozen at its sampled value;
/// the population's own rate enters through `dR*/dt = h_dot N + h dN/dt`.
pub fn reference<T: Scalar>(
    cfg: &ControlConfig<T>,
    params: &ModelParams<T>,
    t: T,
    x: &StateVec<T>,
    r0: T,
) -> Result<ReferenceSample<T>> {
    let n = checked_total(x)?;
    let a = params.immune_decay();
    let (h, h_dot) = match cfg.h_family {
        HFamily::ExponentialApproach => {
            let e = (-cfg.c * t).exp();
            ((e * r0 + n * (T::one() - e)) / n, cfg.c * e * (n - r0) / n)
        }
        HFamily::NaturalApproach => {
            if a == T::zero() {
                return Err(Error::DegenerateConstant(
                    "natural-approach profile needs mu + omega > 0".into(),
                ));
            }
            let e = (-a * t).exp();
            (
                (e * r0 + cfg.eps0 * n * (T::one() - e) / a) / n,
                (-a * e * r0 + cfg.eps0 * n * e) / n,
            )
        }
        HFamily::ExponentialFade => {
            let gap = cfg.vartheta - a;
            if gap == T::zero() {
                return Err(Error::DegenerateConstant(
                    "exponential-fade profile needs vartheta != mu + omega".into(),
                ));
            }
            let ea = (-a * t).exp();
            let ev = (-cfg.vartheta * t).exp();
            (
                (ea * r0 + cfg.eps0 * (ea - ev) / gap) / n,
                (-a * ea * r0 + cfg.eps0 * (cfg.vartheta * ev - a * ea) / gap) / n,
            )
        }
        HFamily::Constant => (cfg.h_value, T::zero()),
    };
    let n_dot = total_population_rate(params, x);
    Ok(ReferenceSample {
        h,
        h_dot,
        r_star: h * n,
        r_star_dot: h_dot * n + h * n_dot,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gains<T> {
    pub k_n: T,
    pub k_i: T,
}

pub fn gain_schedule<T: Scalar>(cfg: &ControlConfig<T>, params: &ModelParams<T>, h: T, h_dot: T, g: T) -> Gains<T> {
    let k_n =
        -(cfg.k_r + (params.nu - params.mu) * cfg.k_rd) * h - cfg.k_rd * h_dot + cfg.eps0 * (T::one() - cfg.eps * g);
    let k_i = params.gamma * params.rho * cfg.k_rd * h;
    Gains { k_n, k_i }
}

fn eps_n<T: Scalar>(cfg: &ControlConfig<T>, n: T) -> Result<T> {
    let d = cfg.eps * n;
    if !(d.abs() > T::zero()) || !d.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "g family {} needs eps * N != 0",
            cfg.g_family.key()
        )));
    }
    Ok(d)
}

/// Family formula without the indicator precondition.
fn g_formula<T: Scalar>(
    cfg: &ControlConfig<T>,
    params: &ModelParams<T>,
    t: T,
    x: &StateVec<T>,
    r0: T,
    ind: Indicators,
) -> Result<T> {
    let n = checked_total(x)?;
    let p = params;
    let rec = p.recovery_to_immune() * x.i;
    Ok(match cfg.g_family {
        GFamily::Zero => T::zero(),
        GFamily::InverseEps => T::one() / cfg.eps,
        GFamily::SaturationCompensating => {
            let (l, u) = (
                if ind.lower { T::one() } else { T::zero() },
                if ind.upper { T::one() } else { T::zero() },
            );
            let num = (cfg.eps0 * l + (cfg.eps0 - p.nu) * u) * n - rec;
            num / (cfg.eps0 * eps_n(cfg, n)? * ind.count::<T>())
        }
        GFamily::InteriorCompensating => (T::one() - rec / (cfg.eps0 * n)) / cfg.eps,
        GFamily::ExponentialFade => (n - (-cfg.vartheta * t).exp()) / eps_n(cfg, n)?,
        GFamily::FiniteTime => {
            if t < cfg.completion_time {
                T::zero()
            } else {
                let a = p.immune_decay();
                let e = (-a * t).exp();
                (T::one() - a / (cfg.eps0 * (T::one() - e))) * (T::one() - e * r0) / cfg.eps
            }
        }
        GFamily::BirthMatched => rec / (eps_n(cfg, n)? * p.nu),
        GFamily::NegativeRegime => (rec / (p.nu * n) - T::one()) / cfg.eps,
    })
}

/// The selected `g(t)`.
///
/// The two compensating branches are only defined under their indicator
/// pattern: `SaturationCompensating` needs exactly one indicator set,
/// `InteriorCompensating` needs neither.
pub fn g_signal<T: Scalar>(
    cfg: &ControlConfig<T>,
    params: &ModelParams<T>,
    t: T,
    x: &StateVec<T>,
    r0: T,
    ind: Indicators,
) -> Result<T> {
    if ind.lower && ind.upper {
        return Err(Error::InapplicableCase("both saturation indicators set".into()));
    }
    match cfg.g_family {
        GFamily::SaturationCompensating if !(ind.lower || ind.upper) => {
            return Err(Error::InapplicableCase(
                "saturation-compensating g needs an active indicator".into(),
            ))
        }
        GFamily::InteriorCompensating if ind.lower || ind.upper => {
            return Err(Error::InapplicableCase(
                "interior-compensating g needs both indicators clear".into(),
            ))
        }
        _ => {}
    }
    g_formula(cfg, params, t, x, r0, ind)
}

/// One evaluation of the control law.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlSample<T> {
    pub t: T,
    pub v_a: T,
    pub v: T,
    /// `V_a < 0`.
    pub theta0: bool,
    /// `V_a > 1`.
    pub theta1: bool,
    pub g: T,
    pub h: T,
    pub h_dot: T,
    pub r_star: T,
    pub r_star_dot: T,
    pub k_n: T,
    pub k_i: T,
    /// `|ν N V_a − ε₀(1 − εg) N|` relative to the magnitude of the summed terms.
    pub identity_residual: T,
}

struct Auxiliary<T> {
    gains: Gains<T>,
    v_a: T,
    residual: T,
}

fn auxiliary<T: Scalar>(
    cfg: &ControlConfig<T>,
    params: &ModelParams<T>,
    x: &StateVec<T>,
    n: T,
    rf: &ReferenceSample<T>,
    g: T,
) -> Auxiliary<T> {
    let gains = gain_schedule(cfg, params, rf.h, rf.h_dot, g);
    let terms = [
        gains.k_n * n,
        gains.k_i * x.i,
        cfg.k_r * rf.r_star,
        cfg.k_rd * rf.r_star_dot,
    ];
    let numerator = terms.iter().fold(T::zero(), |a, &b| a + b);
    let v_a = numerator / (params.nu * n);
    let target = cfg.eps0 * (T::one() - cfg.eps * g) * n;
    let scale = terms.iter().fold(target.abs(), |a, b| a + b.abs());
    let gap = (params.nu * n * v_a - target).abs();
    let residual = if scale > T::zero() { gap / scale } else { gap };
    Auxiliary { gains, v_a, residual }
}

/// Whether the law will apply something other than `V_a`.
fn saturation_active<T: Scalar>(law: VaccinationLaw, v_a: T, x: &StateVec<T>) -> bool {
    match law {
        VaccinationLaw::Unsaturated => v_a < T::zero() || (v_a > T::one() && x.min_component() < T::zero()),
        _ => v_a < T::zero() || v_a > T::one(),
    }
}

fn evaluate<T: Scalar>(
    cfg: &ControlConfig<T>,
    params: &ModelParams<T>,
    t: T,
    x: &StateVec<T>,
    r0: T,
    law: VaccinationLaw,
) -> Result<ControlSample<T>> {
    let n = checked_total(x)?;
    if !(params.nu > T::zero()) {
        return Err(Error::Precondition(
            "the vaccination law divides by nu N; nu must be > 0".into(),
        ));
    }
    let rf = reference(cfg, params, t, x, r0)?;

    let (g, aux) = if cfg.g_family.is_compensating() {
        // g depends on the indicators, which depend on V_a(g): keep the branch
        // whose assumed indicators agree with the V_a it produces.
        let interior = ControlConfig {
            g_family: GFamily::InteriorCompensating,
            ..*cfg
        };
        let saturated = ControlConfig {
            g_family: GFamily::SaturationCompensating,
            ..*cfg
        };
        let g_in = g_formula(&interior, params, t, x, r0, Indicators::NONE)?;
        let a_in = auxiliary(cfg, params, x, n, &rf, g_in);
        if saturation_active(law, a_in.v_a, x) {
            let ind = Indicators::from_auxiliary(a_in.v_a);
            let g_sat = g_formula(&saturated, params, t, x, r0, ind)?;
            let a_sat = auxiliary(cfg, params, x, n, &rf, g_sat);
            if Indicators::from_auxiliary(a_sat.v_a) == ind {
                (g_sat, a_sat)
            } else {
                (g_in, a_in)
            }
        } else {
            (g_in, a_in)
        }
    } else {
        let g = g_formula(cfg, params, t, x, r0, Indicators::NONE)?;
        (g, auxiliary(cfg, params, x, n, &rf, g))
    };

    let v_a = aux.v_a;
    let ind = Indicators::from_auxiliary(v_a);
    let v = match law {
        VaccinationLaw::None => T::zero(),
        VaccinationLaw::Saturated => v_a.max(T::zero()).min(T::one()),
        VaccinationLaw::Unsaturated => {
            if v_a < T::zero() {
                T::zero()
            } else if v_a > T::one() && x.min_component() < T::zero() {
                T::one()
            } else {
                // includes V_a in [0, 1] with a negative population: the
                // engine resets populations at step boundaries, after which V = V_a applies
                v_a
            }
        }
    };
    Ok(ControlSample {
        t,
        v_a,
        v,
        theta0: ind.lower,
        theta1: ind.upper,
        g,
        h: rf.h,
        h_dot: rf.h_dot,
        r_star: rf.r_star,
        r_star_dot: rf.r_star_dot,
        k_n: aux.gains.k_n,
        k_i: aux.gains.k_i,
        identity_residual: aux.residual,
    })
}

pub fn vaccination_saturated<T: Scalar>(
    cfg: &ControlConfig<T>,
    params: &ModelParams<T>,
    t: T,
    x: &StateVec<T>,
    r0: T,
) -> Result<ControlSample<T>> {
    evaluate(cfg, params, t, x, r0, VaccinationLaw::Saturated)
}

pub fn vaccination_unsaturated<T: Scalar>(
    cfg: &ControlConfig<T>,
    params: &ModelParams<T>,
    t: T,
    x: &StateVec<T>,
    r0: T,
) -> Result<ControlSample<T>> {
    evaluate(cfg, params, t, x, r0, VaccinationLaw::Unsaturated)
}

/// Evaluates the configured law.
///
/// `None` reports the auxiliary diagnostics with `V = 0` when they are
/// defined, and an all-zero sample otherwise.
pub fn evaluate_law<T: Scalar>(
    cfg: &ControlConfig<T>,
    params: &ModelParams<T>,
    t: T,
    x: &StateVec<T>,
    r0: T,
) -> Result<ControlSample<T>> {
    match cfg.law {
        VaccinationLaw::None => {
            if cfg.validate(params).is_err() {
                return Ok(ControlSample {
                    t,
                    ..Default::default()
                });
            }
            Ok(
                evaluate(cfg, params, t, x, r0, VaccinationLaw::None).unwrap_or(ControlSample {
                    t,
                    ..Default::default()
                }),
            )
        }
        law => evaluate(cfg, params, t, x, r0, law),
    }
}

/// Structure of the law for which an asymptotic bound on `R` is sought.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackingCase<T> {
    /// Compensating g; needs the smallest value g takes.
    Compensating { g_min: T },
    /// `g ≡ 1/ε`.
    InverseEps,
    /// `g ≡ 1/ε` with the upper indicator never set.
    InverseEpsNoUpper,
    /// `ν = ε₀`, no saturation, `g ≡ 1/ε`.
    BirthMatchedInterior,
    /// `ν = ε₀`, lower saturation only.
    BirthMatchedLower,
    /// `ν = ε₀`, `g ≡ 0`, lower indicator never set.
    BirthMatchedZeroG,
    /// `ν = ε₀`, `g ≡ 0`, lower indicator always set.
    BirthMatchedZeroGLower,
    /// `ν = ε₀`; needs the largest value g takes.
    BirthMatchedGeneral { g_max: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingBound<T> {
    /// `R̄`, the asymptotic upper bound on `R`.
    pub r_bar: T,
    /// `R̄ / N₂`.
    pub ratio: T,
    /// `ratio ≤ 1`, i.e. the bound does not exceed the population bound.
    pub feasible: bool,
    /// `R(∞) = 0` is guaranteed.
    pub decays_to_zero: bool,
}

pub fn tracking_bound<T: Scalar>(
    case: TrackingCase<T>,
    params: &ModelParams<T>,
    cfg: &ControlConfig<T>,
    n2: T,
) -> TrackingBound<T> {
    let a = params.immune_decay();
    let rec = params.recovery_to_immune();
    let nu = params.nu;
    let mut decays = false;
    let ratio = match case {
        TrackingCase::Compensating { g_min } => cfg.eps0 / a * (T::one() - cfg.eps * g_min),
        TrackingCase::InverseEps | TrackingCase::BirthMatchedZeroG => (nu + rec) / a,
        TrackingCase::InverseEpsNoUpper | TrackingCase::BirthMatchedInterior | TrackingCase::BirthMatchedZeroGLower => {
            rec / a
        }
        TrackingCase::BirthMatchedLower => {
            decays = rec == T::zero();
            rec / a
        }
        TrackingCase::BirthMatchedGeneral { g_max } => ((nu + rec) + cfg.eps * nu * g_max) / a,
    };
    TrackingBound {
        r_bar: ratio * n2,
        ratio,
        feasible: decays || ratio <= T::one(),
        decays_to_zero: decays,
    }
}

/// `R(t)` under the exponential-fade g, where the immune inflow is `ε₀ e^{−ϑt}`.
pub fn immune_fade_closed_form<T: Scalar>(cfg: &ControlConfig<T>, params: &ModelParams<T>, t: T, r0: T) -> Result<T> {
    let a = params.immune_decay();
    let gap = cfg.vartheta - a;
    if !(gap > T::zero()) {
        return Err(Error::Precondition(format!("vartheta must exceed mu + omega = {a}")));
    }
    Ok((-a * t).exp() * (r0 + cfg.eps0 * (T::one() - (-gap * t).exp()) / gap))
}

/// Asymptotic reference level `ε₀ N / (ϑ − μ − ω)`; equals `N` when `ϑ = ε₀ + μ + ω`.
pub fn steady_reference_level<T: Scalar>(cfg: &ControlConfig<T>, params: &ModelParams<T>, n: T) -> Result<T> {
    let gap = cfg.vartheta - params.immune_decay();
    if !(gap > T::zero()) {
        return Err(Error::Precondition("vartheta must exceed mu + omega".into()));
    }
    Ok(cfg.eps0 * n / gap)
}

/// `ε₀` that completes immunisation at the completion time for constant `N`.
pub fn finite_time_eps0<T: Scalar>(params: &ModelParams<T>, n: T, r0: T, completion_time: T) -> T {
    let a = params.immune_decay();
    let e = (-a * completion_time).exp();
    a / (T::one() - e) * (n - e * r0)
}

/// Constraint diagnostics for the exponential-fade configuration over `N ∈ [n1, n2]`.
pub fn fade_constraint_flags<T: Scalar>(cfg: &ControlConfig<T>, params: &ModelParams<T>, n1: T, n2: T) -> Vec<Flag> {
    let nu = params.nu;
    let g_cap = (cfg.eps0 - nu) / (cfg.eps * cfg.eps0);
    // g(0) = (N − 1)/(εN) is the largest value g takes on [0, ∞) for fixed N
    let g_start = (n2 - T::one()) / (cfg.eps * n2);
    vec![
        Flag {
            name: "vartheta_above_immune_decay".into(),
            value: cfg.vartheta > params.immune_decay(),
        },
        Flag {
            name: "population_band_below_double".into(),
            value: T::two() * n1 > n2,
        },
        Flag {
            name: "g_cap_nonpositive".into(),
            value: g_cap <= T::zero(),
        },
        Flag {
            name: "g_below_cap".into(),
            value: g_start <= g_cap,
        },
    ]
}

/// Immune population rebuilt from the sampled control and infection history by
/// quadrature of the variation-of-constants formula of the saturated loop.
pub fn immune_from_trajectory<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ControlConfig<T>,
    traj: &Trajectory<T>,
) -> Vec<T> {
    let a = params.immune_decay();
    let rec = params.recovery_to_immune();
    let (eps, eps0, nu) = (cfg.eps, cfg.eps0, params.nu);
    let Some(first) = traj.records.first() else {
        return Vec::new();
    };
    let t0 = first.t;
    let integrand = |rec_: &crate::sim::Record<T>| {
        let c = &rec_.control;
        let n = rec_.state.total();
        let fg = T::one() - eps * c.g;
        let up = if c.theta1 { T::one() } else { T::zero() };
        let lo = if c.theta0 { T::one() } else { T::zero() };
        let inflow = (eps0 * fg + ((nu - eps0) + eps0 * eps * c.g) * up - eps0 * fg * lo) * n + rec * rec_.state.i;
        (a * (rec_.t - t0)).exp() * inflow
    };
    let mut out = Vec::with_capacity(traj.records.len());
    let mut acc = T::zero();
    let mut prev = integrand(first);
    out.push(first.state.r);
    for w in traj.records.windows(2) {
        let cur = integrand(&w[1]);
        acc = acc + (w[1].t - w[0].t) * T::half() * (prev + cur);
        prev = cur;
        out.push((-a * (w[1].t - t0)).exp() * (first.state.r + acc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ModelParams<f64> {
        ModelParams::new(1.0 / 255.0, 1.0 / 15.0, 1.66, 1.0 / 2.2, 1.0 / 2.2, 0.1, 1.0 / 150.0)
            .with_reference_levels(1000.0, 1000.0)
    }

    fn x0() -> StateVec<f64> {
        StateVec::new(400.0, 150.0, 250.0, 200.0)
    }

    fn cfg() -> ControlConfig<f64> {
        let mut c = ControlConfig::defaults_for(&params());
        c.eps0 = 0.5;
        c
    }

    #[test]
    fn exponential_approach_starts_at_initial_immune() {
        let x = StateVec::new(500.0, 100.0, 200.0, 200.0);
        let r = reference(&cfg(), &params(), 0.0, &x, 200.0).unwrap();
        assert_relative_eq!(r.h, 0.2);
        assert_relative_eq!(r.r_star, 200.0);
        let late = reference(&cfg(), &params(), 400.0, &x, 200.0).unwrap();
        assert!((late.h - 1.0).abs() < 1e-12);
        assert!((late.r_star - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn natural_approach_limits() {
        let p = params();
        let mut c = cfg();
        c.h_family = HFamily::NaturalApproach;
        c.eps0 = p.immune_decay();
        let r = reference(&c, &p, 0.0, &x0(), 200.0).unwrap();
        assert_relative_eq!(r.h, 0.2);
        let late = reference(&c, &p, 2000.0, &x0(), 200.0).unwrap();
        assert!((late.h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn h_dot_matches_finite_difference_with_frozen_population() {
        let p = params();
        for family in [
            HFamily::ExponentialApproach,
            HFamily::NaturalApproach,
            HFamily::ExponentialFade,
        ] {
            let mut c = cfg();
            c.h_family = family;
            c.vartheta = 0.3;
            let t = 7.0;
            let dt = 1e-5;
            let hp = reference(&c, &p, t + dt, &x0(), 200.0).unwrap().h;
            let hm = reference(&c, &p, t - dt, &x0(), 200.0).unwrap().h;
            let r = reference(&c, &p, t, &x0(), 200.0).unwrap();
            assert_relative_eq!(r.h_dot, (hp - hm) / (2.0 * dt), max_relative = 1e-7);
        }
    }

    #[test]
    fn fade_profile_degenerate_rate() {
        let p = params();
        let mut c = cfg();
        c.h_family = HFamily::ExponentialFade;
        c.vartheta = p.immune_decay();
        assert!(matches!(
            reference(&c, &p, 1.0, &x0(), 200.0),
            Err(Error::DegenerateConstant(_))
        ));
    }

    #[test]
    fn gain_formulas() {
        let p = params();
        let mut c = cfg();
        c.eps0 = p.immune_decay();
        let g = gain_schedule(&c, &p, 0.2, 0.0, 0.0);
        let expected = -(1.0 + (p.nu - p.mu)) * 0.2 + p.immune_decay();
        assert_relative_eq!(g.k_n, expected, max_relative = 1e-14);
        assert!((g.k_n - -0.12996).abs() < 1e-5);
        assert_eq!(gain_schedule(&c, &p, 0.0, 0.3, 0.5).k_i, 0.0);
        let mut q = p;
        q.rho = 0.0;
        assert_eq!(gain_schedule(&c, &q, 0.7, 0.0, 0.0).k_i, 0.0);
    }

    #[test]
    fn g_families() {
        let p = params();
        let mut c = cfg();
        c.g_family = GFamily::InteriorCompensating;
        let x = StateVec::new(800.0, 0.0, 0.0, 200.0);
        assert_relative_eq!(g_signal(&c, &p, 0.0, &x, 200.0, Indicators::NONE).unwrap(), 1.0 / c.eps);

        c.g_family = GFamily::ExponentialFade;
        c.vartheta = 0.08;
        let g = g_signal(&c, &p, 0.0, &x, 200.0, Indicators::NONE).unwrap();
        assert_relative_eq!(g, 0.999, max_relative = 1e-14);

        c.g_family = GFamily::SaturationCompensating;
        let ind = Indicators {
            lower: true,
            upper: false,
        };
        let g = g_signal(&c, &p, 0.0, &x0(), 200.0, ind).unwrap();
        let expected = (c.eps0 * 1000.0 - p.recovery_to_immune() * 250.0) / (c.eps0 * c.eps * 1000.0);
        assert_relative_eq!(g, expected, max_relative = 1e-14);
    }

    #[test]
    fn g_indicator_mismatch() {
        let p = params();
        let mut c = cfg();
        c.g_family = GFamily::InteriorCompensating;
        let up = Indicators {
            lower: false,
            upper: true,
        };
        assert!(matches!(
            g_signal(&c, &p, 0.0, &x0(), 200.0, up),
            Err(Error::InapplicableCase(_))
        ));
        c.g_family = GFamily::SaturationCompensating;
        assert!(matches!(
            g_signal(&c, &p, 0.0, &x0(), 200.0, Indicators::NONE),
            Err(Error::InapplicableCase(_))
        ));
        let both = Indicators {
            lower: true,
            upper: true,
        };
        assert!(g_signal(&c, &p, 0.0, &x0(), 200.0, both).is_err());
    }

    #[test]
    fn saturation_clips_and_flags() {
        let p = params();
        let mut c = cfg();
        c.g_family = GFamily::Zero;
        // with g ≡ 0 the auxiliary value is ε₀ / ν
        for (eps0, expect_v, lower, upper) in [(1.3 * p.nu, 1.0, false, true), (0.5 * p.nu, 0.5, false, false)] {
            c.eps0 = eps0;
            let s = vaccination_saturated(&c, &p, 3.0, &x0(), 200.0).unwrap();
            assert_relative_eq!(s.v_a, eps0 / p.nu, max_relative = 1e-10);
            assert_relative_eq!(s.v, expect_v, max_relative = 1e-10);
            assert_eq!((s.theta0, s.theta1), (lower, upper));
        }
        // 1 − εg = 2 − γ(1−ρ)I/(νN) < 0 here
        c.g_family = GFamily::NegativeRegime;
        c.eps0 = p.nu;
        let q = p.recovery_to_immune() * 250.0 / (p.nu * 1000.0);
        let s = vaccination_saturated(&c, &p, 3.0, &x0(), 200.0).unwrap();
        assert_relative_eq!(s.v_a, 2.0 - q, max_relative = 1e-9);
        assert_eq!(s.v, 0.0);
        assert!(s.theta0 && !s.theta1);
    }

    #[test]
    fn unsaturated_branches() {
        let p = params();
        let mut c = cfg();
        c.g_family = GFamily::Zero;
        c.eps0 = 2.5 * p.nu;
        let s = vaccination_unsaturated(&c, &p, 0.0, &x0(), 200.0).unwrap();
        assert_relative_eq!(s.v, 2.5, max_relative = 1e-10);
        let neg = StateVec::new(-1.0, 150.0, 250.0, 200.0);
        let s = vaccination_unsaturated(&c, &p, 0.0, &neg, 200.0).unwrap();
        assert_eq!(s.v, 1.0);
        c.eps0 = 0.5 * p.nu;
        let s = vaccination_unsaturated(&c, &p, 0.0, &neg, 200.0).unwrap();
        assert_relative_eq!(s.v, 0.5, max_relative = 1e-10);
        c.g_family = GFamily::InverseEps;
        let s = vaccination_unsaturated(&c, &p, 0.0, &x0(), 200.0).unwrap();
        assert!(s.v_a.abs() < 1e-12);
        c.g_family = GFamily::NegativeRegime;
        let s = vaccination_unsaturated(&c, &p, 0.0, &x0(), 200.0).unwrap();
        assert!(s.v_a < 0.0);
        assert_eq!(s.v, 0.0);
    }

    #[test]
    fn compensating_switches_branch_under_saturation() {
        let p = params();
        let c = cfg();
        let s = vaccination_saturated(&c, &p, 0.0, &x0(), 200.0).unwrap();
        // interior branch would give γ(1−ρ)I/(νN) ≈ 15.3; the saturated branch adds one
        assert!(s.theta1);
        let rec = p.recovery_to_immune() * 250.0 / (p.nu * 1000.0);
        assert_relative_eq!(s.v_a, 1.0 + rec, max_relative = 1e-9);
        assert_eq!(s.v, 1.0);
        let sat = ControlConfig {
            g_family: GFamily::SaturationCompensating,
            ..c
        };
        let direct = g_signal(
            &sat,
            &p,
            0.0,
            &x0(),
            200.0,
            Indicators {
                lower: false,
                upper: true,
            },
        )
        .unwrap();
        assert_relative_eq!(s.g, direct);

        // unsaturated law keeps the interior branch when populations are nonnegative
        let u = vaccination_unsaturated(&c, &p, 0.0, &x0(), 200.0).unwrap();
        assert_relative_eq!(u.v_a, rec, max_relative = 1e-9);
        assert_relative_eq!(u.v, rec, max_relative = 1e-9);
    }

    #[test]
    fn gain_identity_residual_is_roundoff() {
        let p = params();
        for g_family in GFamily::ALL {
            let mut c = cfg();
            c.g_family = g_family;
            c.vartheta = 0.2;
            c.completion_time = 1.0;
            for t in [0.0, 2.0, 50.0] {
                let s = vaccination_saturated(&c, &p, t, &x0(), 200.0).unwrap();
                assert!(
                    s.identity_residual < 1e-13,
                    "{:?} t={t}: {}",
                    g_family,
                    s.identity_residual
                );
            }
        }
    }

    #[test]
    fn law_requires_births() {
        let mut p = params();
        p.nu = 0.0;
        assert!(matches!(
            vaccination_saturated(&cfg(), &p, 0.0, &x0(), 200.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn tracking_bounds() {
        let p = params();
        let c = cfg();
        let b = tracking_bound(TrackingCase::InverseEpsNoUpper, &p, &c, 1000.0);
        assert!((b.r_bar - 5795.5).abs() < 0.5);
        assert!(!b.feasible);
        assert!((b.ratio - 5.7955).abs() < 1e-3);

        let ii = tracking_bound(TrackingCase::InverseEps, &p, &c, 1000.0);
        assert_relative_eq!(ii.ratio, (p.nu + p.recovery_to_immune()) / p.immune_decay());

        let mut q = p;
        q.rho = 1.0;
        assert!(tracking_bound(TrackingCase::BirthMatchedLower, &q, &c, 1000.0).decays_to_zero);
        for case in [
            TrackingCase::InverseEpsNoUpper,
            TrackingCase::BirthMatchedInterior,
            TrackingCase::BirthMatchedZeroGLower,
        ] {
            assert_eq!(tracking_bound(case, &q, &c, 1000.0).r_bar, 0.0);
        }
    }

    #[test]
    fn fade_closed_form_limits() {
        let p = params();
        let mut c = cfg();
        c.vartheta = 0.1;
        assert_relative_eq!(immune_fade_closed_form(&c, &p, 0.0, 200.0).unwrap(), 200.0);
        assert!(immune_fade_closed_form(&c, &p, 2000.0, 200.0).unwrap() < 1e-40);
        c.vartheta = p.immune_decay();
        assert!(immune_fade_closed_form(&c, &p, 1.0, 200.0).is_err());
    }

    #[test]
    fn steady_reference_matches_population_at_matched_rate() {
        let p = params();
        let mut c = cfg();
        c.eps0 = 0.05;
        c.vartheta = c.eps0 + p.immune_decay();
        assert_relative_eq!(
            steady_reference_level(&c, &p, 1000.0).unwrap(),
            1000.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn config_validation() {
        let p = params();
        assert!(cfg().validate(&p).is_ok());
        let mut c = cfg();
        c.eps0 = p.immune_decay();
        assert!(c.validate(&p).is_err(), "compensating guard");
        let mut c = cfg();
        c.k_rd = 0.0;
        assert!(c.validate(&p).is_err());
        let mut c = cfg();
        c.g_family = GFamily::ExponentialFade;
        c.vartheta = 0.05;
        assert!(c.validate(&p).is_err());
        let mut c = cfg();
        c.eps = 0.0;
        assert!(c.validate(&p).is_err());
        c.g_family = GFamily::Zero;
        c.eps0 = 0.01;
        assert!(c.validate(&p).is_ok());
    }
}
