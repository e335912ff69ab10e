//! Executable stability hypotheses for the uncontrolled and controlled model.
//!
//! Each checker is total: it returns a verdict with a per-condition
//! breakdown for every parameter set, physical or not.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::sim::Trajectory;

/// Which stability statement a verdict evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityTest {
    /// `0 ≤ ν ≤ μ`: positive, stable, `N(t)` nonincreasing to a finite limit.
    BoundedPopulation,
    /// `ν > μ`: necessary condition `ρ > 0 ∧ γ ≥ (ν − μ)/ρ`.
    GrowthNecessary,
    /// `ν > μ`: `N(0)` must balance `ργ ∫ e^{(μ−ν)τ} I(τ) dτ` over the infinite horizon.
    IntegralBalance,
    /// Uniform stability with low birth rate, `0 ≤ ν ≤ μ`.
    DecayLowBirth,
    /// Uniform stability with mortality dominating, `μ > 4β + ν ∧ ν > β ≥ 0`.
    DecayMortalityDominated,
}

impl StabilityTest {
    pub const ALL: [StabilityTest; 5] = [
        StabilityTest::BoundedPopulation,
        StabilityTest::GrowthNecessary,
        StabilityTest::IntegralBalance,
        StabilityTest::DecayLowBirth,
        StabilityTest::DecayMortalityDominated,
    ];

    pub fn key(self) -> &'static str {
        match self {
            StabilityTest::BoundedPopulation => "bounded_population",
            StabilityTest::GrowthNecessary => "growth_necessary",
            StabilityTest::IntegralBalance => "integral_balance",
            StabilityTest::DecayLowBirth => "decay_low_birth",
            StabilityTest::DecayMortalityDominated => "decay_mortality_dominated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Gt,
    Le,
    Lt,
}

impl Relation {
    fn holds<T: Scalar>(self, lhs: T, rhs: T) -> bool {
        match self {
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Lt => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition<T> {
    pub name: String,
    pub lhs: T,
    pub relation: Relation,
    pub rhs: T,
    pub satisfied: bool,
}

impl<T: Scalar> Condition<T> {
    pub fn new(name: impl Into<String>, lhs: T, relation: Relation, rhs: T) -> Self {
        Self {
            name: name.into(),
            lhs,
            relation,
            rhs,
            satisfied: relation.holds(lhs, rhs),
        }
    }
}

impl<T: Scalar> fmt::Display for Condition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {} {} {}",
            if self.satisfied { "ok" } else { "FAIL" },
            self.name,
            self.lhs,
            self.relation.symbol(),
            self.rhs
        )
    }
}

/// Informational flag attached to a verdict; not part of the hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flag {
    pub name: String,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict<T> {
    pub test: StabilityTest,
    /// False when a standing assumption of the statement fails.
    pub applicable: bool,
    pub hypothesis_holds: bool,
    pub conditions: Vec<Condition<T>>,
    pub flags: Vec<Flag>,
}

impl<T: Scalar> StabilityVerdict<T> {
    fn from_parts(
        test: StabilityTest,
        standing: Vec<Condition<T>>,
        specific: Vec<Condition<T>>,
        flags: Vec<Flag>,
    ) -> Self {
        let applicable = standing.iter().all(|c| c.satisfied);
        let mut conditions = standing;
        conditions.extend(specific);
        let hypothesis_holds = conditions.iter().all(|c| c.satisfied);
        Self {
            test,
            applicable,
            hypothesis_holds,
            conditions,
            flags,
        }
    }

    pub fn failing(&self) -> impl Iterator<Item = &Condition<T>> {
        self.conditions.iter().filter(|c| !c.satisfied)
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        self.flags.iter().find(|f| f.name == name).map(|f| f.value)
    }
}

fn nonnegative_rates<T: Scalar>(p: &ModelParams<T>) -> Vec<Condition<T>> {
    let z = T::zero();
    vec![
        Condition::new(
            "min(beta, sigma, omega, gamma)",
            p.beta.min(p.sigma).min(p.omega).min(p.gamma),
            Relation::Ge,
            z,
        ),
        Condition::new("rho", p.rho, Relation::Ge, z),
        Condition::new("rho", p.rho, Relation::Le, T::one()),
    ]
}

/// `0 ≤ ν ≤ μ` with nonnegative rates.
pub fn check_bounded_population<T: Scalar>(params: &ModelParams<T>) -> StabilityVerdict<T> {
    let p = params;
    let z = T::zero();
    let mut c = vec![
        Condition::new("nu", p.nu, Relation::Ge, z),
        Condition::new("nu <= mu", p.nu, Relation::Le, p.mu),
    ];
    c.extend(nonnegative_rates(p));
    let constant = p.mu == p.nu && (p.rho == z || p.gamma == z);
    StabilityVerdict::from_parts(
        StabilityTest::BoundedPopulation,
        Vec::new(),
        c,
        vec![Flag {
            name: "constant_population".into(),
            value: constant,
        }],
    )
}

/// Necessary condition for bounded `N(t)` when births outpace natural deaths.
pub fn check_growth_necessary<T: Scalar>(params: &ModelParams<T>) -> StabilityVerdict<T> {
    let p = params;
    let z = T::zero();
    let mut standing = vec![Condition::new("nu > mu", p.nu, Relation::Gt, p.mu)];
    standing.extend(nonnegative_rates(p));
    let threshold = if p.rho > z {
        (p.nu - p.mu) / p.rho
    } else {
        T::infinity()
    };
    let specific = vec![
        Condition::new("rho > 0", p.rho, Relation::Gt, z),
        Condition::new("gamma >= (nu - mu)/rho", p.gamma, Relation::Ge, threshold),
    ];
    StabilityVerdict::from_parts(StabilityTest::GrowthNecessary, standing, specific, Vec::new())
}

/// Which alternative of the uniform-stability statement to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayCase {
    LowBirth,
    MortalityDominated,
}

/// Uniform stability conditions, evaluated as literally stated.
///
/// The statement also demands `max(σ, γ) < −μ`, which no nonnegative rate set
/// satisfies; it is reported as the flag `max_sigma_gamma_below_neg_mu` and
/// kept out of the hypothesis.
pub fn check_decay<T: Scalar>(params: &ModelParams<T>, case: DecayCase) -> StabilityVerdict<T> {
    let p = params;
    let z = T::zero();
    let mut standing = nonnegative_rates(p);
    standing.push(Condition::new("mu", p.mu, Relation::Gt, z));
    let (test, specific) = match case {
        DecayCase::LowBirth => (
            StabilityTest::DecayLowBirth,
            vec![
                Condition::new("nu", p.nu, Relation::Ge, z),
                Condition::new("nu <= mu", p.nu, Relation::Le, p.mu),
            ],
        ),
        DecayCase::MortalityDominated => (
            StabilityTest::DecayMortalityDominated,
            vec![
                Condition::new("mu > 4 beta + nu", p.mu, Relation::Gt, T::lit(4.0) * p.beta + p.nu),
                Condition::new("nu > beta", p.nu, Relation::Gt, p.beta),
                Condition::new("beta", p.beta, Relation::Ge, z),
            ],
        ),
    };
    let literal_clause = p.sigma.max(p.gamma) < -p.mu;
    StabilityVerdict::from_parts(
        test,
        standing,
        specific,
        vec![Flag {
            name: "max_sigma_gamma_below_neg_mu".into(),
            value: literal_clause,
        }],
    )
}

/// Finite-horizon evaluation of the integral balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralDiagnostic<T> {
    pub horizon: T,
    /// `N(0)`.
    pub lhs: T,
    /// `ργ ∫₀ᵀ e^{(μ−ν)τ} I(τ) dτ` by trapezoidal quadrature on the sample grid.
    pub rhs: T,
    pub residual: T,
    /// Upper bound on the integral's remaining mass past the horizon, assuming `I ≤ max sampled I`.
    pub tail_bound: T,
    /// Largest `|e^{(μ−ν)t}N(t) − (N(0) − ργ∫₀ᵗ …)| / N(0)` over the samples.
    pub max_identity_residual: T,
}

/// Accumulates the discounted infectious mass along a uniform trajectory.
pub fn integral_test<T: Scalar>(traj: &Trajectory<T>, params: &ModelParams<T>) -> Result<IntegralDiagnostic<T>> {
    let p = params;
    if !(p.nu > p.mu) {
        return Err(Error::NotApplicable(format!(
            "integral balance needs nu > mu (nu={}, mu={})",
            p.nu, p.mu
        )));
    }
    let recs = &traj.records;
    let first = recs
        .first()
        .ok_or_else(|| Error::Precondition("empty trajectory".into()))?;
    traj.check_uniform()?;

    let lambda = p.mu - p.nu;
    let t0 = first.t;
    let n0 = first.state.total();
    let k = p.rho * p.gamma;
    let discounted = |t: T, i: T| (lambda * (t - t0)).exp() * i;

    let mut integral = T::zero();
    let mut prev = discounted(t0, first.state.i);
    let mut worst = T::zero();
    let mut i_max = first.state.i;
    for w in recs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let cur = discounted(b.t, b.state.i);
        integral = integral + (b.t - a.t) * T::half() * (prev + cur);
        prev = cur;
        i_max = i_max.max(b.state.i);
        let lhs = (lambda * (b.t - t0)).exp() * b.state.total();
        let gap = (lhs - (n0 - k * integral)).abs() / n0;
        worst = worst.max(gap);
    }
    let horizon = recs.last().map(|r| r.t).unwrap_or(t0) - t0;
    let rhs = k * integral;
    let tail_bound = k * i_max * (lambda * horizon).exp() / (p.nu - p.mu);
    Ok(IntegralDiagnostic {
        horizon,
        lhs: n0,
        rhs,
        residual: n0 - rhs,
        tail_bound,
        max_identity_residual: worst,
    })
}

/// Consistency of a finite-horizon diagnostic with the infinite-horizon balance.
///
/// Consistent when `0 ≤ residual ≤ tail_bound` up to `rel_tol · N(0)`;
/// this never proves stability.
pub fn integral_verdict<T: Scalar>(
    params: &ModelParams<T>,
    diag: Option<&IntegralDiagnostic<T>>,
    rel_tol: T,
) -> StabilityVerdict<T> {
    let mut standing = vec![Condition::new("nu > mu", params.nu, Relation::Gt, params.mu)];
    standing.extend(nonnegative_rates(params));
    let specific = match diag {
        Some(d) => {
            let tol = rel_tol * d.lhs;
            vec![
                Condition::new("N(0) - discounted mass", d.residual, Relation::Ge, -tol),
                Condition::new(
                    "N(0) - discounted mass <= tail bound",
                    d.residual,
                    Relation::Le,
                    d.tail_bound + tol,
                ),
                Condition::new(
                    "pointwise identity residual",
                    d.max_identity_residual,
                    Relation::Le,
                    rel_tol,
                ),
            ]
        }
        None => vec![Condition::new(
            "trajectory diagnostic available",
            T::zero(),
            Relation::Gt,
            T::zero(),
        )],
    };
    StabilityVerdict::from_parts(StabilityTest::IntegralBalance, standing, specific, Vec::new())
}

/// All five verdicts, in [`StabilityTest::ALL`] order.
pub fn all_verdicts<T: Scalar>(
    params: &ModelParams<T>,
    diag: Option<&IntegralDiagnostic<T>>,
    rel_tol: T,
) -> Vec<StabilityVerdict<T>> {
    vec![
        check_bounded_population(params),
        check_growth_necessary(params),
        integral_verdict(params, diag, rel_tol),
        check_decay(params, DecayCase::LowBirth),
        check_decay(params, DecayCase::MortalityDominated),
    ]
}
