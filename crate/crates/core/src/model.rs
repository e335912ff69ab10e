//! SEIR state, parameters and the true-mass-action vector field.
//!
//! The model tracks susceptible `S`, infected/latent `E`, infectious `I` and
//! removed-by-immunity `R` populations. Incidence is `β S I / N`, so the field
//! is homogeneous of degree one in the state. Births enter `S` at rate `ν N`
//! and the vaccination function `V` diverts the fraction `V` of them into `R`.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Below this total population the state is treated as extinct.
pub const EXTINCTION_THRESHOLD: f64 = 1e-12;

/// Epidemiological rates (per day) and the reference constants `I⁰`, `N⁰`
/// used by the constant/perturbation split of the dynamics matrix.
///
/// Fields are public so that hypothetical parameter sets (including
/// non-physical ones) can be fed to the analysis predicates; simulation
/// calls [`ModelParams::validate`] first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    /// Deaths unrelated to the infection.
    pub mu: T,
    /// Immunity loss.
    pub omega: T,
    /// Transmission constant.
    pub beta: T,
    /// Inverse latent period.
    pub sigma: T,
    /// Inverse infective period.
    pub gamma: T,
    /// Per-capita probability of dying from the infection.
    pub rho: T,
    /// Newborn rate (all newborns are susceptible unless vaccinated).
    pub nu: T,
    pub i0_ref: T,
    pub n0_ref: T,
}

impl<T: Scalar> ModelParams<T> {
    /// Rates in the order (μ, ω, β, σ, γ, ρ, ν) with `I⁰ = N⁰ = 1`.
    pub fn new(mu: T, omega: T, beta: T, sigma: T, gamma: T, rho: T, nu: T) -> Self {
        Self {
            mu,
            omega,
            beta,
            sigma,
            gamma,
            rho,
            nu,
            i0_ref: T::one(),
            n0_ref: T::one(),
        }
    }

    pub fn with_reference_levels(mut self, i0_ref: T, n0_ref: T) -> Self {
        self.i0_ref = i0_ref;
        self.n0_ref = n0_ref;
        self
    }

    /// Fraction of the recovering flow that becomes immune, `γ(1−ρ)`.
    #[inline]
    pub fn recovery_to_immune(&self) -> T {
        self.gamma * (T::one() - self.rho)
    }

    /// `μ + ω`, the decay rate of the immune compartment.
    #[inline]
    pub fn immune_decay(&self) -> T {
        self.mu + self.omega
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("mu", self.mu),
            ("omega", self.omega),
            ("beta", self.beta),
            ("sigma", self.sigma),
            ("gamma", self.gamma),
            ("nu", self.nu),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidParams(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.rho >= T::zero() && self.rho <= T::one()) {
            return Err(Error::InvalidParams(format!(
                "rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        if !(self.i0_ref > T::zero() && self.n0_ref >= self.i0_ref) {
            return Err(Error::InvalidParams(format!(
                "reference levels need n0_ref >= i0_ref > 0, got i0_ref={} n0_ref={}",
                self.i0_ref, self.n0_ref
            )));
        }
        Ok(())
    }
}

/// Compartment labels in state order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compartment {
    S,
    E,
    I,
    R,
}

impl Compartment {
    pub const ALL: [Compartment; 4] = [Compartment::S, Compartment::E, Compartment::I, Compartment::R];

    pub fn index(self) -> usize {
        match self {
            Compartment::S => 0,
            Compartment::E => 1,
            Compartment::I => 2,
            Compartment::R => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Compartment::S => "S",
            Compartment::E => "E",
            Compartment::I => "I",
            Compartment::R => "R",
        }
    }
}

/// Population counts `(S, E, I, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVec<T> {
    pub s: T,
    pub e: T,
    pub i: T,
    pub r: T,
}

impl<T: Scalar> StateVec<T> {
    pub fn new(s: T, e: T, i: T, r: T) -> Self {
        Self { s, e, i, r }
    }

    pub fn from_array(a: [T; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [T; 4] {
        [self.s, self.e, self.i, self.r]
    }

    pub fn get(&self, c: Compartment) -> T {
        self.to_array()[c.index()]
    }

    pub fn total(&self) -> T {
        self.s + self.e + self.i + self.r
    }

    pub fn min_component(&self) -> T {
        self.s.min(self.e).min(self.i).min(self.r)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn scaled(self, k: T) -> Self {
        Self::new(self.s * k, self.e * k, self.i * k, self.r * k)
    }

    /// `self + h · rate`, one explicit step along a rate.
    pub fn advanced(self, rate: StateRate<T>, h: T) -> Self {
        Self::new(
            self.s + h * rate.ds,
            self.e + h * rate.de,
            self.i + h * rate.di,
            self.r + h * rate.dr,
        )
    }

    /// Componentwise fractions of the total population.
    pub fn composition(&self) -> Result<Self> {
        let n = checked_total(self)?;
        Ok(self.scaled(T::one() / n))
    }
}

/// Time derivative of a [`StateVec`] (individuals per day).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateRate<T> {
    pub ds: T,
    pub de: T,
    pub di: T,
    pub dr: T,
}

impl<T: Scalar> StateRate<T> {
    pub fn new(ds: T, de: T, di: T, dr: T) -> Self {
        Self { ds, de, di, dr }
    }

    pub fn from_array(a: [T; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [T; 4] {
        [self.ds, self.de, self.di, self.dr]
    }

    pub fn sum(&self) -> T {
        self.ds + self.de + self.di + self.dr
    }

    pub fn max_abs(&self) -> T {
        self.to_array().iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

impl<T: Scalar> Add for StateRate<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.ds + o.ds, self.de + o.de, self.di + o.di, self.dr + o.dr)
    }
}

impl<T: Scalar> Sub for StateRate<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.ds - o.ds, self.de - o.de, self.di - o.di, self.dr - o.dr)
    }
}

impl<T: Scalar> Mul<T> for StateRate<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Self::new(self.ds * k, self.de * k, self.di * k, self.dr * k)
    }
}

/// Total population after the extinction guard.
pub(crate) fn checked_total<T: Scalar>(x: &StateVec<T>) -> Result<T> {
    let n = x.total();
    if !(n > T::lit(EXTINCTION_THRESHOLD)) {
        return Err(Error::SingularState {
            total: n.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(n)
}

/// Right-hand side of the controlled SEIR system for vaccination value `v`.
///
/// `v` is not clamped: the unsaturated law may push it above one.
pub fn derivative<T: Scalar>(params: &ModelParams<T>, x: &StateVec<T>, v: T) -> Result<StateRate<T>> {
    let n = checked_total(x)?;
    let p = params;
    let incidence = p.beta * x.s * x.i / n;
    let births = p.nu * n;
    Ok(StateRate::new(
        -p.mu * x.s + p.omega * x.r - incidence + births * (T::one() - v),
        incidence - (p.mu + p.sigma) * x.e,
        -(p.mu + p.gamma) * x.i + p.sigma * x.e,
        -(p.mu + p.omega) * x.r + p.recovery_to_immune() * x.i + births * v,
    ))
}

/// `dN/dt = (ν − μ) N − ρ γ I`; independent of the vaccination value.
pub fn total_population_rate<T: Scalar>(params: &ModelParams<T>, x: &StateVec<T>) -> T {
    (params.nu - params.mu) * x.total() - params.rho * params.gamma * x.i
}

/// The eight equivalent matrix parameterisations of the drift.
///
/// `A1`–`A4` differ in where the bilinear incidence is attributed (to the
/// `S` column or the `I` column); the `*0` variants additionally absorb the
/// birth inflow `ν e₁ cᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixVariant {
    A1,
    A2,
    A3,
    A4,
    A1Aug,
    A2Aug,
    A3Aug,
    A4Aug,
}

impl MatrixVariant {
    pub const ALL: [MatrixVariant; 8] = [
        MatrixVariant::A1,
        MatrixVariant::A2,
        MatrixVariant::A3,
        MatrixVariant::A4,
        MatrixVariant::A1Aug,
        MatrixVariant::A2Aug,
        MatrixVariant::A3Aug,
        MatrixVariant::A4Aug,
    ];

    /// Whether the birth inflow is folded into the first row.
    pub fn is_augmented(self) -> bool {
        matches!(
            self,
            MatrixVariant::A1Aug | MatrixVariant::A2Aug | MatrixVariant::A3Aug | MatrixVariant::A4Aug
        )
    }

    pub fn base(self) -> MatrixVariant {
        match self {
            MatrixVariant::A1Aug => MatrixVariant::A1,
            MatrixVariant::A2Aug => MatrixVariant::A2,
            MatrixVariant::A3Aug => MatrixVariant::A3,
            MatrixVariant::A4Aug => MatrixVariant::A4,
            v => v,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MatrixVariant::A1 => "A1",
            MatrixVariant::A2 => "A2",
            MatrixVariant::A3 => "A3",
            MatrixVariant::A4 => "A4",
            MatrixVariant::A1Aug => "A1_0",
            MatrixVariant::A2Aug => "A2_0",
            MatrixVariant::A3Aug => "A3_0",
            MatrixVariant::A4Aug => "A4_0",
        }
    }
}

/// A 4×4 dynamics matrix with rows and columns in `(S, E, I, R)` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsMatrix<T> {
    pub variant: MatrixVariant,
    pub entries: [[T; 4]; 4],
}

impl<T: Scalar> DynamicsMatrix<T> {
    pub fn apply(&self, x: &StateVec<T>) -> [T; 4] {
        let v = x.to_array();
        let mut out = [T::zero(); 4];
        for (row, o) in self.entries.iter().zip(out.iter_mut()) {
            *o = row.iter().zip(v.iter()).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
        }
        out
    }

    /// Off-diagonal entries as `(row, col, value)`, row-major.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..4).flat_map(move |r| (0..4).filter(move |&c| c != r).map(move |c| (r, c, self.entries[r][c])))
    }
}

pub fn build_matrix<T: Scalar>(
    params: &ModelParams<T>,
    x: &StateVec<T>,
    variant: MatrixVariant,
) -> Result<DynamicsMatrix<T>> {
    let n = checked_total(x)?;
    let p = params;
    let z = T::zero();
    let bi = p.beta * x.i / n;
    let bs = p.beta * x.s / n;

    let mut m = [
        [-p.mu, z, z, p.omega],
        [z, -(p.mu + p.sigma), z, z],
        [z, p.sigma, -(p.mu + p.gamma), z],
        [z, z, p.recovery_to_immune(), -(p.mu + p.omega)],
    ];
    match variant.base() {
        // incidence attributed to S in both rows
        MatrixVariant::A1 => {
            m[0][0] = m[0][0] - bi;
            m[1][0] = bi;
        }
        // incidence attributed to I in both rows
        MatrixVariant::A2 => {
            m[0][2] = -bs;
            m[1][2] = bs;
        }
        MatrixVariant::A3 => {
            m[0][2] = -bs;
            m[1][0] = bi;
        }
        MatrixVariant::A4 => {
            m[0][0] = m[0][0] - bi;
            m[1][2] = bs;
        }
        _ => unreachable!("base() returns a non-augmented variant"),
    }
    if variant.is_augmented() {
        for entry in m[0].iter_mut() {
            *entry = *entry + p.nu;
        }
    }
    Ok(DynamicsMatrix { variant, entries: m })
}

/// Forcing written as `ν N u` with `u = (1 − V, 0, 0, V)`.
pub fn forcing_input_form<T: Scalar>(params: &ModelParams<T>, n: T, v: T) -> [T; 4] {
    let z = T::zero();
    let b = params.nu * n;
    [b * (T::one() - v), z, z, b * v]
}

/// Forcing written as `b_a N V + ζ N` with `b_a = (−ν, 0, 0, ν)` and `ζ = ν e₁`.
pub fn forcing_split_form<T: Scalar>(params: &ModelParams<T>, n: T, v: T) -> [T; 4] {
    let z = T::zero();
    let ba = [-params.nu, z, z, params.nu];
    let zeta = [params.nu, z, z, z];
    let mut out = [z; 4];
    for k in 0..4 {
        out[k] = ba[k] * n * v + zeta[k] * n;
    }
    out
}

/// Forcing left over once the birth inflow is absorbed into the matrix: `b_a N V`.
pub fn forcing_augmented_form<T: Scalar>(params: &ModelParams<T>, n: T, v: T) -> [T; 4] {
    let z = T::zero();
    [-params.nu * n * v, z, z, params.nu * n * v]
}

/// Rebuilds the drift from a matrix variant and its matching forcing.
pub fn reconstruct_derivative<T: Scalar>(
    params: &ModelParams<T>,
    x: &StateVec<T>,
    v: T,
    variant: MatrixVariant,
) -> Result<StateRate<T>> {
    let m = build_matrix(params, x, variant)?;
    let n = x.total();
    let ax = m.apply(x);
    let f = if variant.is_augmented() {
        forcing_augmented_form(params, n, v)
    } else {
        forcing_input_form(params, n, v)
    };
    Ok(StateRate::new(ax[0] + f[0], ax[1] + f[1], ax[2] + f[2], ax[3] + f[3]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_params() -> ModelParams<f64> {
        ModelParams::new(1.0 / 255.0, 1.0 / 15.0, 1.66, 1.0 / 2.2, 1.0 / 2.2, 0.1, 1.0 / 150.0)
    }

    fn x0() -> StateVec<f64> {
        StateVec::new(400.0, 150.0, 250.0, 200.0)
    }

    #[test]
    fn derivative_matches_term_by_term_evaluation() {
        let p = reference_params();
        let (s, e, i, r, n) = (400.0, 150.0, 250.0, 200.0, 1000.0);
        // hand expansion of each equation
        let inc = 1.66 * s * i / n;
        let ds = -(1.0 / 255.0) * s + (1.0 / 15.0) * r - inc + (1.0 / 150.0) * n;
        let de = inc - (1.0 / 255.0 + 1.0 / 2.2) * e;
        let di = -(1.0 / 255.0 + 1.0 / 2.2) * i + (1.0 / 2.2) * e;
        let dr = -(1.0 / 255.0 + 1.0 / 15.0) * r + (1.0 / 2.2) * 0.9 * i;

        let d = derivative(&p, &x0(), 0.0).unwrap();
        assert_relative_eq!(d.ds, ds, max_relative = 1e-14);
        assert_relative_eq!(d.de, de, max_relative = 1e-14);
        assert_relative_eq!(d.di, di, max_relative = 1e-14);
        assert_relative_eq!(d.dr, dr, max_relative = 1e-14);

        assert!((d.ds - -147.57).abs() < 0.01);
        assert!((d.de - 97.23).abs() < 0.01);
        assert!((d.di - -46.43).abs() < 0.01);
        assert!((d.dr - 88.15).abs() < 0.01);
    }

    #[test]
    fn total_rate_matches_component_sum() {
        let p = reference_params();
        let d = derivative(&p, &x0(), 0.0).unwrap();
        let dn = total_population_rate(&p, &x0());
        assert!((dn - -8.62).abs() < 0.01);
        assert_relative_eq!(d.sum(), dn, max_relative = 1e-12);
    }

    #[test]
    fn no_infectious_means_no_incidence_or_recovery() {
        let p = reference_params();
        let x = StateVec::new(0.0, 100.0, 0.0, 0.0);
        let d = derivative(&p, &x, 0.0).unwrap();
        // only births and deaths move S and R
        assert_relative_eq!(d.ds, p.nu * 100.0);
        assert_relative_eq!(d.de, -(p.mu + p.sigma) * 100.0);
        assert_relative_eq!(d.di, p.sigma * 100.0);
        assert_eq!(d.dr, 0.0);
    }

    #[test]
    fn balanced_births_and_no_disease_deaths_conserve_population() {
        let mut p = reference_params();
        p.nu = p.mu;
        p.rho = 0.0;
        for v in [0.0, 0.3, 1.0, 2.5] {
            let d = derivative(&p, &x0(), v).unwrap();
            assert!(d.sum().abs() < 1e-12, "v={v}: {}", d.sum());
            assert_eq!(total_population_rate(&p, &x0()), 0.0);
        }
    }

    #[test]
    fn total_rate_vanishes_on_the_balance_line() {
        let p = reference_params();
        let n = 1000.0;
        let i = (p.nu - p.mu) * n / (p.rho * p.gamma);
        let x = StateVec::new(n - i - 100.0, 100.0, i, 0.0);
        assert!(total_population_rate(&p, &x).abs() < 1e-12);
    }

    #[test]
    fn empty_population_is_singular() {
        let p = reference_params();
        let x = StateVec::new(0.0, 0.0, 0.0, 0.0);
        assert!(matches!(derivative(&p, &x, 0.0), Err(Error::SingularState { .. })));
        assert!(matches!(
            build_matrix(&p, &x, MatrixVariant::A4),
            Err(Error::SingularState { .. })
        ));
    }

    #[test]
    fn a4_entries() {
        let p = reference_params();
        let m = build_matrix(&p, &x0(), MatrixVariant::A4).unwrap();
        assert!((m.entries[0][0] - -0.41892).abs() < 1e-5);
        assert!((m.entries[3][2] - 0.40909).abs() < 1e-5);
        assert_relative_eq!(m.entries[1][2], 1.66 * 0.4);
    }

    #[test]
    fn a2_off_diagonals_nonnegative_without_transmission() {
        let mut p = reference_params();
        p.beta = 0.0;
        let m = build_matrix(&p, &x0(), MatrixVariant::A2).unwrap();
        assert!(m.off_diagonal().all(|(_, _, v)| v >= 0.0));
    }

    #[test]
    fn augmented_variant_adds_birth_row() {
        let p = reference_params();
        for (base, aug) in [
            (MatrixVariant::A1, MatrixVariant::A1Aug),
            (MatrixVariant::A2, MatrixVariant::A2Aug),
            (MatrixVariant::A3, MatrixVariant::A3Aug),
            (MatrixVariant::A4, MatrixVariant::A4Aug),
        ] {
            let a = build_matrix(&p, &x0(), base).unwrap();
            let b = build_matrix(&p, &x0(), aug).unwrap();
            for c in 0..4 {
                assert_relative_eq!(b.entries[0][c] - a.entries[0][c], p.nu, max_relative = 1e-12);
                for r in 1..4 {
                    assert_eq!(b.entries[r][c], a.entries[r][c]);
                }
            }
        }
    }

    #[test]
    fn split_and_input_forcing_agree() {
        let p = reference_params();
        for v in [0.0, 0.25, 1.0, 3.0] {
            let a = forcing_input_form(&p, 870.0, v);
            let b = forcing_split_form(&p, 870.0, v);
            for k in 0..4 {
                assert_relative_eq!(a[k], b[k], max_relative = 1e-14, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn single_precision_evaluation() {
        let p: ModelParams<f32> =
            ModelParams::new(1.0 / 255.0, 1.0 / 15.0, 1.66, 1.0 / 2.2, 1.0 / 2.2, 0.1, 1.0 / 150.0);
        let d = derivative(&p, &StateVec::new(400.0f32, 150.0, 250.0, 200.0), 0.0).unwrap();
        assert!((d.ds - -147.57).abs() < 0.01);
    }

    #[test]
    fn validate_rejects_bad_parameters() {
        let mut p = reference_params().with_reference_levels(1000.0, 1000.0);
        assert!(p.validate().is_ok());
        p.rho = 1.5;
        assert!(p.validate().is_err());
        let mut q = reference_params();
        q.beta = -0.1;
        assert!(q.validate().is_err());
        let q = reference_params().with_reference_levels(10.0, 5.0);
        assert!(q.validate().is_err());
    }
}
