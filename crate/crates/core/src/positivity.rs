//! Metzler criteria, the constant/perturbation split of the dynamics matrix,
//! runtime nonnegativity monitoring and the zero-resetting rule.

use crate::error::{Error, Result};
use crate::model::{build_matrix, checked_total, Compartment, DynamicsMatrix, MatrixVariant, ModelParams, StateVec};
use crate::scalar::Scalar;

/// Default absolute tolerance (individuals) below which a negative value is roundoff.
pub const DEFAULT_NONNEGATIVITY_TOL: f64 = 1e-9;

/// Off-diagonal entry that breaks the Metzler property. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry<T> {
    pub row: usize,
    pub col: usize,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetzlerReport<T> {
    pub variant: MatrixVariant,
    pub is_metzler: bool,
    pub violating_entries: Vec<Entry<T>>,
}

pub fn check_metzler<T: Scalar>(m: &DynamicsMatrix<T>) -> MetzlerReport<T> {
    let violating_entries: Vec<_> = m
        .off_diagonal()
        .filter(|&(_, _, v)| v < T::zero())
        .map(|(row, col, value)| Entry { row, col, value })
        .collect();
    MetzlerReport {
        variant: m.variant,
        is_metzler: violating_entries.is_empty(),
        violating_entries,
    }
}

/// Parameter-only Metzler criterion for a variant.
///
/// State-dependent entries are taken at their worst case, `S/N = 1` and
/// `I/N` anywhere in `[0, 1]`, so a `true` verdict holds for every
/// admissible state.
pub fn metzler_by_parameters<T: Scalar>(params: &ModelParams<T>, variant: MatrixVariant) -> bool {
    let p = params;
    let z = T::zero();
    let common = p.omega >= z && p.sigma >= z && p.recovery_to_immune() >= z;
    match variant {
        MatrixVariant::A1 | MatrixVariant::A4 => common && p.beta >= z,
        MatrixVariant::A2 | MatrixVariant::A3 => common && p.beta == z,
        MatrixVariant::A1Aug | MatrixVariant::A4Aug => common && p.beta >= z && p.nu >= z && p.omega + p.nu >= z,
        MatrixVariant::A2Aug | MatrixVariant::A3Aug => {
            common && p.beta >= z && p.nu >= z && p.omega + p.nu >= z && p.nu - p.beta >= z
        }
    }
}

/// `A4 = A* + B(x)` with `A*` constant Metzler and `B(x) ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarDecomposition<T> {
    pub a_star: [[T; 4]; 4],
    pub b: [[T; 4]; 4],
}

/// Splits the canonical dynamics matrix using the reference levels `I⁰`, `N⁰`.
pub fn decompose_star<T: Scalar>(params: &ModelParams<T>, x: &StateVec<T>) -> Result<StarDecomposition<T>> {
    let n = checked_total(x)?;
    let p = params;
    let z = T::zero();
    if !(p.i0_ref > z && p.n0_ref >= p.i0_ref) {
        return Err(Error::DecompositionInfeasible(format!(
            "need n0_ref >= i0_ref > 0, got i0_ref={} n0_ref={}",
            p.i0_ref, p.n0_ref
        )));
    }
    let ref_ratio = p.i0_ref / p.n0_ref;
    let ratio = x.i / n;
    if ref_ratio < ratio {
        return Err(Error::DecompositionInfeasible(format!(
            "i0_ref/n0_ref = {ref_ratio} is below the current I/N = {ratio}"
        )));
    }

    let a_star = [
        [-(p.mu + p.beta * ref_ratio), z, z, p.omega],
        [z, -(p.mu + p.sigma), z, z],
        [z, p.sigma, -(p.mu + p.gamma), z],
        [z, z, p.recovery_to_immune(), -(p.mu + p.omega)],
    ];
    let mut b = [[z; 4]; 4];
    b[0][0] = p.beta * (ref_ratio - ratio);
    b[1][2] = p.beta * x.s / n;
    Ok(StarDecomposition { a_star, b })
}

impl<T: Scalar> StarDecomposition<T> {
    pub fn sum(&self) -> [[T; 4]; 4] {
        let mut out = self.a_star;
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = *v + self.b[r][c];
            }
        }
        out
    }
}

/// Checks that the split reconstructs the canonical matrix; returns the largest entry gap.
pub fn decomposition_gap<T: Scalar>(params: &ModelParams<T>, x: &StateVec<T>) -> Result<T> {
    let d = decompose_star(params, x)?;
    let a = build_matrix(params, x, MatrixVariant::A4)?;
    let s = d.sum();
    let gap = s
        .iter()
        .flatten()
        .zip(a.entries.iter().flatten())
        .fold(T::zero(), |g, (&u, &v)| g.max((u - v).abs()));
    Ok(gap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation<T> {
    pub component: Compartment,
    pub value: T,
}

/// Components strictly below `-tol`.
pub fn monitor_nonnegativity<T: Scalar>(x: &StateVec<T>, tol: T) -> Vec<Violation<T>> {
    Compartment::ALL
        .iter()
        .map(|&c| Violation {
            component: c,
            value: x.get(c),
        })
        .filter(|v| v.value < -tol)
        .collect()
}

/// A population clamped back to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetEvent<T> {
    pub time: T,
    pub component: Compartment,
    pub value_before: T,
}

/// Clamps every negative component to exactly zero.
pub fn apply_reset<T: Scalar>(x: &StateVec<T>, time: T) -> (StateVec<T>, Vec<ResetEvent<T>>) {
    let mut a = x.to_array();
    let mut events = Vec::new();
    for c in Compartment::ALL {
        let v = a[c.index()];
        if v < T::zero() {
            events.push(ResetEvent {
                time,
                component: c,
                value_before: v,
            });
            a[c.index()] = T::zero();
        }
    }
    (StateVec::from_array(a), events)
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

    #[test]
    fn canonical_variant_is_metzler() {
        let m = build_matrix(&params(), &x0(), MatrixVariant::A4).unwrap();
        let r = check_metzler(&m);
        assert!(r.is_metzler);
        assert!(r.violating_entries.is_empty());
        assert!(metzler_by_parameters(&params(), MatrixVariant::A4));
    }

    #[test]
    fn a2_with_transmission_violates_at_s_row_i_column() {
        let m = build_matrix(&params(), &x0(), MatrixVariant::A2).unwrap();
        let r = check_metzler(&m);
        assert!(!r.is_metzler);
        assert_eq!(r.violating_entries.len(), 1);
        let e = r.violating_entries[0];
        assert_eq!((e.row, e.col), (0, 2));
        assert_relative_eq!(e.value, -1.66 * 0.4);
        assert!(!metzler_by_parameters(&params(), MatrixVariant::A2));
    }

    #[test]
    fn a2_without_transmission_is_metzler() {
        let mut p = params();
        p.beta = 0.0;
        let m = build_matrix(&p, &x0(), MatrixVariant::A2).unwrap();
        assert!(check_metzler(&m).is_metzler);
        assert!(metzler_by_parameters(&p, MatrixVariant::A2));
    }

    #[test]
    fn augmented_a2_depends_on_birth_versus_transmission() {
        // ν − βS/N ≥ 0 at S/N = 0.4 once β ≤ 2.5ν; the static form needs β ≤ ν
        let mut p = params();
        p.beta = 2.0 * p.nu;
        let m = build_matrix(&p, &x0(), MatrixVariant::A2Aug).unwrap();
        assert!(check_metzler(&m).is_metzler);
        assert!(!metzler_by_parameters(&p, MatrixVariant::A2Aug));
        p.beta = 0.5 * p.nu;
        assert!(metzler_by_parameters(&p, MatrixVariant::A2Aug));
    }

    #[test]
    fn split_entry_at_reference_ratio() {
        let d = decompose_star(&params(), &x0()).unwrap();
        assert_relative_eq!(d.b[0][0], 1.245, max_relative = 1e-12);
        assert_relative_eq!(d.b[1][2], 1.66 * 0.4, max_relative = 1e-12);
        assert!(decomposition_gap(&params(), &x0()).unwrap() < 1e-12);

        let p = params().with_reference_levels(250.0, 1000.0);
        let d = decompose_star(&p, &x0()).unwrap();
        assert_eq!(d.b[0][0], 0.0);
    }

    #[test]
    fn split_rejects_low_reference_ratio() {
        let p = params().with_reference_levels(100.0, 1000.0);
        assert!(matches!(
            decompose_star(&p, &x0()),
            Err(Error::DecompositionInfeasible(_))
        ));
        let p = params().with_reference_levels(1000.0, 500.0);
        assert!(matches!(
            decompose_star(&p, &x0()),
            Err(Error::DecompositionInfeasible(_))
        ));
    }

    #[test]
    fn monitor_flags_only_real_negatives() {
        assert!(monitor_nonnegativity(&x0(), 1e-9).is_empty());
        let v = monitor_nonnegativity(&StateVec::new(-0.5, 10.0, 10.0, 10.0), 1e-9);
        assert_eq!(
            v,
            vec![Violation {
                component: Compartment::S,
                value: -0.5
            }]
        );
        assert!(monitor_nonnegativity(&StateVec::new(-1e-12, 10.0, 10.0, 10.0), 1e-9).is_empty());
    }

    #[test]
    fn reset_clamps_negatives() {
        let (x, ev) = apply_reset(&StateVec::new(-3.0, 5.0, -0.1, 7.0), 2.5);
        assert_eq!(x, StateVec::new(0.0, 5.0, 0.0, 7.0));
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].component, Compartment::S);
        assert_eq!(ev[0].value_before, -3.0);
        assert_eq!(ev[1].component, Compartment::I);
        assert!(ev.iter().all(|e| e.time == 2.5 && e.value_before < 0.0));

        let (y, ev) = apply_reset(&StateVec::new(1.0, 2.0, 3.0, 4.0), 0.0);
        assert_eq!(y, StateVec::new(1.0, 2.0, 3.0, 4.0));
        assert!(ev.is_empty());
    }
}
