//! Coefficient matching of a polynomial right-hand side against the catalog.
//!
//! The target is a [`JetPoly`] over the monomials
//! `1, z0, z1, z2, z0^2, z0 z1, z1^2, z0 z2, z1 z2, z0 z3`. Candidates come from
//! exact coefficient matching with affine `h` and quadratic `psi`; a candidate
//! is accepted only if it validates and reproduces the target at 64 jets.

use crate::functions::{BivariateFn, UnaryFn};
use crate::jetspace::{Jet, JetExpr, JetPoly};
use crate::sampling::{JetBox, QuasiRandom};
use crate::scalar::Scalar;

use super::{pde_rhs, BranchT2, BranchT3, BranchT4, BranchT5ii, FamilySpec, Sign};

#[derive(Clone, Debug)]
pub enum FitResult<T: Scalar> {
    Match(FamilySpec<T>),
    NoMatch,
}

impl<T: Scalar> FitResult<T> {
    pub fn spec(&self) -> Option<&FamilySpec<T>> {
        match self {
            FitResult::Match(s) => Some(s),
            FitResult::NoMatch => None,
        }
    }
}

const VERIFY_SAMPLES: usize = 64;

/// Coefficients of the target in the fixed monomial basis.
#[derive(Clone, Copy, Debug, Default)]
struct Target<T> {
    c: T,
    z0: T,
    z1: T,
    z2: T,
    z0z0: T,
    z0z1: T,
    z1z1: T,
    z0z2: T,
    z1z2: T,
    z0z3: T,
}

impl<T: Scalar> Target<T> {
    fn from_poly(p: &JetPoly<T>) -> Option<Self> {
        let mut t = Target::<T>::default();
        for (e, c) in p.monomials() {
            let slot = match e.as_slice() {
                [] => &mut t.c,
                [1] => &mut t.z0,
                [0, 1] => &mut t.z1,
                [0, 0, 1] => &mut t.z2,
                [2] => &mut t.z0z0,
                [1, 1] => &mut t.z0z1,
                [0, 2] => &mut t.z1z1,
                [1, 0, 1] => &mut t.z0z2,
                [0, 1, 1] => &mut t.z1z2,
                [1, 0, 0, 1] => &mut t.z0z3,
                _ => return None,
            };
            *slot = c;
        }
        Some(t)
    }
}

/// Searches T5ii, T3, T2, T4 in that order and returns the first verified match.
pub fn fit_family<T: Scalar>(target: &JetPoly<T>) -> FitResult<T> {
    let Some(t) = Target::from_poly(target) else {
        return FitResult::NoMatch;
    };
    let candidates = t5ii_candidates(&t)
        .into_iter()
        .chain(t3_candidates(&t))
        .chain(t2_candidates(&t))
        .chain(t4_candidates(&t));
    for spec in candidates {
        if spec.validate(&JetBox::default()).is_ok() && reproduces(&spec, target) {
            return FitResult::Match(spec);
        }
    }
    FitResult::NoMatch
}

fn reproduces<T: Scalar>(spec: &FamilySpec<T>, target: &JetPoly<T>) -> bool {
    let tol = T::of(1e-10).max(T::epsilon() * T::of(1e3));
    let mut q = QuasiRandom::new(JetBox::default(), 0x5eed);
    q.points(VERIFY_SAMPLES).into_iter().all(|z| {
        let jet = Jet::from_z(&z);
        let want = match target.eval_with(&crate::jetspace::JetArgs { x: jet.x, t: jet.t, z: &jet.z, zt: &[] }) {
            Ok(v) => v,
            Err(_) => return false,
        };
        match pde_rhs(spec, &jet) {
            Ok(got) => (got - want).abs() < tol * (T::one() + want.abs()),
            Err(_) => false,
        }
    })
}

fn nz<T: Scalar>(v: T) -> bool {
    v.abs() > T::epsilon() * T::of(64.0)
}

fn t5ii_candidates<T: Scalar>(t: &Target<T>) -> Vec<FamilySpec<T>> {
    let l = t.z0z3;
    if !nz(l) {
        return Vec::new();
    }
    let one = T::one();
    vec![FamilySpec::T5ii(BranchT5ii::new(l, one, T::zero(), one, T::zero(), -t.z1 / l, one, Sign::Plus))]
}

fn t3_candidates<T: Scalar>(t: &Target<T>) -> Vec<FamilySpec<T>> {
    let l = t.z0z3;
    if !nz(l) {
        return Vec::new();
    }
    let m2 = -t.z2 / l;
    if !nz(m2) {
        return Vec::new();
    }
    let one = T::one();
    // η = 1; pick (μ, m1) on the constraint curve (m2)^2 = m1^2 + (m1 μ − 1)^2
    let (mu, m1) = if m2 * m2 >= one {
        (T::zero(), (m2 * m2 - one).sqrt())
    } else {
        let mu = (one / (m2 * m2) - one).sqrt();
        (mu, mu / (one + mu * mu))
    };
    let beta = -t.z1 / l - m1;
    vec![FamilySpec::T3(BranchT3 { lambda: l, mu, eta: one, m1, m2, h: UnaryFn::affine(one, beta) })]
}

fn t2_candidates<T: Scalar>(t: &Target<T>) -> Vec<FamilySpec<T>> {
    if nz(t.z0z3) {
        return Vec::new();
    }
    let two = T::of(2.0);
    let p01 = t.z2;
    let p11 = t.z0z2;
    let p02 = t.z1z2 / two;
    let mut ms = Vec::new();
    if nz(p02) {
        ms.push((t.z1z1 - t.z0z2) / p02);
    }
    ms.extend(quadratic_roots(t.z2, -t.z1, t.z0).unwrap_or_default());
    ms.extend(quadratic_roots(t.z0z2, -t.z0z1, two * t.z0z0).unwrap_or_default());
    ms.into_iter()
        .filter(|m| nz(*m))
        .map(|m| {
            let p20 = (t.z0z1 - m * p11) / two;
            let p10 = t.z1 - m * p01;
            let p00 = t.c / m;
            FamilySpec::T2(BranchT2 {
                mu: T::zero(),
                m,
                sign: Sign::Plus,
                h: UnaryFn::identity(),
                psi: BivariateFn::Poly2([p00, p10, p01, p20, p11, p02]),
            })
        })
        .collect()
}

fn t4_candidates<T: Scalar>(t: &Target<T>) -> Vec<FamilySpec<T>> {
    let two = T::of(2.0);
    let one = T::one();
    let l = t.z0z3;
    let p02 = (t.z1z2 - l) / two;
    let m1s: Vec<T> = if nz(p02 - l) {
        vec![(t.z1z1 - t.z0z2) / (p02 - l)]
    } else if nz(t.z1z1 - t.z0z2) {
        Vec::new()
    } else {
        match cubic_roots(l, -t.z0z2, t.z0z1, -two * t.z0z0) {
            Some(r) => r,
            None => [0.0, 1.0, 2.0, -1.0].iter().map(|&v| T::of(v)).collect(),
        }
    };
    let mut out = Vec::new();
    for m1 in m1s {
        let p11 = t.z0z2 - l * m1;
        let p20 = (t.z0z1 + two * l - m1 * p11) / two;
        let rhs = t.z0 - m1 * t.z1 + m1 * m1 * t.z2;
        let m2s: Vec<T> = if nz(m1 * m1 - one) { vec![rhs / (m1 * m1 - one)] } else { vec![one, T::zero()] };
        for m2 in m2s {
            let p01 = t.z2 - m2;
            let beta = if !nz(m1) && nz(m2) { -t.c / m2 } else { T::zero() };
            let p10 = t.z1 - m1 * p01 + l * beta;
            let p00 = if nz(m1) { t.c / m1 } else { T::zero() };
            out.push(FamilySpec::T4(BranchT4 {
                lambda: l,
                mu: T::zero(),
                m1,
                m2,
                sign: Sign::Plus,
                h: UnaryFn::affine(one, beta),
                psi: BivariateFn::Poly2([p00, p10, p01, p20, p11, p02]),
            }));
        }
    }
    out
}

/// Real roots of `a x^2 + b x + c`; `None` when the polynomial vanishes identically.
fn quadratic_roots<T: Scalar>(a: T, b: T, c: T) -> Option<Vec<T>> {
    if !nz(a) {
        if !nz(b) {
            return if nz(c) { Some(Vec::new()) } else { None };
        }
        return Some(vec![-c / b]);
    }
    let d = b * b - T::of(4.0) * a * c;
    if d < T::zero() {
        return Some(Vec::new());
    }
    // cancellation-free form
    let q = -(b + b.signum() * d.sqrt()) / T::of(2.0);
    let mut r = vec![q / a];
    if nz(q) {
        r.push(c / q);
    } else {
        r.push(T::zero());
    }
    Some(r)
}

/// Real roots of `a x^3 + b x^2 + c x + d`, descending, Newton-polished.
fn cubic_roots<T: Scalar>(a: T, b: T, c: T, d: T) -> Option<Vec<T>> {
    if !nz(a) {
        return quadratic_roots(b, c, d);
    }
    let (b, c, d) = (b / a, c / a, d / a);
    let three = T::of(3.0);
    let p = c - b * b / three;
    let q = T::of(2.0) * b * b * b / T::of(27.0) - b * c / three + d;
    let shift = -b / three;
    let disc = (q / T::of(2.0)).powi(2) + (p / three).powi(3);
    let mut roots = if disc > T::zero() {
        let s = disc.sqrt();
        vec![(-q / T::of(2.0) + s).cbrt() + (-q / T::of(2.0) - s).cbrt() + shift]
    } else if !nz(p) {
        vec![shift]
    } else {
        let r = (-p / three).sqrt();
        let phi = ((-q / T::of(2.0)) / (r * r * r)).max(-T::one()).min(T::one()).acos();
        (0..3)
            .map(|k| T::of(2.0) * r * ((phi - T::of(2.0) * T::PI() * T::of_usize(k)) / three).cos() + shift)
            .collect()
    };
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let f = ((*r + b) * *r + c) * *r + d;
            let df = (three * *r + T::of(2.0) * b) * *r + c;
            if df != T::zero() {
                *r = *r - f / df;
            }
        }
        if r.abs() < T::of(1e-12) {
            *r = T::zero();
        }
    }
    roots.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    roots.dedup_by(|x, y| (*x - *y).abs() < T::of(1e-9));
    Some(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::presets;

    fn ch_target(m: f64) -> JetPoly<f64> {
        JetPoly::new()
            .term(1.0, &[(0, 1), (3, 1)])
            .term(2.0, &[(1, 1), (2, 1)])
            .term(-3.0, &[(0, 1), (1, 1)])
            .term(-m, &[(1, 1)])
    }

    #[test]
    fn camassa_holm_lands_in_t5ii() {
        match fit_family(&ch_target(0.7)) {
            FitResult::Match(FamilySpec::T5ii(b)) => {
                assert_eq!((b.lambda, b.m1, b.m2), (1.0, 0.0, 0.7));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn linear_target_lands_in_t2() {
        let target = JetPoly::new().term(1.0, &[(1, 1)]).term(2.5, &[(0, 1)]);
        match fit_family(&target) {
            FitResult::Match(FamilySpec::T2(b)) => assert_eq!(b.m, 2.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn t3_preset_round_trips() {
        // F = z0 z3 + z1 z2 − 2 z0 z1 − z2 for the T3 example
        let target = JetPoly::new()
            .term(1.0, &[(0, 1), (3, 1)])
            .term(1.0, &[(1, 1), (2, 1)])
            .term(-2.0, &[(0, 1), (1, 1)])
            .term(-1.0, &[(2, 1)]);
        let spec = fit_family(&target).spec().cloned().expect("match");
        assert_eq!(spec.branch_name(), "T3");
        let z = [0.3, -0.2, 0.9, 1.1];
        let want = pde_rhs(&presets::t3_example::<f64>(), &Jet::from_z(&z)).unwrap();
        assert!((pde_rhs(&spec, &Jet::from_z(&z)).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn foreign_monomial_is_no_match() {
        let target = JetPoly::new().term(1.0, &[(0, 3)]);
        assert!(matches!(fit_family(&target), FitResult::NoMatch));
    }

    #[test]
    fn cubic_roots_of_dp_polynomial() {
        let r = cubic_roots(1.0f64, 0.0, -4.0, 0.0).unwrap();
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([2.0, 0.0, -2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(cubic_roots(0.0f64, 0.0, 0.0, 0.0).is_none());
    }
}
