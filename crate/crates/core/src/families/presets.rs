//! Ready-made family instances.

use std::sync::Arc;

use super::{BranchT2, BranchT3, BranchT4, BranchT5i, BranchT5ii, ExplicitFrame, FamilySpec, Sign};
use crate::functions::{BivariateFn, UnaryFn};
use crate::jetspace::{JetArgs, JetError, JetExpr, JetFunction};
use crate::scalar::Scalar;
use crate::taylor::JetNum;

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 9] =
    ["linear-t2", "ch", "dp", "t3-example", "t4-example", "t5i-example", "t5ii-example", "sg-lightcone", "sg-eta"];

/// `z0_t − z2_t = z1 + m z0` (h = identity, psi = z0, mu = 0).
pub fn linear_t2<T: Scalar>(m: T, sign: Sign) -> FamilySpec<T> {
    FamilySpec::T2(BranchT2 { mu: T::zero(), m, sign, h: UnaryFn::identity(), psi: BivariateFn::identity() })
}

/// Camassa–Holm `z0_t − z2_t = z0 z3 + 2 z1 z2 − 3 z0 z1 − m2 z1`.
pub fn camassa_holm<T: Scalar>(m2: T) -> FamilySpec<T> {
    let one = T::one();
    FamilySpec::T5ii(BranchT5ii::new(one, one, T::zero(), one, T::zero(), m2, one, Sign::Plus))
}

/// Degasperis–Procesi `z0_t − z2_t = z0 z3 + 3 z1 z2 − 4 z0 z1`, a fourth-branch member
/// with h = z0 − z2 and psi = (z0 − z1)^2.
pub fn degasperis_procesi<T: Scalar>(sign: Sign) -> FamilySpec<T> {
    let (zero, one) = (T::zero(), T::one());
    FamilySpec::T4(BranchT4 {
        lambda: one,
        mu: zero,
        m1: T::of(2.0),
        m2: zero,
        sign,
        h: UnaryFn::identity(),
        psi: BivariateFn::Poly2([zero, zero, zero, one, -T::of(2.0), one]),
    })
}

pub fn t3_example<T: Scalar>() -> FamilySpec<T> {
    FamilySpec::T3(BranchT3 {
        lambda: T::one(),
        mu: T::zero(),
        eta: T::one(),
        m1: T::zero(),
        m2: T::one(),
        h: UnaryFn::identity(),
    })
}

pub fn t4_example<T: Scalar>(sign: Sign) -> FamilySpec<T> {
    FamilySpec::T4(BranchT4 {
        lambda: T::one(),
        mu: T::of(0.5),
        m1: T::one(),
        m2: T::one(),
        sign,
        h: UnaryFn::identity(),
        psi: BivariateFn::identity(),
    })
}

pub fn t5i_example<T: Scalar>(sign: Sign) -> FamilySpec<T> {
    FamilySpec::T5i(BranchT5i {
        lambda: T::one(),
        mu: T::one(),
        eta: T::of(2.0),
        m: T::of(2.0),
        tau: T::one(),
        p: T::one(),
        q: T::zero(),
        sign,
        phi: UnaryFn::exp(),
    })
}

/// A fifth-branch (ii) instance with nonzero m1 and p = θ.
pub fn t5ii_example<T: Scalar>(sign: Sign) -> FamilySpec<T> {
    let h = T::of(0.5);
    FamilySpec::T5ii(BranchT5ii::new(T::one(), h, T::of(0.3), T::of(0.7), h, T::of(1.2), h, sign))
}

#[derive(Clone, Copy, Debug)]
enum SgEntry {
    Lightcone(usize),
    Eta(usize),
}

#[derive(Clone, Copy, Debug)]
struct SineGordonEntry<T> {
    which: SgEntry,
    eta: T,
}

impl<T: Scalar> JetExpr<T> for SineGordonEntry<T> {
    fn order(&self) -> usize {
        match self.which {
            SgEntry::Lightcone(4) | SgEntry::Eta(4) => 1,
            _ => 0,
        }
    }

    fn uses_time_jets(&self) -> bool {
        matches!(self.which, SgEntry::Lightcone(5))
    }

    fn eval_with<N: JetNum<T>>(&self, a: &JetArgs<'_, N>) -> Result<N, JetError> {
        let half = T::of(0.5);
        let u = a.z(0)?;
        Ok(match self.which {
            SgEntry::Lightcone(0) | SgEntry::Lightcone(1) => (u * half).cos(),
            SgEntry::Lightcone(2) => (u * half).sin(),
            SgEntry::Lightcone(3) => -(u * half).sin(),
            SgEntry::Lightcone(4) => a.z(1)? * half,
            SgEntry::Lightcone(_) => -(a.zt(0)? * half),
            SgEntry::Eta(0) | SgEntry::Eta(5) => N::cst(T::zero()),
            SgEntry::Eta(1) => u.sin() / self.eta,
            SgEntry::Eta(2) => N::cst(self.eta),
            SgEntry::Eta(3) => u.cos() / self.eta,
            SgEntry::Eta(_) => a.z(1)?,
        })
    }
}

fn explicit<T: Scalar>(name: &str, make: impl Fn(usize) -> SgEntry, params: Vec<(String, T)>) -> FamilySpec<T> {
    let eta = params.first().map(|p| p.1).unwrap_or(T::one());
    let e = |k: usize| -> Arc<dyn JetFunction<T>> { Arc::new(SineGordonEntry { which: make(k), eta }) };
    FamilySpec::Explicit(ExplicitFrame {
        name: name.to_string(),
        entries: [e(0), e(1), e(2), e(3), e(4), e(5)],
        params,
    })
}

/// Sine-Gordon `u_xt = sin u` with `omega1 = cos(u/2)(dx+dt)`, `omega2 = sin(u/2)(dx−dt)`,
/// `omega3 = u_x/2 dx − u_t/2 dt`.
pub fn sine_gordon_lightcone<T: Scalar>() -> FamilySpec<T> {
    explicit("sg-lightcone", SgEntry::Lightcone, Vec::new())
}

/// Sine-Gordon with spectral parameter: `omega1 = sin u/η dt`, `omega2 = η dx + cos u/η dt`,
/// `omega3 = u_x dx`.
pub fn sine_gordon_eta<T: Scalar>(eta: T) -> FamilySpec<T> {
    explicit("sg-eta", SgEntry::Eta, vec![("eta".to_string(), eta)])
}

/// Preset by name with its default parameters.
pub fn by_name<T: Scalar>(name: &str) -> Option<FamilySpec<T>> {
    Some(match name {
        "linear-t2" => linear_t2(T::one(), Sign::Plus),
        "ch" => camassa_holm(T::one()),
        "dp" => degasperis_procesi(Sign::Plus),
        "t3-example" => t3_example(),
        "t4-example" => t4_example(Sign::Plus),
        "t5i-example" => t5i_example(Sign::Plus),
        "t5ii-example" => t5ii_example(Sign::Plus),
        "sg-lightcone" => sine_gordon_lightcone(),
        "sg-eta" => sine_gordon_eta(T::one()),
        _ => return None,
    })
}
