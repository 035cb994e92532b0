//! Catalog of the five third-order branches plus explicit reference frames.
//!
//! Each branch is a family of equations `z0_t - z2_t = F` together with
//! 1-forms `omega_i = f_i1 dx + f_i2 dt` satisfying the structure equations of
//! a pseudospherical surface.

mod config;
mod fit;
pub mod presets;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::functions::{BivariateFn, UnaryFn};
use crate::jetspace::{Jet, JetArgs, JetError, JetExpr, JetFunction};
use crate::sampling::{JetBox, QuasiRandom};
use crate::scalar::Scalar;
use crate::taylor::JetNum;

pub use config::{parse_family_config, to_config, ConfigError};
pub use fit::{fit_family, FitResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("operation not defined for an explicit frame")]
    UnsupportedForExplicitFrame,
    #[error(transparent)]
    Jet(#[from] JetError),
}

impl From<FamilyError> for JetError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::Jet(j) => j,
            other => JetError::FunctionEval(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<T: Scalar>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchT2<T> {
    pub mu: T,
    pub m: T,
    pub sign: Sign,
    pub h: UnaryFn<T>,
    pub psi: BivariateFn<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchT3<T> {
    pub lambda: T,
    pub mu: T,
    pub eta: T,
    pub m1: T,
    pub m2: T,
    pub h: UnaryFn<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchT4<T> {
    pub lambda: T,
    pub mu: T,
    pub m1: T,
    pub m2: T,
    pub sign: Sign,
    pub h: UnaryFn<T>,
    pub psi: BivariateFn<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchT5i<T> {
    pub lambda: T,
    pub mu: T,
    pub eta: T,
    pub m: T,
    pub tau: T,
    pub p: T,
    pub q: T,
    pub sign: Sign,
    pub phi: UnaryFn<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchT5ii<T> {
    pub lambda: T,
    pub theta: T,
    pub mu: T,
    pub eta: T,
    pub m1: T,
    pub m2: T,
    pub p: T,
    /// Derived from the other parameters, see [`BranchT5ii::derived_q`].
    pub q: T,
    pub sign: Sign,
}

impl<T: Scalar> BranchT5ii<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(lambda: T, theta: T, mu: T, eta: T, m1: T, m2: T, p: T, sign: Sign) -> Self {
        let mut b = Self { lambda, theta, mu, eta, m1, m2, p, q: T::zero(), sign };
        b.q = b.derived_q();
        b
    }

    /// `q = (p / 2θ) [ (μθ − ηp)^2 / (p^2 (1+μ^2)) − θ^2/p^2 + m2 θ − 1 ]`.
    pub fn derived_q(&self) -> T {
        let (p, th, mu, eta) = (self.p, self.theta, self.mu, self.eta);
        let two = T::of(2.0);
        let d = mu * th - eta * p;
        p / (two * th) * (d * d / (p * p * (T::one() + mu * mu)) - th * th / (p * p) + self.m2 * th - T::one())
    }
}

/// Reference frame given entry by entry (`f11, f12, f21, f22, f31, f32`).
#[derive(Clone)]
pub struct ExplicitFrame<T: Scalar> {
    pub name: String,
    pub entries: [Arc<dyn JetFunction<T>>; 6],
    /// Named constants the entries were built with (for reports and config files).
    pub params: Vec<(String, T)>,
}

impl<T: Scalar> fmt::Debug for ExplicitFrame<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExplicitFrame").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug)]
pub enum FamilySpec<T: Scalar> {
    T2(BranchT2<T>),
    T3(BranchT3<T>),
    T4(BranchT4<T>),
    T5i(BranchT5i<T>),
    T5ii(BranchT5ii<T>),
    Explicit(ExplicitFrame<T>),
}

/// The six coefficients `f[i][j]` of `omega_{i+1} = f[i][0] dx + f[i][1] dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameCoeffs<T> {
    pub f: [[T; 2]; 3],
}

impl<T: Scalar> FrameCoeffs<T> {
    pub fn new(f: [[T; 2]; 3]) -> Self {
        Self { f }
    }

    /// `(Δ12, Δ13, Δ23)` with `Δij = f_i1 f_j2 − f_j1 f_i2`.
    pub fn deltas(&self) -> (T, T, T) {
        let d = |i: usize, j: usize| self.f[i][0] * self.f[j][1] - self.f[j][0] * self.f[i][1];
        (d(0, 1), d(0, 2), d(1, 2))
    }
}

/// Constants with `f21 = μ2 f11 + η2`, `f31 = μ3 f11 + η3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearRelation<T> {
    pub mu2: T,
    pub eta2: T,
    pub mu3: T,
    pub eta3: T,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    /// Sampled zero crossings of h', psi or phi.
    pub warnings: Vec<String>,
}

fn rel_close<T: Scalar>(a: T, b: T) -> bool {
    let tol = T::of(1e-12).max(T::epsilon() * T::of(16.0));
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(T::min_positive_value())
}

impl<T: Scalar> FamilySpec<T> {
    pub fn branch_name(&self) -> &str {
        match self {
            FamilySpec::T2(_) => "T2",
            FamilySpec::T3(_) => "T3",
            FamilySpec::T4(_) => "T4",
            FamilySpec::T5i(_) => "T5i",
            FamilySpec::T5ii(_) => "T5ii",
            FamilySpec::Explicit(e) => &e.name,
        }
    }

    pub fn is_catalog(&self) -> bool {
        !matches!(self, FamilySpec::Explicit(_))
    }

    /// Coefficient of `z0 z3` in the right-hand side.
    pub fn lambda(&self) -> Option<T> {
        match self {
            FamilySpec::T2(_) => Some(T::zero()),
            FamilySpec::T3(b) => Some(b.lambda),
            FamilySpec::T4(b) => Some(b.lambda),
            FamilySpec::T5i(b) => Some(b.lambda),
            FamilySpec::T5ii(b) => Some(b.lambda),
            FamilySpec::Explicit(_) => None,
        }
    }

    pub fn sign(&self) -> Option<Sign> {
        match self {
            FamilySpec::T2(b) => Some(b.sign),
            FamilySpec::T4(b) => Some(b.sign),
            FamilySpec::T5i(b) => Some(b.sign),
            FamilySpec::T5ii(b) => Some(b.sign),
            _ => None,
        }
    }

    /// Same instance with the other sign (unchanged for sign-free branches).
    pub fn with_sign(&self, sign: Sign) -> Self {
        let mut s = self.clone();
        match &mut s {
            FamilySpec::T2(b) => b.sign = sign,
            FamilySpec::T4(b) => b.sign = sign,
            FamilySpec::T5i(b) => b.sign = sign,
            FamilySpec::T5ii(b) => {
                b.sign = sign;
                b.q = b.derived_q();
            }
            _ => {}
        }
        s
    }

    /// Highest z-index read by the frame coefficients.
    pub fn frame_order(&self) -> usize {
        match self {
            FamilySpec::Explicit(e) => e.entries.iter().map(|f| f.order()).max().unwrap_or(0),
            _ => 2,
        }
    }

    pub fn uses_time_jets(&self) -> bool {
        match self {
            FamilySpec::Explicit(e) => e.entries.iter().any(|f| f.uses_time_jets()),
            _ => false,
        }
    }

    pub fn linear_relation(&self) -> Option<LinearRelation<T>> {
        let one = T::one();
        match self {
            FamilySpec::T2(b) => {
                let (s, r) = (b.sign.value::<T>(), (one + b.mu * b.mu).sqrt());
                Some(LinearRelation { mu2: b.mu, eta2: s * b.m * r, mu3: s * r, eta3: b.m * b.mu })
            }
            FamilySpec::T3(b) => Some(LinearRelation {
                mu2: b.mu,
                eta2: b.eta,
                mu3: b.m1 * (one + b.mu * b.mu) / (b.m2 * b.eta) - b.mu / b.m2,
                eta3: (b.m1 * b.mu - b.eta) / b.m2,
            }),
            FamilySpec::T4(b) => {
                let (s, r) = (b.sign.value::<T>(), (one + b.mu * b.mu).sqrt());
                Some(LinearRelation { mu2: b.mu, eta2: s * b.m1 * r, mu3: s * r, eta3: b.m1 * b.mu })
            }
            FamilySpec::T5i(b) => {
                let s = b.sign.value::<T>();
                let k = b.m - b.q * b.tau / b.p;
                Some(LinearRelation {
                    mu2: b.mu,
                    eta2: b.eta,
                    mu3: s * k * (one + b.mu * b.mu) / b.eta - s * b.tau * b.mu / b.p,
                    eta3: s * k * b.mu - s * b.tau * b.eta / b.p,
                })
            }
            FamilySpec::T5ii(b) => {
                let (s, r) = (b.sign.value::<T>(), (one + b.mu * b.mu).sqrt());
                Some(LinearRelation {
                    mu2: b.mu,
                    eta2: b.eta,
                    mu3: s * r,
                    eta3: s * (b.theta + b.p * b.mu * b.eta) / (b.p * r),
                })
            }
            FamilySpec::Explicit(_) => None,
        }
    }

    /// The six frame coefficients over any jet number type.
    pub fn frame_with<N: JetNum<T>>(&self, a: &JetArgs<'_, N>) -> Result<[[N; 2]; 3], FamilyError> {
        let one = T::one();
        let c = |v: T| N::cst(v);
        Ok(match self {
            FamilySpec::T2(b) => {
                let (z0, z1, z2) = (a.z(0)?, a.z(1)?, a.z(2)?);
                let h = b.h.eval_with(z0 - z2);
                let psi = b.psi.eval_with(z0, z1);
                let (s, r) = (b.sign.value::<T>(), (one + b.mu * b.mu).sqrt());
                [
                    [h, psi],
                    [h * b.mu + s * b.m * r, psi * b.mu],
                    [h * (s * r) + b.m * b.mu, psi * (s * r)],
                ]
            }
            FamilySpec::T3(b) => {
                let (z0, z1, z2) = (a.z(0)?, a.z(1)?, a.z(2)?);
                let h = b.h.eval_with(z0 - z2);
                let (l, mu, eta, m1, m2) = (b.lambda, b.mu, b.eta, b.m1, b.m2);
                let k3 = m1 * (one + mu * mu) / (m2 * eta) - mu / m2;
                let e3 = (m1 * mu - eta) / m2;
                let f31 = h * k3 + e3;
                let f12 = -(z0 * h * l) - z1 * (l * m2);
                let f22 = -(z0 * h * (l * mu)) - z1 * (l * m2 * mu) - z0 * (l * eta);
                let f32 = -(z0 * f31 * l) - z1 * (l / eta * (m1 * (one + mu * mu) - mu * eta));
                [[h, f12], [h * mu + eta, f22], [f31, f32]]
            }
            FamilySpec::T4(b) => {
                let (z0, z1, z2) = (a.z(0)?, a.z(1)?, a.z(2)?);
                let h = b.h.eval_with(z0 - z2);
                let psi = b.psi.eval_with(z0, z1);
                let (l, mu) = (b.lambda, b.mu);
                let (s, r) = (b.sign.value::<T>(), (one + mu * mu).sqrt());
                let lzh = z0 * h * l;
                [
                    [h, psi - lzh],
                    [h * mu + s * b.m1 * r, (psi - lzh) * mu + s * b.m2 * r],
                    [h * (s * r) + b.m1 * mu, (psi - lzh) * (s * r) + mu * b.m2],
                ]
            }
            FamilySpec::T5i(b) => {
                let (z0, z1, z2) = (a.z(0)?, a.z(1)?, a.z(2)?);
                let (l, mu, eta, tau, p, q) = (b.lambda, b.mu, b.eta, b.tau, b.p, b.q);
                let s = b.sign.value::<T>();
                let e = (z1 * (s * tau)).exp();
                let phi = b.phi.eval_with(z0);
                let dphi = b.phi.derivative().eval_with(z0);
                let k = b.m - q * tau / p;
                let f11 = (z0 - z2) * p + q;
                let f21 = f11 * mu + eta;
                let f31 = (f11 * ((one + mu * mu) / eta) + mu) * (s * k) - f21 * (s * tau / p);
                let f12 = -(z0 * f11 * l) + ((z0 * p + q) * phi * (s * tau) + z1 * dphi * p) * e - z1 * (s * l * p / tau);
                let f22 = f12 * mu - z0 * (l * eta) + e * phi * (s * eta * tau);
                let f32 = (f12 * ((one + mu * mu) / eta) - (z0 * l - e * phi * (s * tau)) * mu) * (s * k)
                    - f22 * (s * tau / p);
                [[f11, f12], [f21, f22], [f31, f32]]
            }
            FamilySpec::T5ii(b) => {
                let (z0, z1, z2) = (a.z(0)?, a.z(1)?, a.z(2)?);
                let (l, th, mu, eta, p, q) = (b.lambda, b.theta, b.mu, b.eta, b.p, b.q);
                let (s, r) = (b.sign.value::<T>(), (one + mu * mu).sqrt());
                let am = (z0 * th).exp() * (b.m1 * th);
                let f11 = (z0 - z2) * p + q;
                let f21 = f11 * mu + eta;
                let f31 = f11 * (s * r) + s * (th + p * mu * eta) / (p * r);
                let aml = am - l;
                let pz = z0 * p + q;
                let z1sq = z1 * z1;
                let f12 = -(z0 * f11 * l) + am * z1sq * p + aml * (pz / th + z1 * (s * (mu - p * eta / th) / r));
                let f22 = -(z0 * f21 * l)
                    + am * z1sq * (mu * p)
                    + aml / th * (pz * mu + eta - z1 * (s * (th + mu * eta * p) / r));
                let f32 = -(z0 * f31 * l) + am * z1sq * (s * r * p)
                    - aml / th * (z1 * (p * eta) - (pz * (one + mu * mu) + (mu * eta + th / p)) * (s / r));
                [[f11, f12], [f21, f22], [f31, f32]]
            }
            FamilySpec::Explicit(e) => {
                let mut out = [[c(T::zero()); 2]; 3];
                for (k, entry) in e.entries.iter().enumerate() {
                    out[k / 2][k % 2] = N::call(entry.as_ref(), a)?;
                }
                out
            }
        })
    }

    /// Right-hand side `F` of `z0_t − z2_t = F` over any jet number type.
    pub fn rhs_with<N: JetNum<T>>(&self, a: &JetArgs<'_, N>) -> Result<N, FamilyError> {
        let two = T::of(2.0);
        let three = T::of(3.0);
        Ok(match self {
            FamilySpec::T2(b) => {
                let (z0, z1, z2) = (a.z(0)?, a.z(1)?, a.z(2)?);
                let hp = b.h.derivative().eval_with(z0 - z2);
                let psi = b.psi.eval_with(z0, z1);
                let p0 = b.psi.d_z0().eval_with(z0, z1);
                let p1 = b.psi.d_z1().eval_with(z0, z1);
                (z1 * p0 + z2 * p1 + psi * b.m) / hp
            }
            FamilySpec::T3(b) => {
                let (z0, z1, z2, z3) = (a.z(0)?, a.z(1)?, a.z(2)?, a.z(3)?);
                let h = b.h.eval_with(z0 - z2);
                let hp = b.h.derivative().eval_with(z0 - z2);
                let l = b.lambda;
                z0 * z3 * l - (z1 * h + z0 * z1 * hp + z1 * b.m1 + z2 * b.m2) / hp * l
            }
            FamilySpec::T4(b) => {
                let (z0, z1, z2, z3) = (a.z(0)?, a.z(1)?, a.z(2)?, a.z(3)?);
                let h = b.h.eval_with(z0 - z2);
                let hp = b.h.derivative().eval_with(z0 - z2);
                let psi = b.psi.eval_with(z0, z1);
                let p0 = b.psi.d_z0().eval_with(z0, z1);
                let p1 = b.psi.d_z1().eval_with(z0, z1);
                let l = b.lambda;
                let num = z2 * p1 + z1 * p0 + psi * b.m1
                    - z0 * z1 * hp * l
                    - (z1 * l + z0 * (l * b.m1) + b.m2) * h;
                z0 * z3 * l + num / hp
            }
            FamilySpec::T5i(b) => {
                let (z0, z1, z2, z3) = (a.z(0)?, a.z(1)?, a.z(2)?, a.z(3)?);
                let (l, tau, m) = (b.lambda, b.tau, b.m);
                let s = b.sign.value::<T>();
                let e = (z1 * (s * tau)).exp();
                let phi = b.phi.eval_with(z0);
                let d1 = b.phi.derivative();
                let dphi = d1.eval_with(z0);
                let ddphi = d1.derivative().eval_with(z0);
                z0 * z3 * l + (z1 * z2 - z0 * z1 * two - z1 * (m / tau) - z2 * (s / tau)) * l
                    + e * (z0 * z2 * tau + z1 * s + z2 * m) * phi * tau
                    + e * (z0 * z1 * tau + z1 * z2 * tau + z1 * m + z2 * s) * dphi * s
                    + z1 * z1 * e * ddphi
            }
            FamilySpec::T5ii(b) => {
                let (z0, z1, z2, z3) = (a.z(0)?, a.z(1)?, a.z(2)?, a.z(3)?);
                let l = b.lambda;
                let am = (z0 * b.theta).exp() * (b.m1 * b.theta);
                z0 * z3 * l + (z1 * z2 * two - z0 * z1 * three - z1 * b.m2) * l
                    + am * (z1 * z1 * z1 * b.theta + z1 * z2 + z0 * z1 * two + z1 * b.m2)
            }
            FamilySpec::Explicit(_) => return Err(FamilyError::UnsupportedForExplicitFrame),
        })
    }

    /// Checks every algebraic constraint and samples the plugin functions for zeros.
    pub fn validate(&self, domain: &JetBox<T>) -> Result<ValidationReport, FamilyError> {
        let zero = T::zero();
        let fail = |name: &str| Err(FamilyError::ConstraintViolated(name.to_string()));
        match self {
            FamilySpec::T2(b) => {
                if b.m == zero {
                    return fail("m != 0");
                }
            }
            FamilySpec::T3(b) => {
                if b.eta == zero {
                    return fail("eta != 0");
                }
                if b.lambda * b.m2 == zero {
                    return fail("lambda*m2 != 0");
                }
                let lhs = (b.m2 * b.eta).powi(2);
                let rhs = b.m1 * b.m1 + (b.m1 * b.mu - b.eta).powi(2);
                if !rel_close(lhs, rhs) {
                    return fail("(m2*eta)^2 = m1^2 + (m1*mu - eta)^2");
                }
            }
            FamilySpec::T4(b) => {
                if (b.lambda * b.m1).powi(2) + b.m2 * b.m2 == zero {
                    return fail("(lambda*m1)^2 + m2^2 != 0");
                }
            }
            FamilySpec::T5i(b) => {
                if b.p * b.eta == zero {
                    return fail("p*eta != 0");
                }
                if b.tau <= zero {
                    return fail("tau > 0");
                }
                let k = b.p * b.m - b.q * b.tau;
                let lhs = (b.p * b.eta).powi(2);
                let rhs = k * k + (b.mu * k - b.tau * b.eta).powi(2);
                if !rel_close(lhs, rhs) {
                    return fail("(p*eta)^2 = (p*m - q*tau)^2 + (mu*(p*m - q*tau) - tau*eta)^2");
                }
            }
            FamilySpec::T5ii(b) => {
                if b.theta == zero {
                    return fail("theta != 0");
                }
                if b.p == zero {
                    return fail("p != 0");
                }
                if b.lambda * b.lambda + b.m1 * b.m1 == zero {
                    return fail("lambda^2 + m1^2 != 0");
                }
                if !rel_close(b.q, b.derived_q()) && (b.q - b.derived_q()).abs() > T::of(1e-12) {
                    return fail("q = derived value");
                }
            }
            FamilySpec::Explicit(_) => {}
        }
        let mut report = ValidationReport::default();
        let mut sampler = QuasiRandom::new(domain.clone(), 0);
        let mut samples: Vec<(&str, Vec<T>)> = Vec::new();
        let pts: Vec<[T; 4]> = (0..256).map(|_| sampler.next_point()).collect();
        let h_prime = |h: &UnaryFn<T>| pts.iter().map(|z| h.derivative().eval(z[0] - z[2])).collect::<Vec<_>>();
        match self {
            FamilySpec::T2(b) => {
                samples.push(("h'", h_prime(&b.h)));
                samples.push(("psi", pts.iter().map(|z| b.psi.eval(z[0], z[1])).collect()));
            }
            FamilySpec::T3(b) => samples.push(("h'", h_prime(&b.h))),
            FamilySpec::T4(b) => samples.push(("h'", h_prime(&b.h))),
            FamilySpec::T5i(b) => samples.push(("phi", pts.iter().map(|z| b.phi.eval(z[0])).collect())),
            _ => {}
        }
        for (name, vals) in samples {
            let tiny = vals.iter().any(|v| v.abs() < T::of(1e-12));
            let crosses = vals.windows(2).any(|w| w[0].signum() != w[1].signum());
            if tiny || crosses {
                report.warnings.push(format!("{name} vanishes or changes sign on the sample domain"));
            }
        }
        Ok(report)
    }
}

/// Frame coefficients at a jet.
pub fn frame_coeffs<T: Scalar>(spec: &FamilySpec<T>, jet: &Jet<T>) -> Result<FrameCoeffs<T>, FamilyError> {
    let zt = jet.zt();
    let args = JetArgs { x: jet.x, t: jet.t, z: &jet.z, zt: &zt };
    spec.frame_with(&args).map(FrameCoeffs::new)
}

/// Right-hand side `F = λ z0 z3 + G` at a jet.
pub fn pde_rhs<T: Scalar>(spec: &FamilySpec<T>, jet: &Jet<T>) -> Result<T, FamilyError> {
    let args = JetArgs { x: jet.x, t: jet.t, z: &jet.z, zt: &[] };
    spec.rhs_with(&args)
}

/// One frame coefficient viewed as a jet function.
pub struct FrameEntry<'a, T: Scalar> {
    pub spec: &'a FamilySpec<T>,
    pub i: usize,
    pub j: usize,
}

impl<T: Scalar> JetExpr<T> for FrameEntry<'_, T> {
    fn order(&self) -> usize {
        self.spec.frame_order()
    }

    fn uses_time_jets(&self) -> bool {
        self.spec.uses_time_jets()
    }

    fn eval_with<N: JetNum<T>>(&self, args: &JetArgs<'_, N>) -> Result<N, JetError> {
        Ok(self.spec.frame_with(args)?[self.i][self.j])
    }
}

/// The right-hand side viewed as a jet function.
pub struct PdeRhs<'a, T: Scalar>(pub &'a FamilySpec<T>);

impl<T: Scalar> JetExpr<T> for PdeRhs<'_, T> {
    fn order(&self) -> usize {
        3
    }

    fn eval_with<N: JetNum<T>>(&self, args: &JetArgs<'_, N>) -> Result<N, JetError> {
        Ok(self.0.rhs_with(args)?)
    }
}

#[cfg(test)]
mod tests {
    use super::presets;
    use super::*;
    use approx::assert_relative_eq;

    fn t3(m2: f64) -> FamilySpec<f64> {
        FamilySpec::T3(BranchT3 { lambda: 1.0, mu: 0.0, eta: 1.0, m1: 0.0, m2, h: UnaryFn::identity() })
    }

    #[test]
    fn t3_constraint() {
        let dom = JetBox::default();
        assert!(t3(1.0).validate(&dom).is_ok());
        assert_eq!(
            t3(2.0).validate(&dom),
            Err(FamilyError::ConstraintViolated("(m2*eta)^2 = m1^2 + (m1*mu - eta)^2".into()))
        );
    }

    #[test]
    fn t2_needs_nonzero_m() {
        let spec = presets::linear_t2::<f64>(0.0, Sign::Plus);
        assert_eq!(spec.validate(&JetBox::default()), Err(FamilyError::ConstraintViolated("m != 0".into())));
        let ok = presets::linear_t2::<f64>(1.0, Sign::Plus).validate(&JetBox::default()).unwrap();
        assert_eq!(ok.warnings.len(), 1, "psi = z0 changes sign on the box");
    }

    #[test]
    fn t2_frame_example() {
        let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
        let f = frame_coeffs(&spec, &Jet::from_z(&[2.0, 0.0, 1.0])).unwrap();
        assert_eq!(f.f, [[1.0, 2.0], [1.0, 0.0], [1.0, 2.0]]);
        assert_eq!(f.deltas(), (-2.0, 0.0, 2.0));
    }

    #[test]
    fn rhs_examples() {
        let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
        assert_eq!(pde_rhs(&spec, &Jet::from_z(&[2.0, 3.0, 1.0, 0.0])).unwrap(), 5.0);
        let ch = presets::camassa_holm::<f64>(0.0);
        assert_eq!(pde_rhs(&ch, &Jet::from_z(&[1.0, 1.0, 1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(pde_rhs(&ch, &Jet::from_z(&[0.0; 4])).unwrap(), 0.0);
        let sg = presets::sine_gordon_lightcone::<f64>();
        assert_eq!(pde_rhs(&sg, &Jet::from_z(&[0.0; 4])), Err(FamilyError::UnsupportedForExplicitFrame));
    }

    #[test]
    fn ch_rhs_is_camassa_holm() {
        let ch = presets::camassa_holm::<f64>(0.7);
        let z = [0.3, -1.1, 0.8, 1.7];
        let expect = z[0] * z[3] + 2.0 * z[1] * z[2] - 3.0 * z[0] * z[1] - 0.7 * z[1];
        assert_relative_eq!(pde_rhs(&ch, &Jet::from_z(&z)).unwrap(), expect, epsilon = 1e-14);
    }

    #[test]
    fn sine_gordon_frame_at_quarter_turn() {
        let sg = presets::sine_gordon_lightcone::<f64>();
        let jet = Jet::from_z(&[std::f64::consts::FRAC_PI_2, 0.3]).with_time(0.2, None);
        let f = frame_coeffs(&sg, &jet).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(f.f[0][0], r, epsilon = 1e-15);
        assert_relative_eq!(f.f[0][1], r, epsilon = 1e-15);
        assert_relative_eq!(f.f[1][0], r, epsilon = 1e-15);
        assert_relative_eq!(f.f[1][1], -r, epsilon = 1e-15);
        assert_relative_eq!(f.f[2][0], 0.15, epsilon = 1e-15);
        assert_relative_eq!(f.f[2][1], -0.1, epsilon = 1e-15);
        let (d12, _, _) = f.deltas();
        assert_relative_eq!(d12, -(std::f64::consts::FRAC_PI_2).sin(), epsilon = 1e-15);
    }

    #[test]
    fn t5ii_q_derivation_matches_p_eq_theta_form() {
        // p = θ: the θ^2/p^2 and p/θ readings agree
        let b = BranchT5ii::new(1.0, 2.0, 0.5, 0.3, 0.0, 1.5, 2.0, Sign::Plus);
        let (p, th, mu, eta, m2) = (2.0, 2.0, 0.5, 0.3, 1.5);
        let alt = p / (2.0 * th) * ((mu * th - eta * p).powi(2) / (p * p * (1.0 + mu * mu)) - p / th + m2 * th - 1.0);
        assert_relative_eq!(b.q, alt, epsilon = 1e-15);
    }

    #[test]
    fn f32_evaluation() {
        let spec = presets::camassa_holm::<f32>(1.0);
        let f = frame_coeffs(&spec, &Jet::from_z(&[0.5f32, 0.25, -0.5, 0.0])).unwrap();
        let g = frame_coeffs(&presets::camassa_holm::<f64>(1.0), &Jet::from_z(&[0.5, 0.25, -0.5, 0.0])).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((f.f[i][j] as f64 - g.f[i][j]).abs() < 1e-5);
            }
        }
    }
}
