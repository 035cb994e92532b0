//! Truncated Taylor series arithmetic.
//!
//! A `Taylor<T>` holds the first [`TAYLOR_LEN`] coefficients of a univariate
//! power series `c0 + c1 s + c2 s^2 + ...`. Composing jet functions with series
//! inputs yields exact total derivatives (`k! * c_k`) and exact partials
//! (seed one input with `s`), with no step-size error.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::jetspace::{Jet, JetArgs, JetError, JetFunction};
use crate::scalar::Scalar;

/// Number of stored coefficients; enough for fourth total derivatives of
/// third-order functions plus mixed second partials.
pub const TAYLOR_LEN: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor<T> {
    pub c: [T; TAYLOR_LEN],
}

impl<T: Scalar> Taylor<T> {
    pub fn constant(v: T) -> Self {
        let mut c = [T::zero(); TAYLOR_LEN];
        c[0] = v;
        Self { c }
    }

    /// `v + s`.
    pub fn variable(v: T) -> Self {
        let mut c = [T::zero(); TAYLOR_LEN];
        c[0] = v;
        c[1] = T::one();
        Self { c }
    }

    /// Series with the given leading coefficients, rest zero.
    pub fn from_coeffs(coeffs: &[T]) -> Self {
        let mut c = [T::zero(); TAYLOR_LEN];
        for (dst, src) in c.iter_mut().zip(coeffs) {
            *dst = *src;
        }
        Self { c }
    }

    /// k-th derivative at s = 0.
    pub fn derivative(&self, k: usize) -> T {
        let mut f = T::one();
        for i in 2..=k {
            f = f * T::of_usize(i);
        }
        self.c[k] * f
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    fn scale(mut self, k: T) -> Self {
        for v in self.c.iter_mut() {
            *v = *v * k;
        }
        self
    }

    pub fn recip(self) -> Self {
        Self::constant(T::one()) / self
    }

    pub fn exp(self) -> Self {
        let a = &self.c;
        let mut e = [T::zero(); TAYLOR_LEN];
        e[0] = a[0].exp();
        for k in 1..TAYLOR_LEN {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + T::of_usize(j) * a[j] * e[k - j];
            }
            e[k] = acc / T::of_usize(k);
        }
        Self { c: e }
    }

    pub fn ln(self) -> Self {
        let a = &self.c;
        let mut l = [T::zero(); TAYLOR_LEN];
        l[0] = a[0].ln();
        for k in 1..TAYLOR_LEN {
            let mut acc = T::zero();
            for j in 1..k {
                acc = acc + T::of_usize(j) * l[j] * a[k - j];
            }
            l[k] = (a[k] - acc / T::of_usize(k)) / a[0];
        }
        Self { c: l }
    }

    pub fn sqrt(self) -> Self {
        let a = &self.c;
        let mut r = [T::zero(); TAYLOR_LEN];
        r[0] = a[0].sqrt();
        for k in 1..TAYLOR_LEN {
            let mut acc = T::zero();
            for j in 1..k {
                acc = acc + r[j] * r[k - j];
            }
            r[k] = (a[k] - acc) / (T::of(2.0) * r[0]);
        }
        Self { c: r }
    }

    pub fn sin_cos(self) -> (Self, Self) {
        let a = &self.c;
        let mut s = [T::zero(); TAYLOR_LEN];
        let mut c = [T::zero(); TAYLOR_LEN];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..TAYLOR_LEN {
            let mut acc_s = T::zero();
            let mut acc_c = T::zero();
            for j in 1..=k {
                let w = T::of_usize(j) * a[j];
                acc_s = acc_s + w * c[k - j];
                acc_c = acc_c + w * s[k - j];
            }
            s[k] = acc_s / T::of_usize(k);
            c[k] = -acc_c / T::of_usize(k);
        }
        (Self { c: s }, Self { c })
    }

    pub fn powi(self, n: i32) -> Self {
        let mut out = Self::constant(T::one());
        for _ in 0..n.unsigned_abs() {
            out = out * self;
        }
        if n < 0 {
            out.recip()
        } else {
            out
        }
    }
}

impl<T: Scalar> Add for Taylor<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a = *a + b;
        }
        self
    }
}

impl<T: Scalar> Sub for Taylor<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a = *a - b;
        }
        self
    }
}

impl<T: Scalar> Mul for Taylor<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut c = [T::zero(); TAYLOR_LEN];
        for k in 0..TAYLOR_LEN {
            let mut acc = T::zero();
            for i in 0..=k {
                acc = acc + self.c[i] * rhs.c[k - i];
            }
            c[k] = acc;
        }
        Self { c }
    }
}

impl<T: Scalar> Div for Taylor<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let mut q = [T::zero(); TAYLOR_LEN];
        for k in 0..TAYLOR_LEN {
            let mut acc = self.c[k];
            for i in 1..=k {
                acc = acc - rhs.c[i] * q[k - i];
            }
            q[k] = acc / rhs.c[0];
        }
        Self { c: q }
    }
}

impl<T: Scalar> Neg for Taylor<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Add<T> for Taylor<T> {
    type Output = Self;
    fn add(mut self, rhs: T) -> Self {
        self.c[0] = self.c[0] + rhs;
        self
    }
}

impl<T: Scalar> Sub<T> for Taylor<T> {
    type Output = Self;
    fn sub(mut self, rhs: T) -> Self {
        self.c[0] = self.c[0] - rhs;
        self
    }
}

impl<T: Scalar> Mul<T> for Taylor<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

impl<T: Scalar> Div<T> for Taylor<T> {
    type Output = Self;
    fn div(self, rhs: T) -> Self {
        self.scale(T::one() / rhs)
    }
}

/// Numbers jet formulas can be evaluated over: plain scalars and Taylor series.
pub trait JetNum<T: Scalar>:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<T, Output = Self>
    + Sub<T, Output = Self>
    + Mul<T, Output = Self>
    + Div<T, Output = Self>
{
    fn cst(v: T) -> Self;
    fn re(&self) -> T;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn recip(self) -> Self;

    /// True for plain scalars, false for series.
    fn is_plain() -> bool;

    /// Evaluates an opaque jet function at this number type.
    fn call(f: &dyn JetFunction<T>, args: &JetArgs<'_, Self>) -> Result<Self, JetError>;
}

impl<T: Scalar> JetNum<T> for T {
    fn cst(v: T) -> Self {
        v
    }
    fn re(&self) -> T {
        *self
    }
    fn exp(self) -> Self {
        num_traits::Float::exp(self)
    }
    fn ln(self) -> Self {
        num_traits::Float::ln(self)
    }
    fn sqrt(self) -> Self {
        num_traits::Float::sqrt(self)
    }
    fn sin(self) -> Self {
        num_traits::Float::sin(self)
    }
    fn cos(self) -> Self {
        num_traits::Float::cos(self)
    }
    fn powi(self, n: i32) -> Self {
        num_traits::Float::powi(self, n)
    }
    fn recip(self) -> Self {
        num_traits::Float::recip(self)
    }
    fn is_plain() -> bool {
        true
    }
    fn call(f: &dyn JetFunction<T>, args: &JetArgs<'_, Self>) -> Result<Self, JetError> {
        let jet = Jet {
            x: args.x,
            t: args.t,
            z: args.z.to_vec(),
            zt0: args.zt.first().copied(),
            zt1: args.zt.get(1).copied(),
        };
        f.eval(&jet)
    }
}

impl<T: Scalar> JetNum<T> for Taylor<T> {
    fn cst(v: T) -> Self {
        Taylor::constant(v)
    }
    fn re(&self) -> T {
        self.c[0]
    }
    fn exp(self) -> Self {
        Taylor::exp(self)
    }
    fn ln(self) -> Self {
        Taylor::ln(self)
    }
    fn sqrt(self) -> Self {
        Taylor::sqrt(self)
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn powi(self, n: i32) -> Self {
        Taylor::powi(self, n)
    }
    fn recip(self) -> Self {
        Taylor::recip(self)
    }
    fn is_plain() -> bool {
        false
    }
    fn call(f: &dyn JetFunction<T>, args: &JetArgs<'_, Self>) -> Result<Self, JetError> {
        f.eval_taylor(args).unwrap_or(Err(JetError::SeriesUnsupported))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn var(v: f64) -> Taylor<f64> {
        Taylor::variable(v)
    }

    #[test]
    fn product_rule_coefficients() {
        // (1 + s)^3 = 1 + 3s + 3s^2 + s^3
        let p = var(1.0).powi(3);
        assert_eq!(&p.c[..5], &[1.0, 3.0, 3.0, 1.0, 0.0]);
    }

    #[test]
    fn exp_matches_factorials() {
        let e = var(0.0).exp();
        for k in 0..TAYLOR_LEN {
            assert_relative_eq!(e.derivative(k), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Taylor::from_coeffs(&[2.0, -1.0, 0.5, 3.0]);
        let b = Taylor::from_coeffs(&[1.5, 0.25, -2.0]);
        let back = (a * b) / b;
        for k in 0..TAYLOR_LEN {
            assert_relative_eq!(back.c[k], a.c[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn ln_and_sqrt_invert_exp_and_square() {
        let a = Taylor::from_coeffs(&[1.7, 0.3, -0.2, 0.1]);
        let l = a.exp().ln();
        let r = (a * a).sqrt();
        for k in 0..TAYLOR_LEN {
            assert_relative_eq!(l.c[k], a.c[k], epsilon = 1e-12);
            assert_relative_eq!(r.c[k], a.c[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn sin_cos_derivatives() {
        let x = 0.7;
        let (s, c) = var(x).sin_cos();
        assert_relative_eq!(s.derivative(1), x.cos(), epsilon = 1e-14);
        assert_relative_eq!(s.derivative(2), -x.sin(), epsilon = 1e-14);
        assert_relative_eq!(c.derivative(3), x.sin(), epsilon = 1e-13);
        assert_relative_eq!(s.derivative(5), x.cos(), epsilon = 1e-12);
    }

    #[test]
    fn negative_power_is_reciprocal() {
        let a = var(2.0);
        let r = a.powi(-2);
        // d/ds (2+s)^-2 = -2 (2+s)^-3
        assert_relative_eq!(r.derivative(1), -2.0 / 8.0, epsilon = 1e-14);
    }
}
