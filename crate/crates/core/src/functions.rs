//! Built-in plugin functions h(s), phi(z0) and psi(z0, z1).
//!
//! Names accepted by [`UnaryFn::parse`] / [`BivariateFn::parse`]:
//! `identity`, `exp`, `exp:c,r` (c e^{r s}), `const:c`, `affine:a,b` (a s + b),
//! `poly2:c0,c1,c2`, `poly:c0,c1,...`. For psi, `poly2` also takes six
//! coefficients `c00,c10,c01,c20,c11,c02` of the quadratic in (z0, z1).

use std::fmt;

use crate::scalar::Scalar;
use crate::taylor::JetNum;

#[derive(Clone, Debug, PartialEq)]
pub enum UnaryFn<T> {
    /// `c[0] + c[1] s + c[2] s^2 + ...`
    Poly(Vec<T>),
    /// `scale * exp(rate * s)`
    Exp { scale: T, rate: T },
}

impl<T: Scalar> UnaryFn<T> {
    pub fn identity() -> Self {
        UnaryFn::Poly(vec![T::zero(), T::one()])
    }

    pub fn exp() -> Self {
        UnaryFn::Exp { scale: T::one(), rate: T::one() }
    }

    pub fn affine(a: T, b: T) -> Self {
        UnaryFn::Poly(vec![b, a])
    }

    pub fn eval_with<N: JetNum<T>>(&self, s: N) -> N {
        match self {
            UnaryFn::Poly(c) => {
                // Horner
                let mut acc = N::cst(T::zero());
                for &ci in c.iter().rev() {
                    acc = acc * s + ci;
                }
                acc
            }
            UnaryFn::Exp { scale, rate } => (s * *rate).exp() * *scale,
        }
    }

    pub fn eval(&self, s: T) -> T {
        self.eval_with(s)
    }

    pub fn derivative(&self) -> Self {
        match self {
            UnaryFn::Poly(c) => {
                let d: Vec<T> = c.iter().enumerate().skip(1).map(|(i, &ci)| ci * T::of_usize(i)).collect();
                UnaryFn::Poly(if d.is_empty() { vec![T::zero()] } else { d })
            }
            UnaryFn::Exp { scale, rate } => UnaryFn::Exp { scale: *scale * *rate, rate: *rate },
        }
    }

    /// Coefficients `(a, b)` when the function is `a s + b`.
    pub fn as_affine(&self) -> Option<(T, T)> {
        match self {
            UnaryFn::Poly(c) if c.len() <= 2 || c[2..].iter().all(|v| *v == T::zero()) => {
                Some((c.get(1).copied().unwrap_or(T::zero()), c.first().copied().unwrap_or(T::zero())))
            }
            _ => None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let (name, args) = split_name(text)?;
        match (name, args.len()) {
            ("identity", 0) => Ok(Self::identity()),
            ("exp", 0) => Ok(Self::exp()),
            ("exp", 2) => Ok(UnaryFn::Exp { scale: args[0], rate: args[1] }),
            ("const", 1) => Ok(UnaryFn::Poly(vec![args[0]])),
            ("affine", 2) => Ok(Self::affine(args[0], args[1])),
            ("poly2", 3) | ("poly", _) if !args.is_empty() => Ok(UnaryFn::Poly(args)),
            _ => Err(format!("unknown function '{text}'")),
        }
    }
}

impl<T: Scalar> fmt::Display for UnaryFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnaryFn::Poly(c) if *c == Self::identity().coeffs() => write!(f, "identity"),
            UnaryFn::Poly(c) => write!(f, "poly:{}", join(c)),
            UnaryFn::Exp { scale, rate } if *scale == T::one() && *rate == T::one() => write!(f, "exp"),
            UnaryFn::Exp { scale, rate } => write!(f, "exp:{scale},{rate}"),
        }
    }
}

impl<T: Scalar> UnaryFn<T> {
    fn coeffs(&self) -> Vec<T> {
        match self {
            UnaryFn::Poly(c) => c.clone(),
            UnaryFn::Exp { .. } => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BivariateFn<T> {
    /// `[c00, c10, c01, c20, c11, c02]`: c00 + c10 z0 + c01 z1 + c20 z0^2 + c11 z0 z1 + c02 z1^2.
    Poly2([T; 6]),
    /// Function of z0 alone.
    OfZ0(UnaryFn<T>),
}

impl<T: Scalar> BivariateFn<T> {
    /// `psi = z0`.
    pub fn identity() -> Self {
        BivariateFn::Poly2([T::zero(), T::one(), T::zero(), T::zero(), T::zero(), T::zero()])
    }

    pub fn eval_with<N: JetNum<T>>(&self, z0: N, z1: N) -> N {
        match self {
            BivariateFn::Poly2(c) => {
                let lin = z0 * c[1] + z1 * c[2] + c[0];
                lin + z0 * z0 * c[3] + z0 * z1 * c[4] + z1 * z1 * c[5]
            }
            BivariateFn::OfZ0(u) => u.eval_with(z0),
        }
    }

    pub fn eval(&self, z0: T, z1: T) -> T {
        self.eval_with(z0, z1)
    }

    pub fn d_z0(&self) -> Self {
        match self {
            BivariateFn::Poly2(c) => {
                let two = T::of(2.0);
                BivariateFn::Poly2([c[1], two * c[3], c[4], T::zero(), T::zero(), T::zero()])
            }
            BivariateFn::OfZ0(u) => BivariateFn::OfZ0(u.derivative()),
        }
    }

    pub fn d_z1(&self) -> Self {
        match self {
            BivariateFn::Poly2(c) => {
                let two = T::of(2.0);
                BivariateFn::Poly2([c[2], c[4], two * c[5], T::zero(), T::zero(), T::zero()])
            }
            BivariateFn::OfZ0(_) => BivariateFn::Poly2([T::zero(); 6]),
        }
    }

    /// Quadratic coefficients when the function is a polynomial of degree <= 2.
    pub fn as_poly2(&self) -> Option<[T; 6]> {
        match self {
            BivariateFn::Poly2(c) => Some(*c),
            BivariateFn::OfZ0(UnaryFn::Poly(c)) if c.len() <= 3 => {
                let g = |i: usize| c.get(i).copied().unwrap_or(T::zero());
                Some([g(0), g(1), T::zero(), g(2), T::zero(), T::zero()])
            }
            _ => None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let (name, args) = split_name(text)?;
        match (name, args.len()) {
            ("identity", 0) => Ok(Self::identity()),
            ("poly2", 6) => Ok(BivariateFn::Poly2([args[0], args[1], args[2], args[3], args[4], args[5]])),
            _ => UnaryFn::parse(text).map(BivariateFn::OfZ0),
        }
    }
}

impl<T: Scalar> fmt::Display for BivariateFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BivariateFn::Poly2(_) if *self == Self::identity() => write!(f, "identity"),
            BivariateFn::Poly2(c) => write!(f, "poly2:{}", join(c)),
            BivariateFn::OfZ0(u) => write!(f, "{u}"),
        }
    }
}

fn join<T: Scalar>(c: &[T]) -> String {
    c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn split_name<T: Scalar>(text: &str) -> Result<(&str, Vec<T>), String> {
    let text = text.trim();
    let (name, rest) = match text.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (text, None),
    };
    let args = match rest {
        None => Vec::new(),
        Some(r) => r
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map(T::of)
                    .map_err(|_| format!("bad number '{}' in '{text}'", a.trim()))
            })
            .collect::<Result<_, _>>()?,
    };
    Ok((name, args))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taylor::Taylor;

    #[test]
    fn derivatives_are_closed_form() {
        let p = UnaryFn::<f64>::parse("poly2:1,2,3").unwrap();
        assert_eq!(p.derivative().eval(2.0), 2.0 + 6.0 * 2.0);
        let e = UnaryFn::<f64>::parse("exp:2,3").unwrap();
        assert!((e.derivative().derivative().eval(0.5) - 18.0 * 1.5f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn series_matches_derivative() {
        let e = UnaryFn::<f64>::parse("exp:2,3").unwrap();
        let s = e.eval_with(Taylor::variable(0.25));
        assert!((s.derivative(1) - e.derivative().eval(0.25)).abs() < 1e-13);
    }

    #[test]
    fn psi_partials() {
        let psi = BivariateFn::<f64>::parse("poly2:1,2,3,4,5,6").unwrap();
        let (z0, z1) = (0.5, -1.5);
        assert_eq!(psi.d_z0().eval(z0, z1), 2.0 + 8.0 * z0 + 5.0 * z1);
        assert_eq!(psi.d_z1().eval(z0, z1), 3.0 + 5.0 * z0 + 12.0 * z1);
        assert_eq!(BivariateFn::<f64>::identity().eval(2.0, 9.0), 2.0);
    }

    #[test]
    fn parse_display_round_trip() {
        for name in ["identity", "exp", "exp:2,0.5", "poly:1,0,3", "affine:2,1"] {
            let f = UnaryFn::<f64>::parse(name).unwrap();
            assert_eq!(UnaryFn::<f64>::parse(&f.to_string()).unwrap(), f);
        }
        for name in ["identity", "poly2:0,0,0,1,-2,1", "exp"] {
            let f = BivariateFn::<f64>::parse(name).unwrap();
            assert_eq!(BivariateFn::<f64>::parse(&f.to_string()).unwrap(), f);
        }
        assert!(UnaryFn::<f64>::parse("sinh").is_err());
        assert!(UnaryFn::<f64>::parse("affine:1,x").is_err());
    }
}
