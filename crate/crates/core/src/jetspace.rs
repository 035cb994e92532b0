//! Jet coordinates, total derivatives, prolongation and jet extraction.

use thiserror::Error;

use crate::pdesolver::SolutionField;
use crate::scalar::Scalar;
use crate::taylor::{JetNum, Taylor, TAYLOR_LEN};

/// Highest index `prolong` will produce.
pub const PROLONG_CAP: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jet order too low: need z_{needed}, have z_0..z_{}", .available.saturating_sub(1))]
    MissingJetOrder { needed: usize, available: usize },
    #[error("time jet missing: need z_{{{needed},t}}, have {available} entries")]
    MissingTimeJet { needed: usize, available: usize },
    #[error("prolongation order {0} exceeds cap {cap}", cap = PROLONG_CAP)]
    CapExceeded(usize),
    #[error("grid too small: {points} points, need {needed}")]
    GridTooSmall { points: usize, needed: usize },
    #[error("data not periodic: wrap-around jump {jump:e} vs interior {interior:e}")]
    NotPeriodic { jump: f64, interior: f64 },
    #[error("non-finite jet entry")]
    NonFinite,
    #[error("function evaluation failed: {0}")]
    FunctionEval(String),
    #[error("function has no series evaluation")]
    SeriesUnsupported,
}

/// Point in jet space.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    pub x: T,
    pub t: T,
    /// `z[i]` = i-th x-derivative of u.
    pub z: Vec<T>,
    pub zt0: Option<T>,
    pub zt1: Option<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn new(x: T, t: T, z: Vec<T>) -> Self {
        Self { x, t, z, zt0: None, zt1: None }
    }

    /// Jet at the origin of (x, t).
    pub fn from_z(z: &[T]) -> Self {
        Self::new(T::zero(), T::zero(), z.to_vec())
    }

    pub fn with_time(mut self, zt0: T, zt1: Option<T>) -> Self {
        self.zt0 = Some(zt0);
        self.zt1 = zt1;
        self
    }

    pub fn check_finite(&self) -> Result<(), JetError> {
        let all = [self.x, self.t]
            .into_iter()
            .chain(self.z.iter().copied())
            .chain(self.zt0)
            .chain(self.zt1);
        for v in all {
            if !v.is_finite() {
                return Err(JetError::NonFinite);
            }
        }
        Ok(())
    }

    pub fn zt(&self) -> Vec<T> {
        match (self.zt0, self.zt1) {
            (Some(a), Some(b)) => vec![a, b],
            (Some(a), None) => vec![a],
            _ => Vec::new(),
        }
    }

    pub fn z_at(&self, i: usize) -> Result<T, JetError> {
        self.z.get(i).copied().ok_or(JetError::MissingJetOrder {
            needed: i,
            available: self.z.len(),
        })
    }
}

/// Arguments of a jet formula evaluated over a number type `N`.
#[derive(Clone, Copy, Debug)]
pub struct JetArgs<'a, N> {
    pub x: N,
    pub t: N,
    pub z: &'a [N],
    /// `[z0_t, z1_t]` when supplied.
    pub zt: &'a [N],
}

impl<'a, N: Copy> JetArgs<'a, N> {
    pub fn z(&self, i: usize) -> Result<N, JetError> {
        self.z.get(i).copied().ok_or(JetError::MissingJetOrder {
            needed: i,
            available: self.z.len(),
        })
    }

    pub fn zt(&self, i: usize) -> Result<N, JetError> {
        self.zt.get(i).copied().ok_or(JetError::MissingTimeJet {
            needed: i,
            available: self.zt.len(),
        })
    }
}

/// Scalar function on jet space.
pub trait JetFunction<T: Scalar>: Send + Sync {
    /// Highest z-index read.
    fn order(&self) -> usize;

    /// Whether the function reads supplied time jets (z0_t, z1_t).
    fn uses_time_jets(&self) -> bool {
        false
    }

    fn eval(&self, jet: &Jet<T>) -> Result<T, JetError>;

    /// Evaluation over Taylor-series arguments; `None` selects finite differences.
    fn eval_taylor(&self, _args: &JetArgs<'_, Taylor<T>>) -> Option<Result<Taylor<T>, JetError>> {
        None
    }
}

/// Jet formula written once for every [`JetNum`]; gets a [`JetFunction`] impl for free.
pub trait JetExpr<T: Scalar>: Send + Sync {
    fn order(&self) -> usize;

    fn uses_time_jets(&self) -> bool {
        false
    }

    fn eval_with<N: JetNum<T>>(&self, args: &JetArgs<'_, N>) -> Result<N, JetError>;
}

impl<T: Scalar, E: JetExpr<T>> JetFunction<T> for E {
    fn order(&self) -> usize {
        JetExpr::order(self)
    }

    fn uses_time_jets(&self) -> bool {
        JetExpr::uses_time_jets(self)
    }

    fn eval(&self, jet: &Jet<T>) -> Result<T, JetError> {
        let zt = jet.zt();
        self.eval_with(&JetArgs { x: jet.x, t: jet.t, z: &jet.z, zt: &zt })
    }

    fn eval_taylor(&self, args: &JetArgs<'_, Taylor<T>>) -> Option<Result<Taylor<T>, JetError>> {
        match self.eval_with(args) {
            Err(JetError::SeriesUnsupported) => None,
            other => Some(other),
        }
    }
}

/// Closure-backed jet function; derivatives always by finite differences.
pub struct ClosureJetFn<F> {
    order: usize,
    f: F,
}

impl<F> ClosureJetFn<F> {
    pub fn new(order: usize, f: F) -> Self {
        Self { order, f }
    }
}

impl<T: Scalar, F> JetExpr<T> for ClosureJetFn<F>
where
    F: Fn(&Jet<T>) -> T + Send + Sync,
{
    fn order(&self) -> usize {
        self.order
    }

    fn eval_with<N: JetNum<T>>(&self, args: &JetArgs<'_, N>) -> Result<N, JetError> {
        if !N::is_plain() {
            return Err(JetError::SeriesUnsupported);
        }
        if args.z.len() <= self.order {
            return Err(JetError::MissingJetOrder { needed: self.order, available: args.z.len() });
        }
        let mut jet = Jet::new(args.x.re(), args.t.re(), args.z.iter().map(|v| v.re()).collect());
        jet.zt0 = args.zt.first().map(|v| v.re());
        jet.zt1 = args.zt.get(1).map(|v| v.re());
        Ok(N::cst((self.f)(&jet)))
    }
}

/// Sparse polynomial in z_0, z_1, ...
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JetPoly<T> {
    /// `(coefficient, exponents)` with `exponents[i]` the power of z_i.
    pub terms: Vec<(T, Vec<u32>)>,
}

impl<T: Scalar> JetPoly<T> {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    /// Adds `c * prod z_i^k` for each `(i, k)` in `powers`.
    pub fn term(mut self, c: T, powers: &[(usize, u32)]) -> Self {
        let len = powers.iter().map(|p| p.0 + 1).max().unwrap_or(0);
        let mut e = vec![0u32; len];
        for &(i, k) in powers {
            e[i] += k;
        }
        self.terms.push((c, e));
        self
    }

    /// Coefficient of the monomial (summing duplicates).
    pub fn coeff(&self, powers: &[(usize, u32)]) -> T {
        let target = JetPoly::<T>::new().term(T::one(), powers).terms.remove(0).1;
        self.terms
            .iter()
            .filter(|(_, e)| trim(e) == trim(&target))
            .fold(T::zero(), |acc, (c, _)| acc + *c)
    }

    /// Distinct monomials with nonzero total coefficient.
    pub fn monomials(&self) -> Vec<(Vec<u32>, T)> {
        let mut out: Vec<(Vec<u32>, T)> = Vec::new();
        for (c, e) in &self.terms {
            let key = trim(e).to_vec();
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some(slot) => slot.1 = slot.1 + *c,
                None => out.push((key, *c)),
            }
        }
        out.retain(|(_, c)| *c != T::zero());
        out
    }
}

fn trim(e: &[u32]) -> &[u32] {
    let mut n = e.len();
    while n > 0 && e[n - 1] == 0 {
        n -= 1;
    }
    &e[..n]
}

impl<T: Scalar> JetExpr<T> for JetPoly<T> {
    fn order(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, e)| trim(e).len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    fn eval_with<N: JetNum<T>>(&self, args: &JetArgs<'_, N>) -> Result<N, JetError> {
        let mut acc = N::cst(T::zero());
        for (c, e) in &self.terms {
            let mut m = N::cst(*c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    m = m * args.z(i)?.powi(k as i32);
                }
            }
            acc = acc + m;
        }
        Ok(acc)
    }
}

/// Coordinate of jet space used for partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetVar {
    X,
    T,
    Z(usize),
    Zt(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DerivMode {
    /// Taylor-series evaluation when the function supports it, else finite differences.
    #[default]
    Analytic,
    FiniteDifference,
}

/// Finite-difference step: `max(rel * |v|, floor)`.
#[derive(Clone, Copy, Debug)]
pub struct FdStep {
    pub rel: f64,
    pub floor: f64,
}

impl Default for FdStep {
    fn default() -> Self {
        Self { rel: 1e-5, floor: 1e-8 }
    }
}

impl FdStep {
    pub fn at<T: Scalar>(&self, v: T) -> T {
        (T::of(self.rel) * v.abs()).max(T::of(self.floor))
    }
}

fn var_value<T: Scalar>(jet: &Jet<T>, v: JetVar) -> Result<T, JetError> {
    match v {
        JetVar::X => Ok(jet.x),
        JetVar::T => Ok(jet.t),
        JetVar::Z(i) => jet.z_at(i),
        JetVar::Zt(0) => jet.zt0.ok_or(JetError::MissingTimeJet { needed: 0, available: 0 }),
        JetVar::Zt(1) => jet.zt1.ok_or(JetError::MissingTimeJet { needed: 1, available: jet.zt().len() }),
        JetVar::Zt(i) => Err(JetError::MissingTimeJet { needed: i, available: jet.zt().len() }),
    }
}

fn shifted<T: Scalar>(jet: &Jet<T>, v: JetVar, d: T) -> Jet<T> {
    let mut j = jet.clone();
    match v {
        JetVar::X => j.x = j.x + d,
        JetVar::T => j.t = j.t + d,
        JetVar::Z(i) => j.z[i] = j.z[i] + d,
        JetVar::Zt(0) => j.zt0 = j.zt0.map(|a| a + d),
        JetVar::Zt(_) => j.zt1 = j.zt1.map(|a| a + d),
    }
    j
}

/// Evaluates `f` on the Taylor curve `jet + s * dir` (direction given per coordinate).
fn eval_directional<T: Scalar>(
    f: &dyn JetFunction<T>,
    jet: &Jet<T>,
    dirs: &[(JetVar, T)],
) -> Option<Result<Taylor<T>, JetError>> {
    let mut x = Taylor::constant(jet.x);
    let mut t = Taylor::constant(jet.t);
    let mut z: Vec<Taylor<T>> = jet.z.iter().map(|&v| Taylor::constant(v)).collect();
    let mut zt: Vec<Taylor<T>> = jet.zt().into_iter().map(Taylor::constant).collect();
    for &(v, d) in dirs {
        let slot = match v {
            JetVar::X => &mut x,
            JetVar::T => &mut t,
            JetVar::Z(i) => match z.get_mut(i) {
                Some(s) => s,
                None => return Some(Err(JetError::MissingJetOrder { needed: i, available: jet.z.len() })),
            },
            JetVar::Zt(i) => match zt.get_mut(i) {
                Some(s) => s,
                None => return Some(Err(JetError::MissingTimeJet { needed: i, available: jet.zt().len() })),
            },
        };
        slot.c[1] = slot.c[1] + d;
    }
    f.eval_taylor(&JetArgs { x, t, z: &z, zt: &zt })
}

/// First partial derivative of `f` with respect to one jet coordinate.
pub fn partial<T: Scalar>(
    f: &dyn JetFunction<T>,
    jet: &Jet<T>,
    v: JetVar,
    mode: DerivMode,
) -> Result<T, JetError> {
    var_value(jet, v)?;
    if mode == DerivMode::Analytic {
        if let Some(r) = eval_directional(f, jet, &[(v, T::one())]) {
            return Ok(r?.c[1]);
        }
    }
    let h = FdStep::default().at(var_value(jet, v)?);
    let fp = f.eval(&shifted(jet, v, h))?;
    let fm = f.eval(&shifted(jet, v, -h))?;
    Ok((fp - fm) / (h + h))
}

/// Second partial derivative `d^2 f / (da db)`.
pub fn partial2<T: Scalar>(
    f: &dyn JetFunction<T>,
    jet: &Jet<T>,
    a: JetVar,
    b: JetVar,
    mode: DerivMode,
) -> Result<T, JetError> {
    let va = var_value(jet, a)?;
    let vb = var_value(jet, b)?;
    let two = T::of(2.0);
    if mode == DerivMode::Analytic {
        if a == b {
            if let Some(r) = eval_directional(f, jet, &[(a, T::one())]) {
                return Ok(r?.c[2] * two);
            }
        } else if let Some(r) = eval_directional(f, jet, &[(a, T::one()), (b, T::one())]) {
            // polarization: g'' = f_aa + 2 f_ab + f_bb
            let mixed = r?.c[2] * two;
            let faa = partial2(f, jet, a, a, mode)?;
            let fbb = partial2(f, jet, b, b, mode)?;
            return Ok((mixed - faa - fbb) / two);
        }
    }
    let step = |v: T| T::of(1e-4) * v.abs().max(T::one());
    let (ha, hb) = (step(va), step(vb));
    if a == b {
        let fp = f.eval(&shifted(jet, a, ha))?;
        let f0 = f.eval(jet)?;
        let fm = f.eval(&shifted(jet, a, -ha))?;
        return Ok((fp - f0 - f0 + fm) / (ha * ha));
    }
    let e = |da: T, db: T| f.eval(&shifted(&shifted(jet, a, da), b, db));
    let fpp = e(ha, hb)?;
    let fpm = e(ha, -hb)?;
    let fmp = e(-ha, hb)?;
    let fmm = e(-ha, -hb)?;
    Ok((fpp - fpm - fmp + fmm) / (T::of(4.0) * ha * hb))
}

/// Jet moved a distance `s` along the x-direction using its own Taylor data,
/// exact through the k-th power of s when z carries `k` extra entries.
fn jet_shift_x<T: Scalar>(jet: &Jet<T>, order: usize, k: usize, s: T) -> Jet<T> {
    let mut z = Vec::with_capacity(order + 1);
    for i in 0..=order {
        let mut acc = T::zero();
        let mut p = T::one();
        for j in 0..=k {
            if j > 0 {
                p = p * s / T::of_usize(j);
            }
            acc = acc + jet.z[i + j] * p;
        }
        z.push(acc);
    }
    let mut out = Jet::new(jet.x + s, jet.t, z);
    out.zt0 = match (jet.zt0, jet.zt1) {
        (Some(a), Some(b)) => Some(a + b * s),
        (a, _) => a,
    };
    out.zt1 = jet.zt1;
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// k-th total x-derivative `D_x^k f`.
pub fn total_derivative_x_k<T: Scalar>(
    f: &dyn JetFunction<T>,
    jet: &Jet<T>,
    k: usize,
    mode: DerivMode,
) -> Result<T, JetError> {
    if k == 0 {
        return f.eval(jet);
    }
    let order = f.order();
    let needed = order + k;
    if jet.z.len() <= needed {
        return Err(JetError::MissingJetOrder { needed, available: jet.z.len() });
    }
    if f.uses_time_jets() && (k > 1 || jet.zt1.is_none()) {
        return Err(JetError::MissingTimeJet { needed: k, available: jet.zt().len() });
    }
    if mode == DerivMode::Analytic && k < TAYLOR_LEN {
        let inv_fact = |j: usize| T::one() / T::of((1..=j).product::<usize>() as f64);
        let z: Vec<Taylor<T>> = (0..=order)
            .map(|i| {
                let c: Vec<T> = (0..=k).map(|j| jet.z[i + j] * inv_fact(j)).collect();
                Taylor::from_coeffs(&c)
            })
            .collect();
        let zt: Vec<Taylor<T>> = match (jet.zt0, jet.zt1) {
            (Some(a), Some(b)) => vec![Taylor::from_coeffs(&[a, b]), Taylor::constant(b)],
            (Some(a), None) => vec![Taylor::constant(a)],
            _ => Vec::new(),
        };
        let args = JetArgs {
            x: Taylor::variable(jet.x),
            t: Taylor::constant(jet.t),
            z: &z,
            zt: &zt,
        };
        if let Some(r) = f.eval_taylor(&args) {
            return Ok(r?.derivative(k));
        }
    }
    // central difference of order k on the shifted curve
    let h = T::of([1e-5, 1e-5, 1e-4, 1e-3, 2e-3, 4e-3, 6e-3, 1e-2][k.min(7)]);
    let mut acc = T::zero();
    for j in 0..=k {
        let s = (T::of_usize(j) - T::of(k as f64 / 2.0)) * h;
        let w = T::of(binomial(k, j)) * if (k - j) % 2 == 0 { T::one() } else { -T::one() };
        acc = acc + w * f.eval(&jet_shift_x(jet, order, k, s))?;
    }
    Ok(acc / h.powi(k as i32))
}

/// `D_x f = f_x + sum_i f_{z_i} z_{i+1}`.
pub fn total_derivative_x<T: Scalar>(
    f: &dyn JetFunction<T>,
    jet: &Jet<T>,
    mode: DerivMode,
) -> Result<T, JetError> {
    total_derivative_x_k(f, jet, 1, mode)
}

/// `D_t f = f_t + sum_i f_{z_i} z_{i,t}` with `zt[i] = z_{i,t}`.
pub fn total_derivative_t<T: Scalar>(
    f: &dyn JetFunction<T>,
    jet: &Jet<T>,
    zt: &[T],
    mode: DerivMode,
) -> Result<T, JetError> {
    let order = f.order();
    if zt.len() <= order {
        return Err(JetError::MissingTimeJet { needed: order, available: zt.len() });
    }
    if jet.z.len() <= order {
        return Err(JetError::MissingJetOrder { needed: order, available: jet.z.len() });
    }
    let mut dirs: Vec<(JetVar, T)> = vec![(JetVar::T, T::one())];
    dirs.extend((0..=order).map(|i| (JetVar::Z(i), zt[i])));
    if mode == DerivMode::Analytic {
        if let Some(r) = eval_directional(f, jet, &dirs) {
            return Ok(r?.c[1]);
        }
    }
    let scale = zt[..=order].iter().fold(T::one(), |m, v| m.max(v.abs()));
    let h = T::of(1e-5) / scale;
    let mv = |s: T| {
        let mut j = jet.clone();
        j.t = j.t + s;
        for i in 0..=order {
            j.z[i] = j.z[i] + zt[i] * s;
        }
        j
    };
    Ok((f.eval(&mv(h))? - f.eval(&mv(-h))?) / (h + h))
}

/// Time derivatives `z_{i,t}`, i = 0..=up_to, of a solution of `z0_t - z2_t = F`.
pub fn prolong<T: Scalar>(
    rhs: &dyn JetFunction<T>,
    jet: &Jet<T>,
    z0t: T,
    z1t: T,
    up_to: usize,
    mode: DerivMode,
) -> Result<Vec<T>, JetError> {
    if up_to > PROLONG_CAP {
        return Err(JetError::CapExceeded(up_to));
    }
    let mut dxf = Vec::new();
    for k in 0..up_to.saturating_sub(1) {
        dxf.push(total_derivative_x_k(rhs, jet, k, mode)?);
    }
    let mut out = Vec::with_capacity(up_to + 1);
    for i in 0..=up_to {
        let q = i / 2;
        let (base, parity) = if i % 2 == 0 { (z0t, 0) } else { (z1t, 1) };
        let mut v = base;
        for j in 0..q {
            v = v - dxf[2 * j + parity];
        }
        out.push(v);
    }
    Ok(out)
}

/// Finite-difference stencil accuracy for [`extract_jets`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil {
    Order2,
    Order4,
}

/// Jets on the (x, t) lattice of a solution field.
#[derive(Clone, Debug)]
pub struct JetGrid<T> {
    pub nx: usize,
    pub nt: usize,
    pub xs: Vec<T>,
    pub times: Vec<T>,
    /// Row-major by time: `jets[j * nx + i]`.
    pub jets: Vec<Jet<T>>,
    /// Rows whose time derivatives are one-sided.
    pub boundary_rows: Vec<bool>,
}

impl<T: Scalar> JetGrid<T> {
    pub fn at(&self, i: usize, j: usize) -> &Jet<T> {
        &self.jets[j * self.nx + i]
    }
}

fn stencil_weights(order: usize, stencil: Stencil) -> (Vec<f64>, f64) {
    // weights for offsets -r..=r, and the denominator multiplier
    match (stencil, order) {
        (_, 0) => (vec![1.0], 1.0),
        (Stencil::Order2, 1) => (vec![-1.0, 0.0, 1.0], 2.0),
        (Stencil::Order2, 2) => (vec![1.0, -2.0, 1.0], 1.0),
        (Stencil::Order2, 3) => (vec![-1.0, 2.0, 0.0, -2.0, 1.0], 2.0),
        (Stencil::Order2, _) => (vec![1.0, -4.0, 6.0, -4.0, 1.0], 1.0),
        (Stencil::Order4, 1) => (vec![1.0, -8.0, 0.0, 8.0, -1.0], 12.0),
        (Stencil::Order4, 2) => (vec![-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
        (Stencil::Order4, 3) => (vec![1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0], 8.0),
        (Stencil::Order4, _) => (vec![-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0], 6.0),
    }
}

/// k-th derivative of periodic samples by central differences.
pub fn periodic_fd<T: Scalar>(u: &[T], dx: T, k: usize, stencil: Stencil) -> Vec<T> {
    let n = u.len();
    let (w, den) = stencil_weights(k, stencil);
    let r = (w.len() / 2) as isize;
    let scale = T::one() / (T::of(den) * dx.powi(k as i32));
    (0..n)
        .map(|i| {
            // weights sum to zero for k >= 1, so differences from the centre
            // keep constants exact
            if k == 0 {
                return u[i];
            }
            let mut acc = T::zero();
            for (o, wk) in w.iter().enumerate() {
                if *wk != 0.0 {
                    let idx = (i as isize + o as isize - r).rem_euclid(n as isize) as usize;
                    acc = acc + T::of(*wk) * (u[idx] - u[i]);
                }
            }
            acc * scale
        })
        .collect()
}

/// Rejects data whose wrap-around step is far larger than its interior steps.
pub fn check_periodic<T: Scalar>(u: &[T]) -> Result<(), JetError> {
    let n = u.len();
    if n < 3 {
        return Ok(());
    }
    let interior = u.windows(2).map(|w| (w[1] - w[0]).abs()).fold(T::zero(), T::max);
    let jump = (u[0] - u[n - 1]).abs();
    let scale = u.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if jump > T::of(4.0) * interior + T::of(1e-12) * scale {
        return Err(JetError::NotPeriodic { jump: jump.to_f64_lossy(), interior: interior.to_f64_lossy() });
    }
    Ok(())
}

/// Derivative at `at` of the quadratic through three samples.
fn lagrange3_deriv<T: Scalar>(ts: [T; 3], fs: [T; 3], at: T) -> T {
    let mut acc = T::zero();
    for j in 0..3 {
        let (a, b) = ((j + 1) % 3, (j + 2) % 3);
        let den = (ts[j] - ts[a]) * (ts[j] - ts[b]);
        acc = acc + fs[j] * ((at - ts[a]) + (at - ts[b])) / den;
    }
    acc
}

fn time_derivative<T: Scalar>(times: &[T], rows: &[Vec<T>], j: usize) -> Vec<T> {
    let nt = times.len();
    let n = rows[0].len();
    if nt == 2 {
        let dt = times[1] - times[0];
        return (0..n).map(|i| (rows[1][i] - rows[0][i]) / dt).collect();
    }
    let base = if j == 0 { 0 } else if j == nt - 1 { nt - 3 } else { j - 1 };
    let ts = [times[base], times[base + 1], times[base + 2]];
    (0..n)
        .map(|i| {
            let fs = [rows[base][i], rows[base + 1][i], rows[base + 2][i]];
            lagrange3_deriv(ts, fs, times[j])
        })
        .collect()
}

/// Jets z_0..z_order at every lattice point of a periodic solution field.
pub fn extract_jets<T: Scalar>(
    u: &SolutionField<T>,
    order: usize,
    stencil: Stencil,
) -> Result<JetGrid<T>, JetError> {
    let n = u.grid.n;
    let needed = 2 * order + 1;
    if n < needed.max(if stencil == Stencil::Order4 { 7 } else { 5 }) || order > 4 {
        return Err(JetError::GridTooSmall { points: n, needed });
    }
    for row in &u.values {
        check_periodic(row)?;
    }
    let dx = u.grid.dx();
    let nt = u.times.len();
    let derivs: Vec<Vec<Vec<T>>> = u
        .values
        .iter()
        .map(|row| (0..=order.max(1)).map(|k| periodic_fd(row, dx, k, stencil)).collect())
        .collect();
    let (zt0, zt1) = if nt >= 2 {
        let z0_rows: Vec<Vec<T>> = derivs.iter().map(|d| d[0].clone()).collect();
        let z1_rows: Vec<Vec<T>> = derivs.iter().map(|d| d[1].clone()).collect();
        (
            Some((0..nt).map(|j| time_derivative(&u.times, &z0_rows, j)).collect::<Vec<_>>()),
            Some((0..nt).map(|j| time_derivative(&u.times, &z1_rows, j)).collect::<Vec<_>>()),
        )
    } else {
        (None, None)
    };
    let xs: Vec<T> = (0..n).map(|i| T::of_usize(i) * dx).collect();
    let mut jets = Vec::with_capacity(n * nt);
    for j in 0..nt {
        for i in 0..n {
            let z: Vec<T> = (0..=order).map(|k| derivs[j][k][i]).collect();
            let mut jet = Jet::new(xs[i], u.times[j], z);
            if let (Some(a), Some(b)) = (&zt0, &zt1) {
                jet = jet.with_time(a[j][i], Some(b[j][i]));
            }
            jets.push(jet);
        }
    }
    let boundary_rows = (0..nt).map(|j| nt > 1 && (j == 0 || j == nt - 1)).collect();
    Ok(JetGrid { nx: n, nt, xs, times: u.times.clone(), jets, boundary_rows })
}
