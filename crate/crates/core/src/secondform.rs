//! Second fundamental forms `(a, b, c)`: Gauss and Codazzi residuals, the
//! existence verdict per branch, and the universal coefficients (closed forms
//! on strips, ODE curves otherwise).

use std::fmt;

use thiserror::Error;

use crate::families::{FamilyError, FamilySpec, FrameCoeffs, Sign};
use crate::lattice::{FrameField, Lattice, LatticeResidual, SffField};
use crate::ode::{dopri5, OdeError, OdeOptions, OdeSolution, Stop};
use crate::scalar::Scalar;

/// Distance kept from strip ends and from `L = 0`.
pub const STRIP_MARGIN: f64 = 1e-6;

/// `ω13 = a ω1 + b ω2`, `ω23 = b ω1 + c ω2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sff<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Scalar> Sff<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Self { a, b, c }
    }

    /// `ac − b² + 1`.
    pub fn gauss_residual(&self) -> T {
        self.a * self.c - self.b * self.b + T::one()
    }
}

pub fn gauss_check<T: Scalar>(s: &Sff<T>) -> T {
    s.gauss_residual()
}

pub fn deltas<T: Scalar>(f: &FrameCoeffs<T>) -> (T, T, T) {
    f.deltas()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SffError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("strip coordinate {coord} outside ({lo}, {hi}) with margin")]
    OutsideStrip { coord: f64, lo: f64, hi: f64 },
    #[error("L = {0:e} too close to zero")]
    DegenerateL(f64),
    #[error("bad initial condition: {0}")]
    BadInitialCondition(String),
    #[error("b' coefficient vanishes; last valid point {last_valid}")]
    SingularCoefficient { last_valid: f64 },
    #[error("discriminant collapsed; last valid point {last_valid}")]
    DeltaCollapse { last_valid: f64 },
    #[error("form is singular at u = {u}")]
    SingularForm { u: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// Interval of `ξ` on which `σ e^{2ξ} − β² e^{4ξ} − 1 > 0`.
pub fn strip_bounds<T: Scalar>(sigma: T, beta: T) -> Result<(T, T), SffError> {
    let four = T::of(4.0);
    if !(sigma > T::zero()) || !(sigma * sigma > four * beta * beta) {
        return Err(SffError::BadParams("need sigma > 0 and sigma^2 > 4 beta^2".into()));
    }
    let half = T::of(0.5);
    if beta == T::zero() {
        return Ok((-half * sigma.ln(), T::infinity()));
    }
    let r = (sigma * sigma - four * beta * beta).sqrt();
    let b2 = T::of(2.0) * beta * beta;
    Ok((half * ((sigma - r) / b2).ln(), half * ((sigma + r) / b2).ln()))
}

/// Closed form in a linear coordinate `S` with `ξ = s·rate·S`:
/// `a = s√L`, `b = bsign·β e^{2ξ}`, `c = a − s a_S / rate`.
fn exp_strip_form<T: Scalar>(sigma: T, beta: T, sign: Sign, rate: T, bsign: T, coord: T) -> Result<Sff<T>, SffError> {
    let (lo, hi) = strip_bounds(sigma, beta)?;
    let s = sign.value::<T>();
    let xi = s * rate * coord;
    let eps = T::of(STRIP_MARGIN);
    if !(xi > lo + eps && xi < hi - eps) {
        return Err(SffError::OutsideStrip { coord: xi.to_f64_lossy(), lo: lo.to_f64_lossy(), hi: hi.to_f64_lossy() });
    }
    let e = (xi + xi).exp();
    let b2e2 = beta * beta * e * e;
    let l = sigma * e - b2e2 - T::one();
    if l <= eps {
        return Err(SffError::DegenerateL(l.to_f64_lossy()));
    }
    let root = l.sqrt();
    let l_s = T::of(2.0) * s * rate * (sigma * e - T::of(2.0) * b2e2);
    let a = s * root;
    let a_s = s * l_s / (T::of(2.0) * root);
    Ok(Sff::new(a, bsign * beta * e, a - s * a_s / rate))
}

fn check_rate<T: Scalar>(rate: T, name: &str) -> Result<(), SffError> {
    if rate == T::zero() || !rate.is_finite() {
        return Err(SffError::BadParams(format!("{name} must be nonzero")));
    }
    Ok(())
}

/// Strip `(lo, hi)` in the variable itself, from bounds in `ξ = k·var`.
fn var_interval<T: Scalar>(k: T, lo: T, hi: T) -> (T, T) {
    if k > T::zero() {
        (lo / k, hi / k)
    } else {
        (hi / k, lo / k)
    }
}

/// Universal form depending on x only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop1i<T> {
    pub eta: T,
    pub sigma: T,
    pub beta: T,
    pub sign: Sign,
}

impl<T: Scalar> Prop1i<T> {
    /// Strip in `ξ = ±ηx`.
    pub fn strip(&self) -> Result<(T, T), SffError> {
        strip_bounds(self.sigma, self.beta)
    }

    /// Strip expressed as an x-interval.
    pub fn x_interval(&self) -> Result<(T, T), SffError> {
        check_rate(self.eta, "eta")?;
        let (lo, hi) = self.strip()?;
        Ok(var_interval(self.sign.value::<T>() * self.eta, lo, hi))
    }

    pub fn eval(&self, x: T) -> Result<Sff<T>, SffError> {
        check_rate(self.eta, "eta")?;
        exp_strip_form(self.sigma, self.beta, self.sign, self.eta, -T::one(), x)
    }
}

pub fn sff_prop1_i<T: Scalar>(p: &Prop1i<T>, x: T) -> Result<Sff<T>, SffError> {
    p.eval(x)
}

/// Universal form depending on t only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop3i<T> {
    pub m2: T,
    pub sigma: T,
    pub beta: T,
    pub sign: Sign,
}

impl<T: Scalar> Prop3i<T> {
    pub fn strip(&self) -> Result<(T, T), SffError> {
        strip_bounds(self.sigma, self.beta)
    }

    pub fn t_interval(&self) -> Result<(T, T), SffError> {
        check_rate(self.m2, "m2")?;
        let (lo, hi) = self.strip()?;
        Ok(var_interval(self.sign.value::<T>() * self.m2, lo, hi))
    }

    pub fn eval(&self, t: T) -> Result<Sff<T>, SffError> {
        check_rate(self.m2, "m2")?;
        exp_strip_form(self.sigma, self.beta, self.sign, self.m2, T::one(), t)
    }
}

pub fn sff_prop3_i<T: Scalar>(p: &Prop3i<T>, t: T) -> Result<Sff<T>, SffError> {
    p.eval(t)
}

/// Universal form depending on `m1 x + m2 t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop3ii<T> {
    pub m1: T,
    pub m2: T,
    pub sigma: T,
    pub beta: T,
    pub sign: Sign,
}

impl<T: Scalar> Prop3ii<T> {
    pub fn strip(&self) -> Result<(T, T), SffError> {
        strip_bounds(self.sigma, self.beta)
    }

    /// Strip as an interval of `m1 x + m2 t`.
    pub fn s_interval(&self) -> Result<(T, T), SffError> {
        let (lo, hi) = self.strip()?;
        Ok(var_interval(self.sign.value::<T>(), lo, hi))
    }

    pub fn eval(&self, x: T, t: T) -> Result<Sff<T>, SffError> {
        if self.m1 == T::zero() && self.m2 == T::zero() {
            return Err(SffError::BadParams("m1 and m2 both zero".into()));
        }
        exp_strip_form(self.sigma, self.beta, self.sign, T::one(), -T::one(), self.m1 * x + self.m2 * t)
    }
}

pub fn sff_prop3_ii<T: Scalar>(p: &Prop3ii<T>, x: T, t: T) -> Result<Sff<T>, SffError> {
    p.eval(x, t)
}

/// The ODE for b when μ ≠ 0, in a variable with exponential rate `eta`
/// (`E = e^{±2ηx}`); `eta = 1` gives the `m1 x + m2 t` version.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SffOde<T> {
    pub mu: T,
    pub eta: T,
    pub beta: T,
    pub sign: Sign,
}

impl<T: Scalar> SffOde<T> {
    fn e(&self, x: T) -> T {
        (T::of(2.0) * self.sign.value::<T>() * self.eta * x).exp()
    }

    /// `φ = ((μ²−1) b − βE) / μ`.
    pub fn phi(&self, x: T, b: T) -> T {
        ((self.mu * self.mu - T::one()) * b - self.beta * self.e(x)) / self.mu
    }

    /// `Δ = φ² − 4(1 − b²)`.
    pub fn discriminant(&self, x: T, b: T) -> T {
        let p = self.phi(x, b);
        p * p - T::of(4.0) * (T::one() - b * b)
    }

    /// Coefficient of b' in the ODE.
    pub fn coefficient(&self, x: T, b: T) -> T {
        let (mu, s, one) = (self.mu, self.sign.value::<T>(), T::one());
        let m2 = mu * mu;
        let sq = self.discriminant(x, b).sqrt();
        mu * (one + m2) * sq + s * (m2 + one) * (m2 + one) * b - s * (m2 - one) * self.beta * self.e(x)
    }

    /// Remaining terms: the ODE reads `coefficient·b' + rest = 0`.
    pub fn rest(&self, x: T, b: T) -> T {
        let (mu, s, one) = (self.mu, self.sign.value::<T>(), T::one());
        let m2 = mu * mu;
        let e = self.e(x);
        let sq = self.discriminant(x, b).sqrt();
        let be = self.beta * e;
        T::of(2.0) * self.eta * ((-s * mu * (one + m2) * sq - (m2 - one) * be) * b + be * be)
    }

    pub fn rhs(&self, x: T, b: T) -> T {
        -self.rest(x, b) / self.coefficient(x, b)
    }

    /// `a, c = [±μ√Δ ∓ ((μ²−1) b − βE)] / 2μ`.
    pub fn form(&self, x: T, b: T) -> Sff<T> {
        let (mu, s) = (self.mu, self.sign.value::<T>());
        let sq = self.discriminant(x, b).sqrt();
        let w = (mu * mu - T::one()) * b - self.beta * self.e(x);
        let two_mu = T::of(2.0) * mu;
        Sff::new((s * mu * sq - w) / two_mu, b, (s * mu * sq + w) / two_mu)
    }

    /// `|coef·b' + rest| / (1 + |coef·b'| + |rest|)`.
    pub fn plugback(&self, x: T, b: T, db: T) -> T {
        let lhs = self.coefficient(x, b) * db;
        let r = self.rest(x, b);
        (lhs + r).abs() / (T::one() + lhs.abs() + r.abs())
    }

    fn check_initial(&self, x0: T, b0: T) -> Result<(), SffError> {
        if self.mu == T::zero() || self.eta == T::zero() {
            return Err(SffError::BadParams("mu and eta must be nonzero".into()));
        }
        let d = self.discriminant(x0, b0);
        if !(d > T::of(STRIP_MARGIN)) {
            return Err(SffError::BadInitialCondition(format!("discriminant {} <= 0 at the anchor", d)));
        }
        if self.coefficient(x0, b0).abs() <= T::of(1e-12) {
            return Err(SffError::BadInitialCondition("b' coefficient vanishes at the anchor".into()));
        }
        Ok(())
    }

    /// Dense solution from `(x0, b0)` toward `x_end`, stopped at `Δ = 0` (event 0)
    /// or at a zero of the b' coefficient (event 1).
    pub fn dense(&self, x0: T, b0: T, x_end: T) -> Result<OdeSolution<T>, SffError> {
        self.check_initial(x0, b0)?;
        let eps = T::of(STRIP_MARGIN);
        let g_delta = |x: T, b: T| self.discriminant(x, b) - eps;
        let g_coef = |x: T, b: T| self.coefficient(x, b);
        Ok(dopri5(|x, b| self.rhs(x, b), x0, b0, x_end, &OdeOptions::default(), &[&g_delta, &g_coef])?)
    }

    /// Integrates from `(x0, b0)` to `x_end` and samples `n` evenly spaced points.
    pub fn integrate(&self, x0: T, b0: T, x_end: T, n: usize) -> Result<SffCurve<T>, SffError> {
        let sol = self.dense(x0, b0, x_end)?;
        let stop = match sol.stop {
            Stop::Completed => CurveStop::Completed,
            Stop::Event { index: 0, x } => CurveStop::DeltaCollapse { x },
            Stop::Event { x, .. } => CurveStop::SingularCoefficient { x },
        };
        let n = n.max(2);
        let samples = (0..n)
            .filter_map(|k| {
                let x = x0 + (sol.x_stop - x0) * T::of_usize(k) / T::of_usize(n - 1);
                let (b, db) = sol.eval(x)?;
                let form = self.form(x, b);
                Some(SffSample {
                    x,
                    sff: form,
                    b_prime: db,
                    discriminant: self.discriminant(x, b),
                    plugback: self.plugback(x, b, db),
                    gauss: form.gauss_residual(),
                })
            })
            .collect();
        Ok(SffCurve { x_start: x0, x_stop: sol.x_stop, samples, stop, steps: sol.steps.len() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveStop<T> {
    Completed,
    DeltaCollapse { x: T },
    SingularCoefficient { x: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SffSample<T> {
    /// Independent variable (x, or `m1 x + m2 t`).
    pub x: T,
    pub sff: Sff<T>,
    pub b_prime: T,
    pub discriminant: T,
    pub plugback: T,
    pub gauss: T,
}

#[derive(Clone, Debug)]
pub struct SffCurve<T> {
    pub x_start: T,
    pub x_stop: T,
    pub samples: Vec<SffSample<T>>,
    pub stop: CurveStop<T>,
    pub steps: usize,
}

impl<T: Scalar> SffCurve<T> {
    pub fn max_plugback(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, s| m.max(s.plugback))
    }

    pub fn max_gauss(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, s| m.max(s.gauss.abs()))
    }

    pub fn min_discriminant(&self) -> T {
        self.samples.iter().fold(T::infinity(), |m, s| m.min(s.discriminant))
    }

    /// Error unless the requested range was covered.
    pub fn require_complete(self) -> Result<Self, SffError> {
        match self.stop {
            CurveStop::Completed => Ok(self),
            CurveStop::DeltaCollapse { x } => Err(SffError::DeltaCollapse { last_valid: x.to_f64_lossy() }),
            CurveStop::SingularCoefficient { x } => {
                Err(SffError::SingularCoefficient { last_valid: x.to_f64_lossy() })
            }
        }
    }
}

/// ODE case in x (T2 with μ ≠ 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop1ii<T> {
    pub mu: T,
    pub eta: T,
    pub beta: T,
    pub sign: Sign,
    pub b0: T,
    pub x0: T,
}

impl<T: Scalar> Prop1ii<T> {
    pub fn ode(&self) -> SffOde<T> {
        SffOde { mu: self.mu, eta: self.eta, beta: self.beta, sign: self.sign }
    }
}

pub fn sff_prop1_ii<T: Scalar>(p: &Prop1ii<T>, x_end: T, n: usize) -> Result<SffCurve<T>, SffError> {
    p.ode().integrate(p.x0, p.b0, x_end, n)
}

/// ODE case in `S = m1 x + m2 t` (T4 with μ ≠ 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop3iii<T> {
    pub mu: T,
    pub m1: T,
    pub m2: T,
    pub beta: T,
    pub sign: Sign,
    pub b0: T,
    pub s0: T,
}

impl<T: Scalar> Prop3iii<T> {
    pub fn ode(&self) -> SffOde<T> {
        SffOde { mu: self.mu, eta: T::one(), beta: self.beta, sign: self.sign }
    }

    pub fn coordinate(&self, x: T, t: T) -> T {
        self.m1 * x + self.m2 * t
    }
}

pub fn sff_prop3_iii<T: Scalar>(p: &Prop3iii<T>, s_end: T, n: usize) -> Result<SffCurve<T>, SffError> {
    p.ode().integrate(p.s0, p.b0, s_end, n)
}

/// Codazzi residuals
/// `r_a = f11 a_t + f21 b_t − f12 a_x − f22 b_x − 2bΔ13 + (a−c)Δ23`,
/// `r_b = f11 b_t + f21 c_t − f12 b_x − f22 c_x + (a−c)Δ13 + 2bΔ23`.
///
/// Points whose stencil touches a masked point are skipped.
pub fn codazzi_residual<T: Scalar>(frames: &FrameField<T>, sff: &SffField<T>) -> LatticeResidual<T> {
    let lat = &frames.lattice;
    let (av, bv, cv) = (sff.a(), sff.b(), sff.c());
    let mut values = vec![vec![None; lat.len()]; 2];
    let n = lat.nx();
    let two = T::of(2.0);
    for j in 0..lat.nt() {
        for i in 0..n {
            if !lat.interior(i, j) {
                continue;
            }
            let k = lat.idx(i, j);
            let near = [k, lat.idx((i + 1) % n, j), lat.idx((i + n - 1) % n, j), lat.idx(i, j + 1), lat.idx(i, j - 1)];
            if near.iter().any(|&q| sff.mask[q]) {
                continue;
            }
            let f = frames.f[k].f;
            let (_, d13, d23) = frames.f[k].deltas();
            let s = sff.sff[k];
            let dx = |v: &[T]| lat.diff_x(v, i, j).unwrap_or(T::nan());
            let dt = |v: &[T]| lat.diff_t(v, i, j).unwrap_or(T::nan());
            let (a_x, b_x, c_x) = (dx(&av), dx(&bv), dx(&cv));
            let (a_t, b_t, c_t) = (dt(&av), dt(&bv), dt(&cv));
            let amc = s.a - s.c;
            values[0][k] =
                Some(f[0][0] * a_t + f[1][0] * b_t - f[0][1] * a_x - f[1][1] * b_x - two * s.b * d13 + amc * d23);
            values[1][k] =
                Some(f[0][0] * b_t + f[1][0] * c_t - f[0][1] * b_x - f[1][1] * c_x + amc * d13 + two * s.b * d23);
        }
    }
    LatticeResidual { names: vec!["r_a", "r_b"], values }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    UniversalExists,
    Nonexistent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::UniversalExists => "UNIVERSAL_EXISTS",
            Verdict::Nonexistent => "NONEXISTENT",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropCase {
    Prop1i,
    Prop1ii,
    Prop3i,
    Prop3ii,
    Prop3iii,
}

impl fmt::Display for PropCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PropCase::Prop1i => "Prop 1(i)",
            PropCase::Prop1ii => "Prop 1(ii)",
            PropCase::Prop3i => "Prop 3(i)",
            PropCase::Prop3ii => "Prop 3(ii)",
            PropCase::Prop3iii => "Prop 3(iii)",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExistenceReport<T> {
    pub branch: String,
    pub verdict: Verdict,
    pub obstruction: Option<T>,
    pub case: Option<PropCase>,
    /// Named intermediate quantities (k1, k2 for T5i).
    pub details: Vec<(&'static str, T)>,
    pub note: Option<String>,
}

impl<T: Scalar> fmt::Display for ExistenceReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.verdict)?;
        if let Some(o) = self.obstruction {
            write!(f, ", obstruction={o:?}")?;
        }
        if let Some(c) = self.case {
            write!(f, ", {c}")?;
        }
        for (k, v) in &self.details {
            write!(f, ", {k}={v:?}")?;
        }
        Ok(())
    }
}

/// Existence of a second fundamental form depending on finitely many jets.
pub fn classify_existence<T: Scalar>(spec: &FamilySpec<T>) -> Result<ExistenceReport<T>, FamilyError> {
    let zero = T::zero();
    let exists = |case| ExistenceReport {
        branch: spec.branch_name().to_string(),
        verdict: Verdict::UniversalExists,
        obstruction: None,
        case: Some(case),
        details: Vec::new(),
        note: None,
    };
    let none = |o: T, details: Vec<(&'static str, T)>, note: Option<String>| ExistenceReport {
        branch: spec.branch_name().to_string(),
        verdict: Verdict::Nonexistent,
        obstruction: Some(o),
        case: None,
        details,
        note,
    };
    Ok(match spec {
        FamilySpec::T2(b) => exists(if b.mu == zero { PropCase::Prop1i } else { PropCase::Prop1ii }),
        FamilySpec::T4(b) => exists(match (b.mu == zero, b.m1 == zero) {
            (true, true) => PropCase::Prop3i,
            (true, false) => PropCase::Prop3ii,
            _ => PropCase::Prop3iii,
        }),
        FamilySpec::T3(b) => {
            let d = (b.m1 * b.mu - b.eta).powi(2) + b.m1 * b.m1;
            none(d, Vec::new(), None)
        }
        FamilySpec::T5i(b) => {
            let k2 = b.m - b.q * b.tau / b.p;
            let k1 = b.mu * k2 - b.tau * b.eta / b.p;
            let note = "k1^2 + k2^2 = 0 would force Δ13 = Δ23 = 0, so either way no form exists".to_string();
            none(k1 * k1 + k2 * k2, vec![("k1", k1), ("k2", k2)], Some(note))
        }
        FamilySpec::T5ii(b) => none(b.lambda * b.lambda + b.m1 * b.m1, Vec::new(), None),
        FamilySpec::Explicit(_) => return Err(FamilyError::UnsupportedForExplicitFrame),
    })
}

/// Universal coefficients for a family in an EXISTS case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UniversalSff<T> {
    Prop1i(Prop1i<T>),
    Prop1ii(Prop1ii<T>),
    Prop3i(Prop3i<T>),
    Prop3ii(Prop3ii<T>),
    Prop3iii(Prop3iii<T>),
}

/// Free data of the universal forms: strip constants and the ODE anchor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniversalChoice<T> {
    pub sigma: T,
    pub beta: T,
    pub b0: T,
    pub anchor: T,
}

impl<T: Scalar> Default for UniversalChoice<T> {
    fn default() -> Self {
        Self { sigma: T::of(3.0), beta: T::of(0.5), b0: T::of(2.0), anchor: T::zero() }
    }
}

/// Universal coefficients paired with a family (sign `+`, rate `m` for T2).
pub fn universal_for<T: Scalar>(spec: &FamilySpec<T>, choice: UniversalChoice<T>) -> Result<UniversalSff<T>, SffError> {
    let UniversalChoice { sigma, beta, b0, anchor } = choice;
    let sign = Sign::Plus;
    let report = classify_existence(spec)?;
    let bad = || SffError::BadParams(format!("branch {} has no universal form", spec.branch_name()));
    Ok(match (spec, report.case) {
        (FamilySpec::T2(b), Some(PropCase::Prop1i)) => UniversalSff::Prop1i(Prop1i { eta: b.m, sigma, beta, sign }),
        (FamilySpec::T2(b), Some(PropCase::Prop1ii)) => {
            UniversalSff::Prop1ii(Prop1ii { mu: b.mu, eta: b.m, beta, sign, b0, x0: anchor })
        }
        (FamilySpec::T4(b), Some(PropCase::Prop3i)) => UniversalSff::Prop3i(Prop3i { m2: b.m2, sigma, beta, sign }),
        (FamilySpec::T4(b), Some(PropCase::Prop3ii)) => {
            UniversalSff::Prop3ii(Prop3ii { m1: b.m1, m2: b.m2, sigma, beta, sign })
        }
        (FamilySpec::T4(b), Some(PropCase::Prop3iii)) => {
            UniversalSff::Prop3iii(Prop3iii { mu: b.mu, m1: b.m1, m2: b.m2, beta, sign, b0, s0: anchor })
        }
        _ => return Err(bad()),
    })
}

impl<T: Scalar> UniversalSff<T> {
    pub fn case(&self) -> PropCase {
        match self {
            UniversalSff::Prop1i(_) => PropCase::Prop1i,
            UniversalSff::Prop1ii(_) => PropCase::Prop1ii,
            UniversalSff::Prop3i(_) => PropCase::Prop3i,
            UniversalSff::Prop3ii(_) => PropCase::Prop3ii,
            UniversalSff::Prop3iii(_) => PropCase::Prop3iii,
        }
    }

    /// The single coordinate the form depends on.
    pub fn coordinate(&self, x: T, t: T) -> T {
        match self {
            UniversalSff::Prop1i(_) | UniversalSff::Prop1ii(_) => x,
            UniversalSff::Prop3i(_) => t,
            UniversalSff::Prop3ii(p) => p.m1 * x + p.m2 * t,
            UniversalSff::Prop3iii(p) => p.coordinate(x, t),
        }
    }

    /// Samples the form on a lattice. Points outside the strip, or past the
    /// stop of an ODE curve, are masked.
    pub fn field(&self, lattice: &Lattice<T>) -> Result<SffField<T>, SffError> {
        let ode = match self {
            UniversalSff::Prop1ii(p) => Some((p.ode(), p.x0, p.b0)),
            UniversalSff::Prop3iii(p) => Some((p.ode(), p.s0, p.b0)),
            _ => None,
        };
        let Some((ode, s0, b0)) = ode else {
            return Ok(SffField::from_fn(lattice.clone(), |_, x, t| match self {
                UniversalSff::Prop1i(p) => p.eval(x),
                UniversalSff::Prop3i(p) => p.eval(t),
                UniversalSff::Prop3ii(p) => p.eval(x, t),
                _ => unreachable!(),
            }));
        };
        let (mut lo, mut hi) = (s0, s0);
        for &t in &lattice.ts {
            for &x in &lattice.xs {
                let s = self.coordinate(x, t);
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        let up = ode.dense(s0, b0, hi)?;
        let down = ode.dense(s0, b0, lo)?;
        Ok(SffField::from_fn(lattice.clone(), |_, x, t| {
            let s = self.coordinate(x, t);
            let sol = if s >= s0 { &up } else { &down };
            sol.eval(s).map(|(b, _)| ode.form(s, b)).ok_or(())
        }))
    }
}

/// Distance of `u/2` from a multiple of π/2 below which the sine-Gordon form is masked.
pub const SINE_GORDON_MASK: f64 = 1e-3;

/// `a = tan(u/2)`, `b = 0`, `c = −cot(u/2)` for the light-cone sine-Gordon frame.
pub fn sine_gordon_sff<T: Scalar>(u: T) -> Result<Sff<T>, SffError> {
    let (s, c) = (u / T::of(2.0)).sin_cos();
    let eps = T::of(SINE_GORDON_MASK);
    if s.abs() < eps || c.abs() < eps {
        return Err(SffError::SingularForm { u: u.to_f64_lossy() });
    }
    Ok(Sff::new(s / c, T::zero(), -c / s))
}
