//! Method-of-lines integration of `u_t - u_xxt = F` on a periodic interval.
//!
//! The equation is rewritten as `u_t = (1 - d_xx)^{-1} F(u, u_x, u_xx, u_xxx)`,
//! spatial derivatives are spectral (or central differences), and time
//! stepping is classical RK4.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::families::{pde_rhs, FamilyError, FamilySpec};
use crate::jetspace::{periodic_fd, Jet, JetError, Stencil};
use crate::scalar::{max_abs, Scalar};

pub const BLOWUP_THRESHOLD: f64 = 1e6;
pub const TAIL_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_CFL: f64 = 0.5;
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("grid needs at least {MIN_POINTS} points, got {0}")]
    GridTooSmall(usize),
    #[error("domain length must be positive and finite")]
    BadLength,
    #[error("time step {dt:e} exceeds CFL limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("blowup at t = {t}: max|u| = {max_abs:e}")]
    BlowupDetected { t: f64, max_abs: f64 },
    #[error("non-finite value at t = {0}")]
    NonFinite(f64),
    #[error("initial condition: {0}")]
    InitialCondition(String),
    #[error("bad time parameters: {0}")]
    BadTime(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Uniform periodic grid `x_i = i * length / n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D<T> {
    pub n: usize,
    pub length: T,
}

impl<T: Scalar> Grid1D<T> {
    pub fn new(n: usize, length: T) -> Result<Self, PdeError> {
        if n < MIN_POINTS {
            return Err(PdeError::GridTooSmall(n));
        }
        if !(length > T::zero() && length.is_finite()) {
            return Err(PdeError::BadLength);
        }
        Ok(Self { n, length })
    }

    /// `[0, 2π)` with n points.
    pub fn two_pi(n: usize) -> Result<Self, PdeError> {
        Self::new(n, T::PI() + T::PI())
    }

    pub fn dx(&self) -> T {
        self.length / T::of_usize(self.n)
    }

    pub fn x(&self, i: usize) -> T {
        T::of_usize(i) * self.dx()
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

/// Snapshots of u on the grid; `values[j][i] = u(x_i, times[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionField<T> {
    pub grid: Grid1D<T>,
    pub times: Vec<T>,
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> SolutionField<T> {
    pub fn last(&self) -> &[T] {
        self.values.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// FFT plans and wavenumbers for one grid.
#[derive(Clone)]
pub struct Spectral<T: Scalar> {
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    /// Angular wavenumbers in FFT order.
    k: Vec<T>,
}

impl<T: Scalar> Spectral<T> {
    pub fn new(grid: &Grid1D<T>) -> Self {
        let n = grid.n;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let base = (T::PI() + T::PI()) / grid.length;
        let k = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                T::of(m) * base
            })
            .collect();
        Self { n, fwd, inv, k }
    }

    fn forward(&self, u: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = u.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.fwd.process(&mut buf);
        buf
    }

    fn inverse(&self, mut buf: Vec<Complex<T>>) -> Vec<T> {
        self.inv.process(&mut buf);
        let s = T::one() / T::of_usize(self.n);
        buf.into_iter().map(|c| c.re * s).collect()
    }

    /// k-th derivative; the Nyquist mode is dropped for odd k.
    pub fn derivative(&self, u: &[T], order: usize) -> Vec<T> {
        if order == 0 {
            return u.to_vec();
        }
        let mut h = self.forward(u);
        let nyq = if self.n % 2 == 0 { Some(self.n / 2) } else { None };
        for (j, c) in h.iter_mut().enumerate() {
            if order % 2 == 1 && Some(j) == nyq {
                *c = Complex::new(T::zero(), T::zero());
                continue;
            }
            let ik = Complex::new(T::zero(), self.k[j]);
            let mut f = Complex::new(T::one(), T::zero());
            for _ in 0..order {
                f = f * ik;
            }
            *c = *c * f;
        }
        self.inverse(h)
    }

    /// Solves `(1 - d_xx) w = g`.
    pub fn helmholtz_invert(&self, g: &[T]) -> Vec<T> {
        let mut h = self.forward(g);
        for (c, k) in h.iter_mut().zip(&self.k) {
            *c = *c / (T::one() + *k * *k);
        }
        self.inverse(h)
    }

    /// `w - w_xx`.
    pub fn helmholtz_apply(&self, w: &[T]) -> Vec<T> {
        let mut h = self.forward(w);
        for (c, k) in h.iter_mut().zip(&self.k) {
            *c = *c * (T::one() + *k * *k);
        }
        self.inverse(h)
    }

    /// Fraction of `sum |u_hat|^2` carried by |k| above two thirds of Nyquist.
    pub fn tail_fraction(&self, u: &[T]) -> T {
        let h = self.forward(u);
        let cut = self.n / 3;
        let mut total = T::zero();
        let mut tail = T::zero();
        for (j, c) in h.iter().enumerate() {
            let e = c.norm_sqr();
            total = total + e;
            let m = if j <= self.n / 2 { j } else { self.n - j };
            if m > cut {
                tail = tail + e;
            }
        }
        if total == T::zero() {
            T::zero()
        } else {
            tail / total
        }
    }
}

/// One-off periodic Helmholtz inversion on `[0, length)`.
pub fn helmholtz_invert<T: Scalar>(g: &[T], length: T) -> Vec<T> {
    let grid = Grid1D { n: g.len(), length };
    Spectral::new(&grid).helmholtz_invert(g)
}

/// How spatial derivatives inside F are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpatialMode {
    #[default]
    Spectral,
    FiniteDifference(Stencil),
}

/// Right-hand side `u_t = (1 - d_xx)^{-1} F` for one family on one grid.
pub struct MolSystem<'a, T: Scalar> {
    pub spec: &'a FamilySpec<T>,
    pub grid: Grid1D<T>,
    pub mode: SpatialMode,
    pub c_cfl: T,
    ops: Spectral<T>,
    xs: Vec<T>,
}

impl<'a, T: Scalar> MolSystem<'a, T> {
    pub fn new(spec: &'a FamilySpec<T>, grid: Grid1D<T>, mode: SpatialMode) -> Self {
        Self { spec, grid, mode, c_cfl: T::of(DEFAULT_CFL), ops: Spectral::new(&grid), xs: grid.points() }
    }

    pub fn spectral(&self) -> &Spectral<T> {
        &self.ops
    }

    fn derivatives(&self, u: &[T]) -> [Vec<T>; 4] {
        let d = |k: usize| match self.mode {
            SpatialMode::Spectral => self.ops.derivative(u, k),
            SpatialMode::FiniteDifference(s) => periodic_fd(u, self.grid.dx(), k, s),
        };
        [u.to_vec(), d(1), d(2), d(3)]
    }

    /// `F` at every grid point.
    pub fn forcing(&self, u: &[T], t: T) -> Result<Vec<T>, PdeError> {
        let [z0, z1, z2, z3] = self.derivatives(u);
        (0..u.len())
            .map(|i| {
                let jet = Jet::new(self.xs[i], t, vec![z0[i], z1[i], z2[i], z3[i]]);
                Ok(pde_rhs(self.spec, &jet)?)
            })
            .collect()
    }

    pub fn rate(&self, u: &[T], t: T) -> Result<Vec<T>, PdeError> {
        Ok(self.ops.helmholtz_invert(&self.forcing(u, t)?))
    }

    /// `c_cfl * dx / (1 + max|λ u|)`.
    pub fn cfl_limit(&self, u: &[T]) -> T {
        let l = self.spec.lambda().unwrap_or(T::zero()).abs();
        self.c_cfl * self.grid.dx() / (T::one() + l * max_abs(u))
    }

    /// One classical RK4 step from time `t`.
    pub fn step_rk4(&self, u: &[T], t: T, dt: T) -> Result<Vec<T>, PdeError> {
        let limit = self.cfl_limit(u);
        if dt > limit {
            return Err(PdeError::CflViolation { dt: dt.to_f64_lossy(), limit: limit.to_f64_lossy() });
        }
        let half = dt / T::of(2.0);
        let axpy = |a: &[T], s: T, b: &[T]| a.iter().zip(b).map(|(x, y)| *x + s * *y).collect::<Vec<_>>();
        let k1 = self.rate(u, t)?;
        let k2 = self.rate(&axpy(u, half, &k1), t + half)?;
        let k3 = self.rate(&axpy(u, half, &k2), t + half)?;
        let k4 = self.rate(&axpy(u, dt, &k3), t + dt)?;
        let sixth = dt / T::of(6.0);
        let two = T::of(2.0);
        let out: Vec<T> = (0..u.len())
            .map(|i| u[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
            .collect();
        let tn = (t + dt).to_f64_lossy();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(PdeError::NonFinite(tn));
        }
        let m = max_abs(&out);
        if m > T::of(BLOWUP_THRESHOLD) {
            return Err(PdeError::BlowupDetected { t: tn, max_abs: m.to_f64_lossy() });
        }
        Ok(out)
    }
}

/// Convenience wrapper around [`MolSystem::step_rk4`] at t = 0.
pub fn step_rk4<T: Scalar>(spec: &FamilySpec<T>, grid: Grid1D<T>, u: &[T], dt: T) -> Result<Vec<T>, PdeError> {
    MolSystem::new(spec, grid, SpatialMode::Spectral).step_rk4(u, T::zero(), dt)
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Keep every k-th step (the final state is always kept).
    pub snapshot_every: usize,
    pub mode: SpatialMode,
    pub c_cfl: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { snapshot_every: 1, mode: SpatialMode::Spectral, c_cfl: DEFAULT_CFL }
    }
}

/// Per-snapshot sanity monitors.
#[derive(Clone, Debug, Default)]
pub struct SolveDiagnostics<T> {
    pub max_abs: Vec<T>,
    /// `∫ (u^2 + u_x^2) dx`.
    pub h1_energy: Vec<T>,
    pub tail_fraction: Vec<T>,
    pub under_resolved: bool,
    pub steps: usize,
    pub dt: T,
}

/// Integrates from 0 to `t_max` with `ceil(t_max/dt)` equal steps.
pub fn solve<T: Scalar>(
    spec: &FamilySpec<T>,
    u0: &[T],
    grid: Grid1D<T>,
    dt: T,
    t_max: T,
    opts: SolveOptions,
) -> Result<(SolutionField<T>, SolveDiagnostics<T>), PdeError> {
    if u0.len() != grid.n {
        return Err(PdeError::InitialCondition(format!("{} values for {} grid points", u0.len(), grid.n)));
    }
    if !(dt > T::zero()) || !(t_max >= T::zero()) {
        return Err(PdeError::BadTime("dt > 0 and tmax >= 0 required".into()));
    }
    let mut sys = MolSystem::new(spec, grid, opts.mode);
    sys.c_cfl = T::of(opts.c_cfl);
    let steps = (t_max / dt - T::of(1e-9)).ceil().to_f64_lossy().max(0.0) as usize;
    let h = if steps == 0 { dt } else { t_max / T::of_usize(steps) };
    let every = opts.snapshot_every.max(1);
    let mut diag = SolveDiagnostics { steps, dt: h, ..Default::default() };
    let mut field = SolutionField { grid, times: Vec::new(), values: Vec::new() };
    let record = |u: &[T], t: T, field: &mut SolutionField<T>, diag: &mut SolveDiagnostics<T>| {
        let ux = sys.spectral().derivative(u, 1);
        let e = u.iter().zip(&ux).map(|(a, b)| *a * *a + *b * *b).sum::<T>() * grid.dx();
        let tail = sys.spectral().tail_fraction(u);
        diag.max_abs.push(max_abs(u));
        diag.h1_energy.push(e);
        diag.tail_fraction.push(tail);
        if tail > T::of(TAIL_THRESHOLD) {
            diag.under_resolved = true;
        }
        field.times.push(t);
        field.values.push(u.to_vec());
    };
    let mut u = u0.to_vec();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(PdeError::NonFinite(0.0));
    }
    record(&u, T::zero(), &mut field, &mut diag);
    for s in 0..steps {
        let t = T::of_usize(s) * h;
        u = sys.step_rk4(&u, t, h)?;
        if (s + 1) % every == 0 || s + 1 == steps {
            record(&u, T::of_usize(s + 1) * h, &mut field, &mut diag);
        }
    }
    if diag.under_resolved {
        log::warn!("Fourier tail above {TAIL_THRESHOLD:e} of total energy: under-resolved");
    }
    Ok((field, diag))
}

/// `u = A e^{s t} cos(k x + ν t)` with `s = m/(1+k^2)`, `ν = k/(1+k^2)`: exact
/// solution of `u_t - u_xxt = u_x + m u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactLinear<T> {
    pub m: T,
    pub k: u32,
    pub amplitude: T,
}

impl<T: Scalar> ExactLinear<T> {
    pub fn new(m: T, k: u32, amplitude: T) -> Result<Self, PdeError> {
        if k == 0 {
            return Err(PdeError::InitialCondition("wavenumber k >= 1 required".into()));
        }
        Ok(Self { m, k, amplitude })
    }

    fn kf(&self) -> T {
        T::of(self.k as f64)
    }

    pub fn growth(&self) -> T {
        self.m / (T::one() + self.kf() * self.kf())
    }

    pub fn phase_speed(&self) -> T {
        self.kf() / (T::one() + self.kf() * self.kf())
    }

    pub fn value(&self, x: T, t: T) -> T {
        self.amplitude * (self.growth() * t).exp() * (self.kf() * x + self.phase_speed() * t).cos()
    }

    /// Analytic jet with z_0..z_order and the time derivatives z_{0,t}, z_{1,t}.
    pub fn jet(&self, x: T, t: T, order: usize) -> Jet<T> {
        let k = self.kf();
        let env = self.amplitude * (self.growth() * t).exp();
        let th = k * x + self.phase_speed() * t;
        let (s, c) = th.sin_cos();
        // d^i/dx^i cos(th) = k^i cos(th + i π/2)
        let cyc = [c, -s, -c, s];
        let z: Vec<T> = (0..=order).map(|i| env * k.powi(i as i32) * cyc[i % 4]).collect();
        let (g, nu) = (self.growth(), self.phase_speed());
        let zt0 = env * (g * c - nu * s);
        let zt1 = env * k * (-g * s - nu * c);
        Jet::new(x, t, z).with_time(zt0, Some(zt1))
    }

    pub fn sample(&self, grid: Grid1D<T>, times: &[T]) -> SolutionField<T> {
        let xs = grid.points();
        let values = times.iter().map(|&t| xs.iter().map(|&x| self.value(x, t)).collect()).collect();
        SolutionField { grid, times: times.to_vec(), values }
    }
}

/// Sine-Gordon kink `u = 4 arctan(e^{x+t})` of `u_xt = sin u`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SineGordonKink;

impl SineGordonKink {
    pub fn value<T: Scalar>(&self, x: T, t: T) -> T {
        T::of(4.0) * (x + t).exp().atan()
    }

    /// `z0, z1, z2` and `u_t`; both first derivatives equal `2 sech(x+t)`.
    pub fn jet<T: Scalar>(&self, x: T, t: T) -> Jet<T> {
        let s = x + t;
        let sech = s.cosh().recip();
        let ux = T::of(2.0) * sech;
        Jet::new(x, t, vec![self.value(x, t), ux, -ux * s.tanh()]).with_time(ux, Some(-ux * s.tanh()))
    }
}

/// Initial data: `cos`, `gauss:μ,σ`, or a CSV file of values.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition<T> {
    Cos,
    Gauss { mu: T, sigma: T },
    Values(Vec<T>),
}

impl<T: Scalar> InitialCondition<T> {
    pub fn parse(text: &str) -> Result<Self, PdeError> {
        let text = text.trim();
        if text == "cos" {
            return Ok(Self::Cos);
        }
        if let Some(rest) = text.strip_prefix("gauss:") {
            let p: Vec<f64> = rest
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| PdeError::InitialCondition(format!("{text}: {e}")))?;
            if p.len() != 2 || p[1] <= 0.0 {
                return Err(PdeError::InitialCondition(format!("{text}: expected gauss:mu,sigma with sigma > 0")));
            }
            return Ok(Self::Gauss { mu: T::of(p[0]), sigma: T::of(p[1]) });
        }
        let body = std::fs::read_to_string(text)
            .map_err(|e| PdeError::InitialCondition(format!("cannot read '{text}': {e}")))?;
        Self::from_csv(&body)
    }

    /// Numbers separated by commas or newlines; `#` lines ignored.
    pub fn from_csv(body: &str) -> Result<Self, PdeError> {
        let mut v = Vec::new();
        for line in body.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            for tok in line.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let x: f64 = tok.parse().map_err(|_| PdeError::InitialCondition(format!("bad number '{tok}'")))?;
                v.push(T::of(x));
            }
        }
        if v.is_empty() {
            return Err(PdeError::InitialCondition("no values".into()));
        }
        Ok(Self::Values(v))
    }

    pub fn sample(&self, grid: &Grid1D<T>) -> Result<Vec<T>, PdeError> {
        match self {
            Self::Cos => Ok(grid.points().into_iter().map(|x| x.cos()).collect()),
            Self::Gauss { mu, sigma } => Ok(grid
                .points()
                .into_iter()
                .map(|x| {
                    let d = (x - *mu) / *sigma;
                    (-d * d / T::of(2.0)).exp()
                })
                .collect()),
            Self::Values(v) if v.len() == grid.n => Ok(v.clone()),
            Self::Values(v) => {
                Err(PdeError::InitialCondition(format!("{} values for {} grid points", v.len(), grid.n)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{presets, Sign};
    use rand::{Rng, SeedableRng};

    #[test]
    fn grid_rejects_tiny() {
        assert_eq!(Grid1D::<f64>::new(8, 1.0), Err(PdeError::GridTooSmall(8)));
        assert!(Grid1D::<f64>::new(16, 0.0).is_err());
    }

    #[test]
    fn helmholtz_eigenfunction_and_constant() {
        let g = Grid1D::<f64>::two_pi(64).unwrap();
        let sp = Spectral::new(&g);
        let u: Vec<f64> = g.points().iter().map(|x| (3.0 * x).cos()).collect();
        let w = sp.helmholtz_invert(&u);
        for (a, b) in w.iter().zip(&u) {
            assert!((a - b / 10.0).abs() < 1e-14);
        }
        let c = sp.helmholtz_invert(&[2.5; 64]);
        assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn helmholtz_round_trip_random() {
        let g = Grid1D::<f64>::new(128, 3.0).unwrap();
        let sp = Spectral::new(&g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let w: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = sp.helmholtz_invert(&sp.helmholtz_apply(&w));
        for (a, b) in back.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_data_grows_exponentially() {
        let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
        let g = Grid1D::two_pi(16).unwrap();
        let (f, _) = solve(&spec, &[0.3; 16], g, 0.01, 1.0, SolveOptions::default()).unwrap();
        for v in f.last() {
            assert!((v - 0.3 * 1f64.exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_is_fixed_point() {
        let spec = presets::camassa_holm::<f64>(1.0);
        let g = Grid1D::two_pi(32).unwrap();
        let out = step_rk4(&spec, g, &[0.0; 32], 0.01).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cfl_violation_is_reported() {
        let spec = presets::camassa_holm::<f64>(0.0);
        let g = Grid1D::two_pi(64).unwrap();
        let u = vec![1.0; 64];
        assert!(matches!(step_rk4(&spec, g, &u, 0.5), Err(PdeError::CflViolation { .. })));
    }

    #[test]
    fn exact_linear_jet_is_consistent() {
        let ex = ExactLinear::<f64>::new(1.0, 2, 0.7).unwrap();
        let j = ex.jet(0.4, 0.3, 3);
        // u_t - u_xxt = u_x + m u
        let z2t = {
            let h = 1e-6;
            (ex.jet(0.4, 0.3 + h, 3).z[2] - ex.jet(0.4, 0.3 - h, 3).z[2]) / (2.0 * h)
        };
        assert!((j.zt0.unwrap() - z2t - (j.z[1] + j.z[0])).abs() < 1e-8);
        assert_eq!(ExactLinear::<f64>::new(1.0, 0, 1.0), Err(PdeError::InitialCondition("wavenumber k >= 1 required".into())));
    }

    #[test]
    fn noise_flags_tail() {
        let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
        let g = Grid1D::two_pi(32).unwrap();
        let u0: Vec<f64> = (0..32).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (_, d) = solve(&spec, &u0, g, 0.01, 0.01, SolveOptions::default()).unwrap();
        assert!(d.under_resolved);
    }

    #[test]
    fn initial_condition_parsing() {
        assert_eq!(InitialCondition::<f64>::parse("cos").unwrap(), InitialCondition::Cos);
        assert_eq!(
            InitialCondition::<f64>::parse("gauss:1.5,0.25").unwrap(),
            InitialCondition::Gauss { mu: 1.5, sigma: 0.25 }
        );
        assert!(InitialCondition::<f64>::parse("gauss:1").is_err());
        assert!(InitialCondition::<f64>::parse("/nonexistent/ic.csv").is_err());
        let v = InitialCondition::<f64>::from_csv("# u\n1,2\n3\n").unwrap();
        assert_eq!(v, InitialCondition::Values(vec![1.0, 2.0, 3.0]));
    }
}
