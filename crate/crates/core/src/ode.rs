//! Scalar Dormand–Prince 5(4) integrator with dense output and terminal events.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("non-finite right-hand side at the initial point")]
    BadStart,
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
    /// Width to which event locations are bisected.
    pub event_tol: T,
}

impl<T: Scalar> Default for OdeOptions<T> {
    fn default() -> Self {
        Self { rtol: T::of(1e-10), atol: T::of(1e-12), max_steps: 200_000, event_tol: T::of(1e-12) }
    }
}

/// Why integration ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop<T> {
    Completed,
    /// Event function `index` changed sign (or the step size collapsed next to it) at `x`.
    Event { index: usize, x: T },
}

/// Continuous extension over one accepted step.
#[derive(Clone, Copy, Debug)]
pub struct DenseStep<T> {
    pub x0: T,
    pub h: T,
    r: [T; 5],
}

impl<T: Scalar> DenseStep<T> {
    fn theta(&self, x: T) -> T {
        (x - self.x0) / self.h
    }

    pub fn value(&self, x: T) -> T {
        let s = self.theta(x);
        let r = &self.r;
        let one = T::one();
        r[0] + s * (r[1] + (one - s) * (r[2] + s * (r[3] + (one - s) * r[4])))
    }

    pub fn derivative(&self, x: T) -> T {
        let s = self.theta(x);
        let r = &self.r;
        let (one, two, three) = (T::one(), T::of(2.0), T::of(3.0));
        (r[1] + (one - two * s) * r[2] + s * (two - three * s) * r[3]
            + two * s * (one - s) * (one - two * s) * r[4])
            / self.h
    }
}

#[derive(Clone, Debug)]
pub struct OdeSolution<T> {
    pub x_start: T,
    /// Last point reached (event location when stopped early).
    pub x_stop: T,
    pub steps: Vec<DenseStep<T>>,
    pub stop: Stop<T>,
    pub rejected: usize,
}

impl<T: Scalar> OdeSolution<T> {
    fn step_for(&self, x: T) -> Option<&DenseStep<T>> {
        let (lo, hi) = if self.x_stop >= self.x_start { (self.x_start, self.x_stop) } else { (self.x_stop, self.x_start) };
        if x < lo || x > hi || self.steps.is_empty() {
            return None;
        }
        let fwd = self.x_stop >= self.x_start;
        let pos = self.steps.partition_point(|s| if fwd { s.x0 <= x } else { s.x0 >= x });
        Some(&self.steps[pos.saturating_sub(1)])
    }

    /// `(y, y')` from the dense output.
    pub fn eval(&self, x: T) -> Option<(T, T)> {
        self.step_for(x).map(|s| (s.value(x), s.derivative(x)))
    }

    pub fn nodes(&self) -> Vec<T> {
        let mut v: Vec<T> = self.steps.iter().map(|s| s.x0).collect();
        v.push(self.x_stop);
        v
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrates `y' = f(x, y)` from `(x0, y0)` toward `x_end`.
///
/// Each event function `g(x, y)` is terminal: integration stops where it first
/// changes sign from its value at the start, located by bisection on the dense
/// output.
pub fn dopri5<T: Scalar>(
    f: impl Fn(T, T) -> T,
    x0: T,
    y0: T,
    x_end: T,
    opts: &OdeOptions<T>,
    events: &[&dyn Fn(T, T) -> T],
) -> Result<OdeSolution<T>, OdeError> {
    let k0 = f(x0, y0);
    if !k0.is_finite() || !y0.is_finite() {
        return Err(OdeError::BadStart);
    }
    let span = x_end - x0;
    let dir = if span >= T::zero() { T::one() } else { -T::one() };
    let g0: Vec<T> = events.iter().map(|g| g(x0, y0)).collect();
    let mut sol = OdeSolution { x_start: x0, x_stop: x0, steps: Vec::new(), stop: Stop::Completed, rejected: 0 };
    if span == T::zero() {
        return Ok(sol);
    }
    let (mut x, mut y, mut k1) = (x0, y0, k0);
    let mut h = dir * (span.abs() * T::of(1e-3)).min(T::of(1e-2)).max(T::of(1e-8));
    let min_h = opts.event_tol.max(T::epsilon() * T::of(16.0) * (T::one() + x0.abs()));
    let mut steps = 0usize;
    loop {
        if (x_end - x) * dir <= T::zero() {
            break;
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps));
        }
        if (x + h - x_end) * dir > T::zero() {
            h = x_end - x;
        }
        let mut k = [T::zero(); 7];
        k[0] = k1;
        let mut finite = true;
        for s in 1..7 {
            let mut acc = T::zero();
            for (j, kj) in k.iter().enumerate().take(s) {
                acc = acc + T::of(A[s][j]) * *kj;
            }
            k[s] = f(x + T::of(C[s]) * h, y + h * acc);
            if !k[s].is_finite() {
                finite = false;
                break;
            }
        }
        let y1 = if finite { y + h * (0..6).fold(T::zero(), |a, j| a + T::of(A[6][j]) * k[j]) } else { T::nan() };
        let err = if finite {
            let e = h * (0..7).fold(T::zero(), |a, j| a + T::of(E[j]) * k[j]);
            let sc = opts.atol + opts.rtol * y.abs().max(y1.abs());
            (e / sc).abs()
        } else {
            T::infinity()
        };
        if !(err <= T::one()) {
            sol.rejected += 1;
            let fac = if err.is_finite() { (T::of(0.9) * err.powf(T::of(-0.2))).max(T::of(0.2)) } else { T::of(0.25) };
            h = h * fac;
            if h.abs() < min_h {
                // cannot make progress: attribute to the event closest to zero
                let idx = events
                    .iter()
                    .enumerate()
                    .map(|(i, g)| (i, g(x, y).abs()))
                    .fold((0usize, T::infinity()), |b, c| if c.1 < b.1 { c } else { b })
                    .0;
                sol.stop = Stop::Event { index: idx, x };
                sol.x_stop = x;
                return Ok(sol);
            }
            continue;
        }
        let ydiff = y1 - y;
        let bspl = h * k[0] - ydiff;
        let r4 = h * (0..7).fold(T::zero(), |a, j| a + T::of(D[j]) * k[j]);
        let dense = DenseStep { x0: x, h, r: [y, ydiff, bspl, ydiff - h * k[6] - bspl, r4] };
        let x1 = x + h;
        // terminal events
        let mut hit: Option<(usize, T)> = None;
        for (i, g) in events.iter().enumerate() {
            let s0 = g0[i].signum();
            let g1 = g(x1, y1);
            if g1.signum() != s0 || !g1.is_finite() {
                let (mut lo, mut hi) = (x, x1);
                while (hi - lo).abs() > opts.event_tol {
                    let mid = (lo + hi) / T::of(2.0);
                    let gm = g(mid, dense.value(mid));
                    if gm.signum() == s0 && gm.is_finite() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if hit.is_none_or(|(_, xe)| (lo - xe) * dir < T::zero()) {
                    hit = Some((i, lo));
                }
            }
        }
        sol.steps.push(dense);
        if let Some((index, xe)) = hit {
            sol.x_stop = xe;
            sol.stop = Stop::Event { index, x: xe };
            return Ok(sol);
        }
        x = x1;
        y = y1;
        k1 = k[6];
        sol.x_stop = x;
        let fac = if err == T::zero() { T::of(10.0) } else { T::of(0.9) * err.powf(T::of(-0.2)) };
        h = h * fac.min(T::of(10.0)).max(T::of(0.2));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let sol = dopri5(|_, y: f64| y, 0.0, 1.0, 2.0, &OdeOptions::default(), &[]).unwrap();
        assert_eq!(sol.stop, Stop::Completed);
        let (y, dy) = sol.eval(1.234).unwrap();
        assert!((y - 1.234f64.exp()).abs() < 1e-9);
        assert!((dy - 1.234f64.exp()).abs() < 1e-7);
        assert!((sol.eval(2.0).unwrap().0 - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn backward_integration() {
        let sol = dopri5(|x: f64, _| x.cos(), 1.0, 1f64.sin(), -1.0, &OdeOptions::default(), &[]).unwrap();
        assert!((sol.eval(-0.5).unwrap().0 - (-0.5f64).sin()).abs() < 1e-10);
    }

    #[test]
    fn event_is_located() {
        // y = 1 - x^2 crosses zero at x = 1
        let g = |_x: f64, y: f64| y;
        let sol = dopri5(|x, _| -2.0 * x, 0.0, 1.0, 3.0, &OdeOptions::default(), &[&g]).unwrap();
        match sol.stop {
            Stop::Event { index: 0, x } => assert!((x - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
