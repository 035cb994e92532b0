//! Rectangular (x, t) lattices and the fields sampled on them.
//!
//! Storage is row-major by time: `values[j * nx + i]` is the value at
//! `(xs[i], ts[j])`.

use crate::families::{frame_coeffs, FamilyError, FamilySpec, FrameCoeffs};
use crate::jetspace::JetGrid;
use crate::scalar::Scalar;
use crate::secondform::Sff;

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice<T> {
    pub xs: Vec<T>,
    pub ts: Vec<T>,
    /// Wrap x-differences around (periodic solver grids).
    pub periodic_x: bool,
}

impl<T: Scalar> Lattice<T> {
    pub fn uniform(x0: T, dx: T, nx: usize, t0: T, dt: T, nt: usize, periodic_x: bool) -> Self {
        Self {
            xs: (0..nx).map(|i| x0 + T::of_usize(i) * dx).collect(),
            ts: (0..nt).map(|j| t0 + T::of_usize(j) * dt).collect(),
            periodic_x,
        }
    }

    pub fn from_jet_grid(g: &JetGrid<T>) -> Self {
        Self { xs: g.xs.clone(), ts: g.times.clone(), periodic_x: true }
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn nt(&self) -> usize {
        self.ts.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.nt()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn dx(&self) -> T {
        if self.nx() < 2 {
            T::one()
        } else {
            self.xs[1] - self.xs[0]
        }
    }

    pub fn dt(&self) -> T {
        if self.nt() < 2 {
            T::one()
        } else {
            self.ts[1] - self.ts[0]
        }
    }

    fn x_neighbours(&self, i: usize) -> Option<(usize, usize)> {
        let n = self.nx();
        if n < 3 {
            return None;
        }
        if i > 0 && i + 1 < n {
            Some((i - 1, i + 1))
        } else if self.periodic_x {
            Some(((i + n - 1) % n, (i + 1) % n))
        } else {
            None
        }
    }

    /// Central x-difference; `None` on a non-periodic edge.
    pub fn diff_x(&self, v: &[T], i: usize, j: usize) -> Option<T> {
        let (l, r) = self.x_neighbours(i)?;
        Some((v[self.idx(r, j)] - v[self.idx(l, j)]) / (self.dx() + self.dx()))
    }

    /// Central t-difference; `None` on the first and last rows.
    pub fn diff_t(&self, v: &[T], i: usize, j: usize) -> Option<T> {
        if j == 0 || j + 1 >= self.nt() {
            return None;
        }
        Some((v[self.idx(i, j + 1)] - v[self.idx(i, j - 1)]) / (self.dt() + self.dt()))
    }

    pub fn diff_xx(&self, v: &[T], i: usize, j: usize) -> Option<T> {
        let (l, r) = self.x_neighbours(i)?;
        let dx = self.dx();
        Some((v[self.idx(r, j)] - v[self.idx(i, j)] - v[self.idx(i, j)] + v[self.idx(l, j)]) / (dx * dx))
    }

    pub fn diff_tt(&self, v: &[T], i: usize, j: usize) -> Option<T> {
        if j == 0 || j + 1 >= self.nt() {
            return None;
        }
        let dt = self.dt();
        Some((v[self.idx(i, j + 1)] - v[self.idx(i, j)] - v[self.idx(i, j)] + v[self.idx(i, j - 1)]) / (dt * dt))
    }

    pub fn diff_xt(&self, v: &[T], i: usize, j: usize) -> Option<T> {
        let (l, r) = self.x_neighbours(i)?;
        if j == 0 || j + 1 >= self.nt() {
            return None;
        }
        let q = T::of(4.0) * self.dx() * self.dt();
        Some((v[self.idx(r, j + 1)] - v[self.idx(l, j + 1)] - v[self.idx(r, j - 1)] + v[self.idx(l, j - 1)]) / q)
    }

    /// Whether both first differences exist at (i, j).
    pub fn interior(&self, i: usize, j: usize) -> bool {
        self.x_neighbours(i).is_some() && j > 0 && j + 1 < self.nt()
    }
}

/// Frame coefficients at every lattice point.
#[derive(Clone, Debug)]
pub struct FrameField<T> {
    pub lattice: Lattice<T>,
    pub f: Vec<FrameCoeffs<T>>,
}

impl<T: Scalar> FrameField<T> {
    pub fn from_fn(lattice: Lattice<T>, mut f: impl FnMut(T, T) -> FrameCoeffs<T>) -> Self {
        let mut out = Vec::with_capacity(lattice.len());
        for &t in &lattice.ts {
            for &x in &lattice.xs {
                out.push(f(x, t));
            }
        }
        Self { lattice, f: out }
    }

    pub fn from_jets(spec: &FamilySpec<T>, jets: &JetGrid<T>) -> Result<Self, FamilyError> {
        let f = jets.jets.iter().map(|j| frame_coeffs(spec, j)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { lattice: Lattice::from_jet_grid(jets), f })
    }

    /// Field of one coefficient `f[r][c]`.
    pub fn component(&self, r: usize, c: usize) -> Vec<T> {
        self.f.iter().map(|fc| fc.f[r][c]).collect()
    }
}

/// Second fundamental form at every lattice point; `mask[k]` excludes a point.
#[derive(Clone, Debug)]
pub struct SffField<T> {
    pub lattice: Lattice<T>,
    pub sff: Vec<Sff<T>>,
    pub mask: Vec<bool>,
}

impl<T: Scalar> SffField<T> {
    /// Samples a pointwise form; failures and non-finite values are masked.
    pub fn from_fn<E>(lattice: Lattice<T>, mut f: impl FnMut(usize, T, T) -> Result<Sff<T>, E>) -> Self {
        let mut sff = Vec::with_capacity(lattice.len());
        let mut mask = Vec::with_capacity(lattice.len());
        let mut k = 0;
        for &t in &lattice.ts {
            for &x in &lattice.xs {
                match f(k, x, t) {
                    Ok(s) if s.a.is_finite() && s.b.is_finite() && s.c.is_finite() => {
                        sff.push(s);
                        mask.push(false);
                    }
                    _ => {
                        sff.push(Sff::new(T::zero(), T::zero(), T::zero()));
                        mask.push(true);
                    }
                }
                k += 1;
            }
        }
        Self { lattice, sff, mask }
    }

    pub fn a(&self) -> Vec<T> {
        self.sff.iter().map(|s| s.a).collect()
    }

    pub fn b(&self) -> Vec<T> {
        self.sff.iter().map(|s| s.b).collect()
    }

    pub fn c(&self) -> Vec<T> {
        self.sff.iter().map(|s| s.c).collect()
    }
}

/// Residual fields on a lattice; `None` where a stencil is unavailable or masked.
#[derive(Clone, Debug)]
pub struct LatticeResidual<T> {
    pub names: Vec<&'static str>,
    pub values: Vec<Vec<Option<T>>>,
}

impl<T: Scalar> LatticeResidual<T> {
    pub fn max_abs(&self, k: usize) -> T {
        self.values[k].iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest residual over every field.
    pub fn max_all(&self) -> T {
        (0..self.values.len()).map(|k| self.max_abs(k)).fold(T::zero(), T::max)
    }

    pub fn defined_points(&self) -> usize {
        self.values.first().map(|v| v.iter().filter(|x| x.is_some()).count()).unwrap_or(0)
    }
}

/// Convergence order `log2(e_coarse / e_fine)` for one halving.
pub fn observed_order<T: Scalar>(coarse: T, fine: T) -> T {
    (coarse / fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differences_of_quadratic() {
        let lat = Lattice::uniform(0.0, 0.1, 8, 0.0, 0.2, 6, false);
        let v: Vec<f64> = (0..lat.len())
            .map(|k| {
                let (x, t) = (lat.xs[k % 8], lat.ts[k / 8]);
                x * x + 3.0 * x * t - t * t
            })
            .collect();
        let (i, j) = (3, 2);
        let (x, t) = (lat.xs[i], lat.ts[j]);
        assert!((lat.diff_x(&v, i, j).unwrap() - (2.0 * x + 3.0 * t)).abs() < 1e-12);
        assert!((lat.diff_t(&v, i, j).unwrap() - (3.0 * x - 2.0 * t)).abs() < 1e-12);
        assert!((lat.diff_xx(&v, i, j).unwrap() - 2.0).abs() < 1e-9);
        assert!((lat.diff_tt(&v, i, j).unwrap() + 2.0).abs() < 1e-9);
        assert!((lat.diff_xt(&v, i, j).unwrap() - 3.0).abs() < 1e-9);
        assert!(lat.diff_x(&v, 0, j).is_none());
        assert!(lat.diff_t(&v, i, 0).is_none());
    }

    #[test]
    fn periodic_wraps() {
        let lat = Lattice::uniform(0.0, 1.0, 4, 0.0, 1.0, 3, true);
        let v = vec![0.0, 1.0, 2.0, 3.0, 0.0, 1.0, 2.0, 3.0, 0.0, 1.0, 2.0, 3.0];
        assert_eq!(lat.diff_x(&v, 0, 1), Some((1.0 - 3.0) / 2.0));
    }
}
