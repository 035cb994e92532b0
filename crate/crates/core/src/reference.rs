//! Ready-made inputs on exact solutions: the linear T2 member and the
//! sine-Gordon kink, and the chained frame → surface run used by the CLI.

use thiserror::Error;

use crate::families::{frame_coeffs, presets, FamilyError, FamilySpec};
use crate::immersion::{analyze, integrate_frame, linear_problem_integrate, ImmersionError, LinearProblemField, Mesh, SurfaceReport};
use crate::lattice::{FrameField, Lattice, LatticeResidual, SffField};
use crate::jetspace::{extract_jets, JetError, Stencil};
use crate::pdesolver::{solve, ExactLinear, Grid1D, PdeError, SineGordonKink, SolveOptions};
use crate::scalar::Scalar;
use crate::secondform::{codazzi_residual, sine_gordon_sff, universal_for, SffError, UniversalChoice};
use crate::verifier::{nondegeneracy, structure_residual, DEFAULT_MASK_THRESHOLD};

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("window [{0}, {1}] x [{2}, {3}] holds fewer than 3 x 3 grid points")]
    EmptyWindow(f64, f64, f64, f64),
    #[error("exact solutions exist only for the T2 branch, not {0}")]
    NotLinear(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Sff(#[from] SffError),
    #[error(transparent)]
    Immersion(#[from] ImmersionError),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Rectangle in (x, t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window<T> {
    pub x0: T,
    pub x1: T,
    pub t0: T,
    pub t1: T,
}

impl<T: Scalar> Window<T> {
    pub fn new(x0: T, x1: T, t0: T, t1: T) -> Self {
        Self { x0, x1, t0, t1 }
    }

    /// Default window for the linear member with k = 1: inside the Prop 1(i)
    /// strip for σ = 3, β = 0.5, and `x + t/2 ≤ 1` so that `u = e^{t/2}cos(x + t/2)`
    /// (hence Δ12 and EG − F²) stays well away from zero.
    pub fn linear_default() -> Self {
        Self::new(T::zero(), T::of(0.6), T::zero(), T::of(0.8))
    }

    /// Default sine-Gordon window, clear of the kink centre `x + t = 0`.
    pub fn sine_gordon_default() -> Self {
        Self::new(T::of(0.2), T::of(1.2), T::of(0.2), T::of(1.2))
    }

    /// Nodes `k·h` inside the window in each direction.
    pub fn lattice(&self, h: T) -> Result<Lattice<T>, ReferenceError> {
        let nodes = |a: T, b: T| -> Vec<T> {
            let first = (a / h).ceil().to_i64().unwrap_or(0);
            let last = (b / h).floor().to_i64().unwrap_or(-1);
            (first..=last).map(|k| T::of(k as f64) * h).collect()
        };
        let (xs, ts) = (nodes(self.x0, self.x1), nodes(self.t0, self.t1));
        if xs.len() < 3 || ts.len() < 3 {
            return Err(ReferenceError::EmptyWindow(
                self.x0.to_f64_lossy(),
                self.x1.to_f64_lossy(),
                self.t0.to_f64_lossy(),
                self.t1.to_f64_lossy(),
            ));
        }
        Ok(Lattice { xs, ts, periodic_x: false })
    }
}

/// Spacing of an `n`-point periodic grid on `[0, 2π)`.
pub fn periodic_spacing<T: Scalar>(n: usize) -> T {
    T::TAU() / T::of_usize(n)
}

/// Frames of `spec` along an exact linear solution, from analytic jets.
pub fn linear_frames<T: Scalar>(spec: &FamilySpec<T>, exact: &ExactLinear<T>, lattice: &Lattice<T>) -> Result<FrameField<T>, FamilyError> {
    let order = spec.frame_order().max(1);
    let mut f = Vec::with_capacity(lattice.len());
    for &t in &lattice.ts {
        for &x in &lattice.xs {
            f.push(frame_coeffs(spec, &exact.jet(x, t, order))?);
        }
    }
    Ok(FrameField { lattice: lattice.clone(), f })
}

/// Light-cone sine-Gordon frames and `(tan(u/2), 0, −cot(u/2))` on the kink.
pub fn sine_gordon_fields<T: Scalar>(lattice: &Lattice<T>) -> Result<(FrameField<T>, SffField<T>), FamilyError> {
    let spec = presets::sine_gordon_lightcone::<T>();
    let kink = SineGordonKink;
    let mut f = Vec::with_capacity(lattice.len());
    for &t in &lattice.ts {
        for &x in &lattice.xs {
            f.push(frame_coeffs(&spec, &kink.jet(x, t))?);
        }
    }
    let sff = SffField::from_fn(lattice.clone(), |_, x, t| sine_gordon_sff(kink.value(x, t)));
    Ok((FrameField { lattice: lattice.clone(), f }, sff))
}

/// Everything computed by one frame → surface run.
#[derive(Clone, Debug)]
pub struct SurfaceRun<T> {
    pub frames: FrameField<T>,
    pub sff: SffField<T>,
    /// Nondegeneracy mask joined with the second-form mask.
    pub mask: Vec<bool>,
    pub structure: LatticeResidual<T>,
    pub codazzi: LatticeResidual<T>,
    pub mesh: Mesh<T>,
    pub report: SurfaceReport<T>,
    pub linear_problem: LinearProblemField<T>,
}

pub fn run_surface<T: Scalar>(frames: FrameField<T>, sff: SffField<T>) -> Result<SurfaceRun<T>, ReferenceError> {
    let nd = nondegeneracy(&frames.f, T::of(DEFAULT_MASK_THRESHOLD));
    let mask: Vec<bool> = nd.mask.iter().zip(&sff.mask).map(|(a, b)| *a || *b).collect();
    let structure = structure_residual(&frames, Some(&mask));
    let codazzi = codazzi_residual(&frames, &sff);
    let mesh = integrate_frame(&frames, &sff, &mask, None)?;
    let report = analyze(&mesh, &frames, &sff)?;
    let linear_problem = linear_problem_integrate(&frames, &mask, Some(mesh.anchor), [T::one(), T::zero()])?;
    Ok(SurfaceRun { frames, sff, mask, structure, codazzi, mesh, report, linear_problem })
}

/// The chained linear-member run: exact solution of wavenumber `k` on the
/// `n`-point periodic grid (Δt = Δx), restricted to `window`, with the
/// universal second fundamental form of the family.
pub fn linear_surface<T: Scalar>(
    spec: &FamilySpec<T>,
    k: u32,
    n: usize,
    window: Window<T>,
    choice: UniversalChoice<T>,
) -> Result<SurfaceRun<T>, ReferenceError> {
    let frames = exact_linear_frames(spec, k, n, window)?;
    let sff = universal_for(spec, choice)?.field(&frames.lattice)?;
    run_surface(frames, sff)
}

/// Sub-field of `frames` on the nodes that fall inside `window`.
pub fn restrict<T: Scalar>(frames: &FrameField<T>, window: &Window<T>) -> Result<FrameField<T>, ReferenceError> {
    let lat = &frames.lattice;
    let is: Vec<usize> = (0..lat.nx()).filter(|&i| lat.xs[i] >= window.x0 && lat.xs[i] <= window.x1).collect();
    let js: Vec<usize> = (0..lat.nt()).filter(|&j| lat.ts[j] >= window.t0 && lat.ts[j] <= window.t1).collect();
    if is.len() < 3 || js.len() < 3 {
        let w = window;
        return Err(ReferenceError::EmptyWindow(
            w.x0.to_f64_lossy(),
            w.x1.to_f64_lossy(),
            w.t0.to_f64_lossy(),
            w.t1.to_f64_lossy(),
        ));
    }
    let sub = Lattice { xs: is.iter().map(|&i| lat.xs[i]).collect(), ts: js.iter().map(|&j| lat.ts[j]).collect(), periodic_x: false };
    let f = js.iter().flat_map(|&j| is.iter().map(move |&i| frames.f[lat.idx(i, j)])).collect();
    Ok(FrameField { lattice: sub, f })
}

/// Frames along a numerical solution: `u0` on the `n`-point periodic grid is
/// evolved by the spectral solver with four RK4 steps per snapshot and
/// snapshots every Δx in time; jets come from fourth-order differences.
pub fn solved_frames<T: Scalar>(spec: &FamilySpec<T>, u0: &[T], n: usize, window: Window<T>) -> Result<FrameField<T>, ReferenceError> {
    let grid = Grid1D::two_pi(n)?;
    let dx = grid.dx();
    let snaps = (window.t1 / dx).ceil().to_usize().unwrap_or(0).max(2);
    let opts = SolveOptions { snapshot_every: 4, ..Default::default() };
    let (field, _) = solve(spec, u0, grid, dx / T::of(4.0), T::of_usize(snaps) * dx, opts)?;
    let jets = extract_jets(&field, spec.frame_order().max(1), Stencil::Order4)?;
    restrict(&FrameField::from_jets(spec, &jets)?, &window)
}

/// [`solved_frames`] followed by the universal form and [`run_surface`].
pub fn solved_surface<T: Scalar>(
    spec: &FamilySpec<T>,
    u0: &[T],
    n: usize,
    window: Window<T>,
    choice: UniversalChoice<T>,
) -> Result<SurfaceRun<T>, ReferenceError> {
    let frames = solved_frames(spec, u0, n, window)?;
    let sff = universal_for(spec, choice)?.field(&frames.lattice)?;
    run_surface(frames, sff)
}

/// Frames of `spec` along the exact linear solution of wavenumber `k` on spacing `2π/n`.
pub fn exact_linear_frames<T: Scalar>(spec: &FamilySpec<T>, k: u32, n: usize, window: Window<T>) -> Result<FrameField<T>, ReferenceError> {
    let m = match spec {
        FamilySpec::T2(b) => b.m,
        _ => return Err(ReferenceError::NotLinear(spec.branch_name().to_string())),
    };
    let exact = ExactLinear::new(m, k, T::one())?;
    let lattice = window.lattice(periodic_spacing(n))?;
    Ok(linear_frames(spec, &exact, &lattice)?)
}

/// The sine-Gordon kink run on spacing `2π/n`.
pub fn sine_gordon_surface<T: Scalar>(n: usize, window: Window<T>) -> Result<SurfaceRun<T>, ReferenceError> {
    let lattice = window.lattice(periodic_spacing(n))?;
    let (frames, sff) = sine_gordon_fields(&lattice)?;
    run_surface(frames, sff)
}
