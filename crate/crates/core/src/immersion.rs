//! Reconstruction of the surface in E³ from frame coefficients and a second
//! fundamental form, plus the 2×2 linear problem and the metric checks.
//!
//! Integration follows two lattice paths from an anchor vertex: `TThenX` walks
//! the anchor column in t and then every row in x, `XThenT` walks the anchor
//! row first. Both are RK2 (Heun) with coefficients taken at lattice nodes. The
//! mesh is the `TThenX` result; the per-vertex distance between the two is the
//! closure defect.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::families::FrameCoeffs;
use crate::lattice::{FrameField, Lattice, SffField};
use crate::scalar::Scalar;
use crate::secondform::Sff;

pub const RENORM_EVERY: usize = 16;
pub const DRIFT_LIMIT: f64 = 1e-4;
pub const ANCHOR_TOL: f64 = 1e-8;
/// Lower bound on `EG − F²` and on `|det J|`.
pub const METRIC_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ImmersionError {
    #[error("masked region: {0}")]
    MaskedRegion(String),
    #[error("frame drift {drift:e} exceeds {limit:e} at vertex {vertex}")]
    FrameDrift { drift: f64, limit: f64, vertex: usize },
    #[error("anchor frame is not orthonormal (deviation {0:e})")]
    NonOrthonormalAnchor(f64),
    #[error("degenerate metric at vertex {0}")]
    DegenerateMetric(usize),
    #[error("field sizes differ from the lattice")]
    ShapeMismatch,
    #[error("OBJ line {line}: {msg}")]
    ObjParse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type V3<T> = [T; 3];

fn dot<T: Scalar>(a: &V3<T>, b: &V3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn axpy<T: Scalar>(a: T, x: &V3<T>, y: &V3<T>) -> V3<T> {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2]]
}

fn norm<T: Scalar>(a: &V3<T>) -> T {
    dot(a, a).sqrt()
}

/// Position and orthonormal frame `(e1, e2, e3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameState<T> {
    pub x: V3<T>,
    pub e: [V3<T>; 3],
}

impl<T: Scalar> FrameState<T> {
    /// Origin with the standard basis.
    pub fn standard() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self { x: [z; 3], e: [[o, z, z], [z, o, z], [z, z, o]] }
    }

    /// `max |e_i·e_j − δ_ij|`.
    pub fn orthonormality_error(&self) -> T {
        let mut m = T::zero();
        for i in 0..3 {
            for j in i..3 {
                let d = if i == j { T::one() } else { T::zero() };
                m = m.max((dot(&self.e[i], &self.e[j]) - d).abs());
            }
        }
        m
    }

    /// Gram–Schmidt in the order e1, e2, e3.
    pub fn renormalize(&mut self) {
        let [e1, e2, e3] = self.e;
        let e1 = scale(T::one() / norm(&e1), &e1);
        let e2 = axpy(-dot(&e2, &e1), &e1, &e2);
        let e2 = scale(T::one() / norm(&e2), &e2);
        let e3 = axpy(-dot(&e3, &e1), &e1, &e3);
        let e3 = axpy(-dot(&e3, &e2), &e2, &e3);
        let e3 = scale(T::one() / norm(&e3), &e3);
        self.e = [e1, e2, e3];
    }

    fn pack(&self) -> [T; 12] {
        let mut y = [T::zero(); 12];
        y[..3].copy_from_slice(&self.x);
        for k in 0..3 {
            y[3 + 3 * k..6 + 3 * k].copy_from_slice(&self.e[k]);
        }
        y
    }

    fn unpack(y: &[T; 12]) -> Self {
        let v = |o: usize| [y[o], y[o + 1], y[o + 2]];
        Self { x: v(0), e: [v(3), v(6), v(9)] }
    }
}

fn scale<T: Scalar>(a: T, x: &V3<T>) -> V3<T> {
    [a * x[0], a * x[1], a * x[2]]
}

/// Connection data along one lattice direction: `ω1, ω2, ω3` components and
/// `ω13 = p`, `ω23 = q`.
#[derive(Clone, Copy, Debug)]
struct FrameRates<T> {
    w: [T; 3],
    p: T,
    q: T,
}

fn frame_rates<T: Scalar>(f: &FrameCoeffs<T>, s: &Sff<T>, col: usize) -> FrameRates<T> {
    let w = [f.f[0][col], f.f[1][col], f.f[2][col]];
    FrameRates { w, p: s.a * w[0] + s.b * w[1], q: s.b * w[0] + s.c * w[1] }
}

fn frame_rhs<T: Scalar>(r: &FrameRates<T>, y: &[T; 12]) -> [T; 12] {
    let st = FrameState::unpack(y);
    let [e1, e2, e3] = st.e;
    let z = [T::zero(); 3];
    let dx = axpy(r.w[1], &e2, &axpy(r.w[0], &e1, &z));
    let de1 = axpy(r.p, &e3, &scale(r.w[2], &e2));
    let de2 = axpy(r.q, &e3, &scale(-r.w[2], &e1));
    let de3 = axpy(-r.q, &e2, &scale(-r.p, &e1));
    FrameState { x: dx, e: [de1, de2, de3] }.pack()
}

/// `Ω = ½[[ω2, ω1 − ω3], [ω1 + ω3, −ω2]]` along one direction.
fn lax_rhs<T: Scalar>(w: &[T; 3], v: &[T; 2]) -> [T; 2] {
    let h = T::of(0.5);
    [h * (w[1] * v[0] + (w[0] - w[2]) * v[1]), h * ((w[0] + w[2]) * v[0] - w[1] * v[1])]
}

fn heun<T: Scalar, C, const N: usize>(y: &[T; N], h: T, c0: &C, c1: &C, rhs: &impl Fn(&C, &[T; N]) -> [T; N]) -> [T; N] {
    let k1 = rhs(c0, y);
    let mut pred = *y;
    for i in 0..N {
        pred[i] = y[i] + h * k1[i];
    }
    let k2 = rhs(c1, &pred);
    let mut out = *y;
    let half = T::of(0.5);
    for i in 0..N {
        out[i] = y[i] + half * h * (k1[i] + k2[i]);
    }
    out
}

/// Order in which the lattice is swept from the anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathOrder {
    /// Anchor column in t, then each row in x.
    TThenX,
    /// Anchor row in x, then each column in t.
    XThenT,
}

/// Optional per-step renormalization: returns the drift seen before fixing.
type Renorm<'a, T, const N: usize> = &'a (dyn Fn(&mut [T; N]) -> T + Sync);

struct Sweep<'a, T, C, F, const N: usize> {
    lat: &'a Lattice<T>,
    cx: &'a [C],
    ct: &'a [C],
    mask: &'a [bool],
    rhs: F,
    renorm: Option<Renorm<'a, T, N>>,
}

impl<T: Scalar, C: Sync, F: Fn(&C, &[T; N]) -> [T; N] + Sync, const N: usize> Sweep<'_, T, C, F, N> {
    /// Walks one line of vertex indices `path` starting from `y0` at `path[0]`;
    /// stops at the first masked vertex. Returns `(index, state)` pairs and the
    /// largest drift seen.
    fn line(&self, path: &[usize], along_x: bool, y0: [T; N]) -> Result<(Vec<(usize, [T; N])>, T), ImmersionError> {
        let coeff = if along_x { self.cx } else { self.ct };
        let coord = |k: usize| if along_x { self.lat.xs[k % self.lat.nx()] } else { self.lat.ts[k / self.lat.nx()] };
        let mut out = vec![(path[0], y0)];
        let mut y = y0;
        let mut drift = T::zero();
        for (step, w) in path.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            if self.mask[b] {
                break;
            }
            y = heun(&y, coord(b) - coord(a), &coeff[a], &coeff[b], &self.rhs);
            if let Some(r) = self.renorm {
                if (step + 1) % RENORM_EVERY == 0 {
                    let d = r(&mut y);
                    drift = drift.max(d);
                    if d > T::of(DRIFT_LIMIT) || !d.is_finite() {
                        return Err(ImmersionError::FrameDrift {
                            drift: d.to_f64_lossy(),
                            limit: DRIFT_LIMIT,
                            vertex: b,
                        });
                    }
                }
            }
            out.push((b, y));
        }
        Ok((out, drift))
    }

    /// Vertices from `start` to the lattice edge and back, split in two halves.
    fn bidirectional(
        &self,
        along_x: bool,
        fixed: usize,
        start: usize,
        y0: [T; N],
    ) -> Result<(Vec<(usize, [T; N])>, T), ImmersionError> {
        let (nx, nt) = (self.lat.nx(), self.lat.nt());
        let idx = |s: usize| if along_x { fixed * nx + s } else { s * nx + fixed };
        let len = if along_x { nx } else { nt };
        let fwd: Vec<usize> = (start..len).map(idx).collect();
        let back: Vec<usize> = (0..=start).rev().map(idx).collect();
        let (mut a, d1) = self.line(&fwd, along_x, y0)?;
        let (b, d2) = self.line(&back, along_x, y0)?;
        a.extend(b.into_iter().skip(1));
        Ok((a, d1.max(d2)))
    }

    fn run(&self, anchor: usize, y0: [T; N], order: PathOrder) -> Result<(Vec<Option<[T; N]>>, T), ImmersionError> {
        let nx = self.lat.nx();
        let (ai, aj) = (anchor % nx, anchor / nx);
        let first_x = order == PathOrder::XThenT;
        let (fixed, start) = if first_x { (aj, ai) } else { (ai, aj) };
        let (spine, mut drift) = self.bidirectional(first_x, fixed, start, y0)?;
        let lines: Vec<_> = spine
            .par_iter()
            .map(|&(k, y)| {
                let (fixed, start) = if first_x { (k % nx, k / nx) } else { (k / nx, k % nx) };
                self.bidirectional(!first_x, fixed, start, y)
            })
            .collect::<Result<_, _>>()?;
        let mut out = vec![None; self.lat.len()];
        for (line, d) in lines {
            drift = drift.max(d);
            for (k, y) in line {
                out[k] = Some(y);
            }
        }
        Ok((out, drift))
    }
}

fn check_shapes<T: Scalar>(frames: &FrameField<T>, n: &[usize]) -> Result<(), ImmersionError> {
    let len = frames.lattice.len();
    if frames.f.len() != len || n.iter().any(|&m| m != len) || len == 0 {
        return Err(ImmersionError::ShapeMismatch);
    }
    Ok(())
}

/// First unmasked vertex in row-major order (lowest t, then lowest x).
pub fn default_anchor(mask: &[bool]) -> Option<usize> {
    mask.iter().position(|m| !m)
}

/// Surface mesh on a lattice.
#[derive(Clone, Debug)]
pub struct Mesh<T> {
    pub lattice: Lattice<T>,
    pub vertices: Vec<V3<T>>,
    /// `(e1, e2, e3)` per vertex.
    pub frames: Vec<[V3<T>; 3]>,
    /// Excluded vertices: input mask plus vertices the sweep could not reach.
    pub mask: Vec<bool>,
    /// `|X_TThenX − X_XThenT|` where both sweeps reached the vertex.
    pub closure_defect: Vec<Option<T>>,
    pub anchor: usize,
    /// Largest orthonormality error seen before a renormalization.
    pub max_drift: T,
}

impl<T: Scalar> Mesh<T> {
    pub fn max_closure_defect(&self) -> T {
        self.closure_defect.iter().flatten().fold(T::zero(), |m, v| m.max(*v))
    }

    /// Quads `(i,j) (i+1,j) (i+1,j+1) (i,j+1)` with all corners unmasked.
    pub fn quads(&self) -> Vec<[usize; 4]> {
        let (nx, nt) = (self.lattice.nx(), self.lattice.nt());
        let mut q = Vec::new();
        for j in 0..nt.saturating_sub(1) {
            for i in 0..nx.saturating_sub(1) {
                let c = [j * nx + i, j * nx + i + 1, (j + 1) * nx + i + 1, (j + 1) * nx + i];
                if c.iter().all(|&k| !self.mask[k]) {
                    q.push(c);
                }
            }
        }
        q
    }
}

/// Integrates position and frame over the lattice.
///
/// `mask` marks excluded vertices (nondegeneracy, singular forms); sweeps stop
/// at them. `anchor` defaults to [`default_anchor`] with [`FrameState::standard`].
pub fn integrate_frame<T: Scalar>(
    frames: &FrameField<T>,
    sff: &SffField<T>,
    mask: &[bool],
    anchor: Option<(usize, FrameState<T>)>,
) -> Result<Mesh<T>, ImmersionError> {
    check_shapes(frames, &[sff.sff.len(), sff.mask.len(), mask.len()])?;
    let lat = &frames.lattice;
    let full_mask: Vec<bool> = mask.iter().zip(&sff.mask).map(|(a, b)| *a || *b).collect();
    let (anchor, state) = match anchor {
        Some(a) => a,
        None => {
            let k = default_anchor(&full_mask).ok_or_else(|| ImmersionError::MaskedRegion("every vertex is masked".into()))?;
            (k, FrameState::standard())
        }
    };
    if anchor >= lat.len() || full_mask[anchor] {
        return Err(ImmersionError::MaskedRegion(format!("anchor vertex {anchor} is masked")));
    }
    let dev = state.orthonormality_error();
    if !(dev < T::of(ANCHOR_TOL)) {
        return Err(ImmersionError::NonOrthonormalAnchor(dev.to_f64_lossy()));
    }
    let cx: Vec<FrameRates<T>> = frames.f.iter().zip(&sff.sff).map(|(f, s)| frame_rates(f, s, 0)).collect();
    let ct: Vec<FrameRates<T>> = frames.f.iter().zip(&sff.sff).map(|(f, s)| frame_rates(f, s, 1)).collect();
    let renorm = |y: &mut [T; 12]| {
        let mut st = FrameState::unpack(y);
        let d = st.orthonormality_error();
        st.renormalize();
        *y = st.pack();
        d
    };
    let sweep = Sweep { lat, cx: &cx, ct: &ct, mask: &full_mask, rhs: frame_rhs, renorm: Some(&renorm) };
    let (primary, d1) = sweep.run(anchor, state.pack(), PathOrder::TThenX)?;
    let (secondary, d2) = sweep.run(anchor, state.pack(), PathOrder::XThenT)?;
    let zero = FrameState::standard();
    let mut vertices = Vec::with_capacity(lat.len());
    let mut fr = Vec::with_capacity(lat.len());
    let mut out_mask = Vec::with_capacity(lat.len());
    let mut closure = Vec::with_capacity(lat.len());
    for (k, p) in primary.iter().enumerate() {
        let st = p.as_ref().map(FrameState::unpack);
        let s = st.unwrap_or(FrameState { x: [T::zero(); 3], ..zero });
        vertices.push(s.x);
        fr.push(s.e);
        out_mask.push(st.is_none() || full_mask[k]);
        closure.push(match (st, secondary[k].as_ref()) {
            (Some(a), Some(b)) => {
                let b = FrameState::unpack(b);
                Some(norm(&axpy(-T::one(), &b.x, &a.x)))
            }
            _ => None,
        });
    }
    Ok(Mesh {
        lattice: lat.clone(),
        vertices,
        frames: fr,
        mask: out_mask,
        closure_defect: closure,
        anchor,
        max_drift: d1.max(d2),
    })
}

/// Solution of the linear problem along the lexicographic sweep.
#[derive(Clone, Debug)]
pub struct LinearProblemField<T> {
    pub lattice: Lattice<T>,
    pub v: Vec<Option<[T; 2]>>,
    /// `|v_TThenX − v_XThenT|` per vertex.
    pub defect: Vec<Option<T>>,
}

impl<T: Scalar> LinearProblemField<T> {
    pub fn max_defect(&self) -> T {
        self.defect.iter().flatten().fold(T::zero(), |m, v| m.max(*v))
    }
}

/// Integrates `dv¹ = ½(ω2 v¹ + (ω1 − ω3) v²)`, `dv² = ½((ω1 + ω3) v¹ − ω2 v²)`
/// from `v0` at the anchor along both sweep orders.
pub fn linear_problem_integrate<T: Scalar>(
    frames: &FrameField<T>,
    mask: &[bool],
    anchor: Option<usize>,
    v0: [T; 2],
) -> Result<LinearProblemField<T>, ImmersionError> {
    check_shapes(frames, &[mask.len()])?;
    let lat = &frames.lattice;
    let anchor = match anchor {
        Some(a) => a,
        None => default_anchor(mask).ok_or_else(|| ImmersionError::MaskedRegion("every vertex is masked".into()))?,
    };
    if anchor >= lat.len() || mask[anchor] {
        return Err(ImmersionError::MaskedRegion(format!("anchor vertex {anchor} is masked")));
    }
    let col = |c: usize| -> Vec<[T; 3]> { frames.f.iter().map(|f| [f.f[0][c], f.f[1][c], f.f[2][c]]).collect() };
    let (cx, ct) = (col(0), col(1));
    let sweep = Sweep { lat, cx: &cx, ct: &ct, mask, rhs: lax_rhs, renorm: None };
    let (a, _) = sweep.run(anchor, v0, PathOrder::TThenX)?;
    let (b, _) = sweep.run(anchor, v0, PathOrder::XThenT)?;
    let defect = a
        .iter()
        .zip(&b)
        .map(|(p, q)| match (p, q) {
            (Some(p), Some(q)) => Some((p[0] - q[0]).hypot(p[1] - q[1])),
            _ => None,
        })
        .collect();
    Ok(LinearProblemField { lattice: lat.clone(), v: a, defect })
}

/// `(E, F, G)` per vertex; `None` where a difference is unavailable.
#[derive(Clone, Debug)]
pub struct MetricField<T> {
    pub lattice: Lattice<T>,
    pub e: Vec<Option<T>>,
    pub f: Vec<Option<T>>,
    pub g: Vec<Option<T>>,
}

/// NaN-filled copy, so that differences touching a hole come out non-finite.
fn with_holes<T: Scalar>(v: &[Option<T>]) -> Vec<T> {
    v.iter().map(|x| x.unwrap_or(T::nan())).collect()
}

fn finite<T: Scalar>(v: Option<T>) -> Option<T> {
    v.filter(|x| x.is_finite())
}

/// Vertex coordinates split into three NaN-holed component fields.
fn components<T: Scalar>(mesh: &Mesh<T>) -> [Vec<T>; 3] {
    let c = |d: usize| mesh.vertices.iter().zip(&mesh.mask).map(|(v, m)| if *m { T::nan() } else { v[d] }).collect();
    [c(0), c(1), c(2)]
}

type Diff<T> = fn(&Lattice<T>, &[T], usize, usize) -> Option<T>;

fn vector_diff<T: Scalar>(lat: &Lattice<T>, comp: &[Vec<T>; 3], d: Diff<T>, i: usize, j: usize) -> Option<V3<T>> {
    let v = [d(lat, &comp[0], i, j)?, d(lat, &comp[1], i, j)?, d(lat, &comp[2], i, j)?];
    v.iter().all(|x| x.is_finite()).then_some(v)
}

/// First fundamental form of the mesh by central differences.
pub fn induced_metric<T: Scalar>(mesh: &Mesh<T>) -> MetricField<T> {
    let lat = &mesh.lattice;
    let comp = components(mesh);
    let n = lat.len();
    let (mut e, mut f, mut g) = (vec![None; n], vec![None; n], vec![None; n]);
    for j in 0..lat.nt() {
        for i in 0..lat.nx() {
            let k = lat.idx(i, j);
            if mesh.mask[k] {
                continue;
            }
            let xu = vector_diff(lat, &comp, Lattice::diff_x, i, j);
            let xv = vector_diff(lat, &comp, Lattice::diff_t, i, j);
            if let (Some(xu), Some(xv)) = (xu, xv) {
                e[k] = Some(dot(&xu, &xu));
                f[k] = Some(dot(&xu, &xv));
                g[k] = Some(dot(&xv, &xv));
            }
        }
    }
    MetricField { lattice: lat.clone(), e, f, g }
}

/// `E = f11² + f21²`, `F = f11 f12 + f21 f22`, `G = f12² + f22²`.
pub fn theoretical_metric<T: Scalar>(f: &FrameCoeffs<T>) -> (T, T, T) {
    let [[f11, f12], [f21, f22], _] = f.f;
    (f11 * f11 + f21 * f21, f11 * f12 + f21 * f22, f12 * f12 + f22 * f22)
}

fn det3<T: Scalar>(m: [[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Gaussian curvature by the Brioschi formula with u = x, v = t.
pub fn gaussian_curvature<T: Scalar>(metric: &MetricField<T>) -> Result<Vec<Option<T>>, ImmersionError> {
    let lat = &metric.lattice;
    let (e, f, g) = (with_holes(&metric.e), with_holes(&metric.f), with_holes(&metric.g));
    let h = T::of(0.5);
    let mut out = vec![None; lat.len()];
    for j in 0..lat.nt() {
        for i in 0..lat.nx() {
            let k = lat.idx(i, j);
            let (Some(ek), Some(fk), Some(gk)) = (metric.e[k], metric.f[k], metric.g[k]) else {
                continue;
            };
            let det = ek * gk - fk * fk;
            if det < T::of(METRIC_FLOOR) {
                return Err(ImmersionError::DegenerateMetric(k));
            }
            let d = |op: Diff<T>, v: &[T]| finite(op(lat, v, i, j));
            let parts = (
                d(Lattice::diff_x, &e),
                d(Lattice::diff_t, &e),
                d(Lattice::diff_x, &f),
                d(Lattice::diff_t, &f),
                d(Lattice::diff_x, &g),
                d(Lattice::diff_t, &g),
                d(Lattice::diff_tt, &e),
                d(Lattice::diff_xt, &f),
                d(Lattice::diff_xx, &g),
            );
            let (Some(eu), Some(ev), Some(fu), Some(fv), Some(gu), Some(gv), Some(evv), Some(fuv), Some(guu)) = parts
            else {
                continue;
            };
            let a = [
                [-h * evv + fuv - h * guu, h * eu, fu - h * ev],
                [fv - h * gu, ek, fk],
                [h * gv, fk, gk],
            ];
            let b = [[T::zero(), h * ev, h * gu], [h * ev, ek, fk], [h * gu, fk, gk]];
            out[k] = Some((det3(a) - det3(b)) / (det * det));
        }
    }
    Ok(out)
}

/// `(a, b, c)` from `e3`-projected second differences, mapped to the
/// `(ω1, ω2)` coframe as `J^{-T} [[L, M], [M, N]] J^{-1}`, `J = [[f11, f12], [f21, f22]]`.
pub fn second_form_recover<T: Scalar>(mesh: &Mesh<T>, frames: &FrameField<T>) -> Result<Vec<Option<Sff<T>>>, ImmersionError> {
    check_shapes(frames, &[mesh.vertices.len()])?;
    let lat = &mesh.lattice;
    let comp = components(mesh);
    let mut out = vec![None; lat.len()];
    for j in 0..lat.nt() {
        for i in 0..lat.nx() {
            let k = lat.idx(i, j);
            if mesh.mask[k] {
                continue;
            }
            let dd = |op: Diff<T>| vector_diff(lat, &comp, op, i, j);
            let (Some(xuu), Some(xuv), Some(xvv)) = (dd(Lattice::diff_xx), dd(Lattice::diff_xt), dd(Lattice::diff_tt))
            else {
                continue;
            };
            let n = &mesh.frames[k][2];
            let (l, m, nn) = (dot(&xuu, n), dot(&xuv, n), dot(&xvv, n));
            let [[f11, f12], [f21, f22], _] = frames.f[k].f;
            let det = f11 * f22 - f12 * f21;
            if det.abs() < T::of(METRIC_FLOOR) {
                return Err(ImmersionError::DegenerateMetric(k));
            }
            // J^{-1} = [[f22, −f12], [−f21, f11]] / det
            let inv = [[f22 / det, -f12 / det], [-f21 / det, f11 / det]];
            let q = [[l, m], [m, nn]];
            let mut r = [[T::zero(); 2]; 2];
            for (p, row) in r.iter_mut().enumerate() {
                for (s, cell) in row.iter_mut().enumerate() {
                    let mut acc = T::zero();
                    for u in 0..2 {
                        for v in 0..2 {
                            acc = acc + inv[u][p] * q[u][v] * inv[v][s];
                        }
                    }
                    *cell = acc;
                }
            }
            out[k] = Some(Sff::new(r[0][0], mean2(r[0][1], r[1][0]), r[1][1]));
        }
    }
    Ok(out)
}

fn mean2<T: Scalar>(a: T, b: T) -> T {
    (a + b) / T::of(2.0)
}

/// Per-vertex diagnostics of an immersed mesh.
#[derive(Clone, Debug)]
pub struct SurfaceRow<T> {
    pub x: T,
    pub t: T,
    pub metric: Option<(T, T, T)>,
    pub curvature: Option<T>,
    pub recovered: Option<Sff<T>>,
    pub closure_defect: Option<T>,
}

/// Metric, curvature and second-form checks against the inputs.
#[derive(Clone, Debug)]
pub struct SurfaceReport<T> {
    pub rows: Vec<SurfaceRow<T>>,
    /// `max ‖(E,F,G) − theory‖∞ / ‖theory‖∞`.
    pub metric_rel_error: T,
    pub mean_curvature: T,
    pub max_curvature_error: T,
    pub curvature_points: usize,
    /// `max |recovered − input|` over a, b, c.
    pub sff_error: T,
    pub max_closure: T,
    pub max_drift: T,
}

pub fn analyze<T: Scalar>(mesh: &Mesh<T>, frames: &FrameField<T>, sff: &SffField<T>) -> Result<SurfaceReport<T>, ImmersionError> {
    check_shapes(frames, &[mesh.vertices.len(), sff.sff.len()])?;
    let metric = induced_metric(mesh);
    let k = gaussian_curvature(&metric)?;
    let rec = second_form_recover(mesh, frames)?;
    let lat = &mesh.lattice;
    let mut rows = Vec::with_capacity(lat.len());
    let (mut rel, mut ksum, mut kmax, mut kn, mut serr) = (T::zero(), T::zero(), T::zero(), 0usize, T::zero());
    for idx in 0..lat.len() {
        let m = match (metric.e[idx], metric.f[idx], metric.g[idx]) {
            (Some(e), Some(f), Some(g)) => Some((e, f, g)),
            _ => None,
        };
        if let Some((e, f, g)) = m {
            let (et, ft, gt) = theoretical_metric(&frames.f[idx]);
            let scale = et.abs().max(ft.abs()).max(gt.abs());
            let d = (e - et).abs().max((f - ft).abs()).max((g - gt).abs());
            rel = rel.max(d / scale);
        }
        if let Some(kv) = k[idx] {
            ksum = ksum + kv;
            kmax = kmax.max((kv + T::one()).abs());
            kn += 1;
        }
        if let Some(r) = rec[idx] {
            let s = sff.sff[idx];
            serr = serr.max((r.a - s.a).abs()).max((r.b - s.b).abs()).max((r.c - s.c).abs());
        }
        rows.push(SurfaceRow {
            x: lat.xs[idx % lat.nx()],
            t: lat.ts[idx / lat.nx()],
            metric: m,
            curvature: k[idx],
            recovered: rec[idx],
            closure_defect: mesh.closure_defect[idx],
        });
    }
    let mean = if kn > 0 { ksum / T::of_usize(kn) } else { T::nan() };
    Ok(SurfaceReport {
        rows,
        metric_rel_error: rel,
        mean_curvature: mean,
        max_curvature_error: kmax,
        curvature_points: kn,
        sff_error: serr,
        max_closure: mesh.max_closure_defect(),
        max_drift: mesh.max_drift,
    })
}

/// `%g` with six significant digits.
pub fn fmt_g(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { format!("{v}") };
    }
    let sci = format!("{v:.5e}");
    let (mant, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if !(-4..6).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObjStats {
    pub vertices: usize,
    pub faces: usize,
}

/// Writes `v`/`vn`/`f` lines for the unmasked part of the mesh.
pub fn write_obj<T: Scalar, W: Write>(mesh: &Mesh<T>, mut w: W) -> Result<ObjStats, ImmersionError> {
    let mut remap = vec![0usize; mesh.vertices.len()];
    let mut s = String::new();
    let _ = writeln!(s, "# pss surface {} x {}", mesh.lattice.nx(), mesh.lattice.nt());
    let mut nv = 0;
    for (k, v) in mesh.vertices.iter().enumerate() {
        if mesh.mask[k] {
            continue;
        }
        nv += 1;
        remap[k] = nv;
        let _ = writeln!(s, "v {} {} {}", fmt_g(v[0].to_f64_lossy()), fmt_g(v[1].to_f64_lossy()), fmt_g(v[2].to_f64_lossy()));
    }
    for (k, e) in mesh.frames.iter().enumerate() {
        if !mesh.mask[k] {
            let n = e[2];
            let _ = writeln!(s, "vn {} {} {}", fmt_g(n[0].to_f64_lossy()), fmt_g(n[1].to_f64_lossy()), fmt_g(n[2].to_f64_lossy()));
        }
    }
    let quads = mesh.quads();
    for q in &quads {
        let [a, b, c, d] = q.map(|k| remap[k]);
        let _ = writeln!(s, "f {a}//{a} {b}//{b} {c}//{c} {d}//{d}");
    }
    if nv == 0 {
        log::warn!("mesh is fully masked; writing header only");
    }
    w.write_all(s.as_bytes())?;
    Ok(ObjStats { vertices: nv, faces: quads.len() })
}

pub fn export_obj<T: Scalar>(mesh: &Mesh<T>, path: &Path) -> Result<ObjStats, ImmersionError> {
    let f = std::fs::File::create(path)?;
    write_obj(mesh, std::io::BufWriter::new(f))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    /// Zero-based vertex indices.
    pub faces: Vec<Vec<usize>>,
}

/// Reads the subset of OBJ that [`write_obj`] produces.
pub fn parse_obj(text: &str) -> Result<ObjMesh, ImmersionError> {
    let mut m = ObjMesh::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let err = |msg: String| ImmersionError::ObjParse { line: n + 1, msg };
        let mut it = line.split_whitespace();
        let Some(tag) = it.next() else { continue };
        let rest: Vec<&str> = it.collect();
        let xyz = || -> Result<[f64; 3], ImmersionError> {
            if rest.len() != 3 {
                return Err(err(format!("expected 3 numbers, got {}", rest.len())));
            }
            let mut v = [0.0; 3];
            for (o, r) in v.iter_mut().zip(&rest) {
                *o = r.parse().map_err(|e| err(format!("{r}: {e}")))?;
            }
            Ok(v)
        };
        match tag {
            "#" => {}
            _ if tag.starts_with('#') => {}
            "v" => m.vertices.push(xyz()?),
            "vn" => m.normals.push(xyz()?),
            "f" => {
                let mut face = Vec::with_capacity(rest.len());
                for r in &rest {
                    let head = r.split('/').next().unwrap_or("");
                    let i: usize = head.parse().map_err(|e| err(format!("{r}: {e}")))?;
                    if i == 0 || i > m.vertices.len() {
                        return Err(err(format!("vertex index {i} out of range")));
                    }
                    face.push(i - 1);
                }
                if face.len() < 3 {
                    return Err(err("face needs at least 3 vertices".into()));
                }
                m.faces.push(face);
            }
            other => return Err(err(format!("unsupported record '{other}'"))),
        }
    }
    Ok(m)
}
