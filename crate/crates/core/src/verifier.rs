//! Numerical certification that a family describes pseudospherical surfaces.

use rayon::prelude::*;

use crate::families::{frame_coeffs, pde_rhs, FamilyError, FamilySpec, FrameCoeffs, FrameEntry, PdeRhs};
use crate::jetspace::{partial, prolong, total_derivative_t, total_derivative_x, DerivMode, Jet, JetVar};
use crate::lattice::{FrameField, LatticeResidual};
use crate::sampling::{JetBox, QuasiRandom};
use crate::scalar::Scalar;

/// Mask threshold for |Δ12| and Δ13² + Δ23².
pub const DEFAULT_MASK_THRESHOLD: f64 = 1e-6;
/// Below this a "nonzero" quantity counts as vanishing.
pub const NONZERO_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    /// Must vanish: `value` is the largest scaled residual.
    Zero,
    /// Must stay away from zero: `value` is the smallest magnitude seen.
    NonZero,
}

#[derive(Clone, Debug)]
pub struct IdentityCheck<T> {
    pub name: &'static str,
    pub kind: CheckKind,
    pub value: T,
    pub tol: T,
    pub pass: bool,
    pub worst: Option<Jet<T>>,
}

#[derive(Clone, Debug)]
pub struct ResidualReport<T> {
    pub checks: Vec<IdentityCheck<T>>,
    pub n_samples: usize,
    /// Sign in front of the η2 φ12 term of the f32 identity that made it hold best.
    pub delta: Option<i32>,
    pub pass: bool,
}

impl<T: Scalar> ResidualReport<T> {
    pub fn check(&self, name: &str) -> Option<&IdentityCheck<T>> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Largest residual among the `Zero` checks.
    pub fn max_residual(&self) -> T {
        self.checks
            .iter()
            .filter(|c| c.kind == CheckKind::Zero)
            .fold(T::zero(), |m, c| m.max(c.value))
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect()
    }

    /// `identity,max_residual,n_samples,pass` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("identity,max_residual,n_samples,pass\n");
        for c in &self.checks {
            s.push_str(&format!("{},{:e},{},{}\n", c.name, c.value, self.n_samples, c.pass));
        }
        s
    }
}

/// Names of the checks in report order.
pub const CHECK_NAMES: [&str; 10] = [
    "f11_z0_nonzero",
    "f11_depends_on_z0_minus_z2",
    "f11_z1",
    "phi_i2_z2",
    "f_i2_z3",
    "linear_relation",
    "id_f12",
    "id_f22",
    "id_f32",
    "f32_inequality",
];

const N_VALUES: usize = 11; // the ten checks with id_f32 split by δ = ±1

fn scaled<T: Scalar>(terms: &[T]) -> T {
    let sum = terms.iter().fold(T::zero(), |a, b| a + *b);
    let big = terms.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    sum.abs() / (T::one() + big)
}

fn sample_values<T: Scalar>(spec: &FamilySpec<T>, jet: &Jet<T>, mode: DerivMode) -> Result<[T; N_VALUES], FamilyError> {
    let f = frame_coeffs(spec, jet)?.f;
    let lambda = spec.lambda().ok_or(FamilyError::UnsupportedForExplicitFrame)?;
    let rel = spec.linear_relation().ok_or(FamilyError::UnsupportedForExplicitFrame)?;
    let z = &jet.z;
    let g = pde_rhs(spec, jet)? - lambda * z[0] * z[3];
    let d = |i: usize, j: usize, s: usize| partial(&FrameEntry { spec, i, j }, jet, JetVar::Z(s), mode);
    let f11_z0 = d(0, 0, 0)?;
    let f11_z1 = d(0, 0, 1)?;
    let f11_z2 = d(0, 0, 2)?;
    let mut f_i2 = [[T::zero(); 4]; 3];
    let mut f_i1_z2 = [T::zero(); 3];
    for i in 0..3 {
        for s in 0..4 {
            f_i2[i][s] = d(i, 1, s)?;
        }
        f_i1_z2[i] = d(i, 0, 2)?;
    }
    let phi: Vec<T> = (0..3).map(|i| f[i][1] + lambda * z[0] * f[i][0]).collect();
    let phi_z2 = (0..3)
        .map(|i| (f_i2[i][2] + lambda * z[0] * f_i1_z2[i]).abs())
        .fold(T::zero(), T::max);
    let f_z3 = (0..3).map(|i| f_i2[i][3].abs()).fold(T::zero(), T::max);
    let lin = scaled(&[f[1][0], -rel.mu2 * f[0][0], -rel.eta2])
        .max(scaled(&[f[2][0], -rel.mu3 * f[0][0], -rel.eta3]));
    let (mu2, eta2, mu3, eta3) = (rel.mu2, rel.eta2, rel.mu3, rel.eta3);
    let f11 = f[0][0];
    let sums = |i: usize| [z[1] * f_i2[i][0], z[2] * f_i2[i][1]];
    let [a1, a2] = sums(0);
    let r3 = scaled(&[-f11_z0 * g, a1, a2, mu2 * phi[2] * f11, -mu3 * phi[1] * f11, eta2 * phi[2], -eta3 * phi[1]]);
    let [b1, b2] = sums(1);
    let r4 = scaled(&[-mu2 * f11_z0 * g, b1, b2, -phi[2] * f11, mu3 * phi[0] * f11, eta3 * phi[0]]);
    let [c1, c2] = sums(2);
    let r5 = |delta: T| {
        scaled(&[-mu3 * f11_z0 * g, c1, c2, -phi[1] * f11, mu2 * phi[0] * f11, delta * eta2 * phi[0]])
    };
    let ineq = ((phi[1] - mu2 * phi[0]) * f11 - eta2 * phi[0]).abs();
    Ok([
        f11_z0.abs(),
        (f11_z0 + f11_z2).abs(),
        f11_z1.abs(),
        phi_z2,
        f_z3,
        lin,
        r3,
        r4,
        r5(T::one()),
        r5(-T::one()),
        ineq,
    ])
}

/// Checks the characterization identities at `n_samples` quasi-random jets.
pub fn theorem1_conditions<T: Scalar>(
    spec: &FamilySpec<T>,
    n_samples: usize,
    domain: &JetBox<T>,
    tol: T,
    mode: DerivMode,
    seed: u64,
) -> Result<ResidualReport<T>, FamilyError> {
    if !spec.is_catalog() {
        return Err(FamilyError::UnsupportedForExplicitFrame);
    }
    let pts = QuasiRandom::new(domain.clone(), seed).points(n_samples);
    let rows: Vec<[T; N_VALUES]> = pts
        .par_iter()
        .map(|z| sample_values(spec, &Jet::from_z(z), mode))
        .collect::<Result<_, _>>()?;
    // (extreme value, sample index) per column
    let mut ext: Vec<(T, usize)> = (0..N_VALUES)
        .map(|k| if k == 0 || k == N_VALUES - 1 { (T::infinity(), 0) } else { (T::zero(), 0) })
        .collect();
    for (s, row) in rows.iter().enumerate() {
        for k in 0..N_VALUES {
            let minimize = k == 0 || k == N_VALUES - 1;
            let better = if minimize { row[k] < ext[k].0 } else { row[k] > ext[k].0 };
            if better || row[k].is_nan() {
                ext[k] = (row[k], s);
            }
        }
    }
    let (delta, f32_col) = if ext[8].0 <= ext[9].0 { (1, 8) } else { (-1, 9) };
    let floor = T::of(NONZERO_FLOOR);
    let cols = [0usize, 1, 2, 3, 4, 5, 6, 7, f32_col, 10];
    let checks: Vec<IdentityCheck<T>> = cols
        .iter()
        .zip(CHECK_NAMES)
        .map(|(&k, name)| {
            let kind = if k == 0 || k == 10 { CheckKind::NonZero } else { CheckKind::Zero };
            let (value, s) = ext[k];
            let pass = match kind {
                CheckKind::Zero => value < tol,
                CheckKind::NonZero => value > floor,
            };
            let worst = if n_samples > 0 { Some(Jet::from_z(&pts[s])) } else { None };
            IdentityCheck { name, kind, value, tol: if kind == CheckKind::Zero { tol } else { floor }, pass, worst }
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(ResidualReport { checks, n_samples, delta: Some(delta), pass })
}

/// `r1 = D_x f12 − D_t f11 + Δ23`, `r2 = D_x f22 − D_t f21 − Δ13`,
/// `r3 = D_x f32 − D_t f31 − Δ12` by central differences on the lattice.
pub fn structure_residual<T: Scalar>(frames: &FrameField<T>, mask: Option<&[bool]>) -> LatticeResidual<T> {
    let lat = &frames.lattice;
    let comp: Vec<Vec<T>> = (0..6).map(|k| frames.component(k / 2, k % 2)).collect();
    let mut values = vec![vec![None; lat.len()]; 3];
    for j in 0..lat.nt() {
        for i in 0..lat.nx() {
            let k = lat.idx(i, j);
            if mask.is_some_and(|m| m[k]) || !lat.interior(i, j) {
                continue;
            }
            let (d12, d13, d23) = frames.f[k].deltas();
            let dx = |c: usize| lat.diff_x(&comp[c], i, j).unwrap_or(T::nan());
            let dt = |c: usize| lat.diff_t(&comp[c], i, j).unwrap_or(T::nan());
            values[0][k] = Some(dx(1) - dt(0) + d23);
            values[1][k] = Some(dx(3) - dt(2) - d13);
            values[2][k] = Some(dx(5) - dt(4) - d12);
        }
    }
    LatticeResidual { names: vec!["r1", "r2", "r3"], values }
}

/// The three structure residuals at one jet with exact total derivatives.
///
/// `jet` needs z_0..z_3; its `zt0`, `zt1` (default 0) seed the prolongation.
pub fn structure_residual_at_jet<T: Scalar>(
    spec: &FamilySpec<T>,
    jet: &Jet<T>,
    mode: DerivMode,
) -> Result<[T; 3], FamilyError> {
    if !spec.is_catalog() {
        return Err(FamilyError::UnsupportedForExplicitFrame);
    }
    let z0t = jet.zt0.unwrap_or(T::zero());
    let z1t = jet.zt1.unwrap_or(T::zero());
    let zt = prolong(&PdeRhs(spec), jet, z0t, z1t, 2, mode)?;
    let (d12, d13, d23) = frame_coeffs(spec, jet)?.deltas();
    let dx = |i: usize| total_derivative_x(&FrameEntry { spec, i, j: 1 }, jet, mode);
    let dt = |i: usize| total_derivative_t(&FrameEntry { spec, i, j: 0 }, jet, &zt, mode);
    Ok([dx(0)? - dt(0)? + d23, dx(1)? - dt(1)? - d13, dx(2)? - dt(2)? - d12])
}

#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneracyReport<T> {
    pub min_abs_d12: T,
    pub min_d13_d23: T,
    pub threshold: T,
    /// `true` marks an excluded point.
    pub mask: Vec<bool>,
    pub masked: usize,
    /// At least one point survives the mask.
    pub pass: bool,
}

/// Masks points where `|Δ12|` or `Δ13² + Δ23²` falls below `threshold`.
pub fn nondegeneracy<T: Scalar>(frames: &[FrameCoeffs<T>], threshold: T) -> NondegeneracyReport<T> {
    let mut min12 = T::infinity();
    let mut min1323 = T::infinity();
    let mask: Vec<bool> = frames
        .iter()
        .map(|f| {
            let (d12, d13, d23) = f.deltas();
            let q = d13 * d13 + d23 * d23;
            min12 = min12.min(d12.abs());
            min1323 = min1323.min(q);
            !(d12.abs() >= threshold && q >= threshold)
        })
        .collect();
    let masked = mask.iter().filter(|m| **m).count();
    NondegeneracyReport { min_abs_d12: min12, min_d13_d23: min1323, threshold, pass: masked < mask.len(), masked, mask }
}

/// Frames at quasi-random jets of the sample box.
pub fn sample_frames<T: Scalar>(
    spec: &FamilySpec<T>,
    n: usize,
    domain: &JetBox<T>,
    seed: u64,
) -> Result<Vec<FrameCoeffs<T>>, FamilyError> {
    QuasiRandom::new(domain.clone(), seed)
        .points(n)
        .iter()
        .map(|z| frame_coeffs(spec, &Jet::from_z(z)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{presets, BranchT3, Sign};
    use crate::functions::UnaryFn;

    #[test]
    fn linear_t2_passes_and_records_delta() {
        let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
        let r = theorem1_conditions(&spec, 200, &JetBox::default(), 1e-9, DerivMode::Analytic, 1).unwrap();
        assert!(r.pass, "{:?}", r.failed());
        assert_eq!(r.delta, Some(1));
        assert!(r.to_csv().starts_with("identity,max_residual,n_samples,pass\nf11_z0_nonzero,"));
    }

    #[test]
    fn broken_t3_fails_f32_identity() {
        let spec = FamilySpec::T3(BranchT3 { lambda: 1.0, mu: 0.0, eta: 1.0, m1: 0.0, m2: 1.3, h: UnaryFn::identity() });
        let r = theorem1_conditions(&spec, 100, &JetBox::default(), 1e-9, DerivMode::Analytic, 1).unwrap();
        assert!(!r.pass);
        assert_eq!(r.failed(), vec!["id_f32"]);
        assert!(r.check("id_f32").unwrap().value > 1e-3);
    }

    #[test]
    fn explicit_frames_are_rejected() {
        let sg = presets::sine_gordon_lightcone::<f64>();
        assert!(theorem1_conditions(&sg, 10, &JetBox::default(), 1e-9, DerivMode::Analytic, 1).is_err());
    }

    #[test]
    fn single_jet_structure_residual_vanishes() {
        let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
        let r = structure_residual_at_jet(&spec, &Jet::from_z(&[2.0, 3.0, 1.0, 0.5]), DerivMode::Analytic).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
    }

    #[test]
    fn nondegeneracy_example_and_equal_forms() {
        let f = FrameCoeffs::new([[1.0, 2.0], [1.0, 0.0], [1.0, 2.0]]);
        let r = nondegeneracy(&[f], 1e-6);
        assert!(r.pass);
        assert_eq!(r.min_abs_d12, 2.0);
        let same = FrameCoeffs::new([[1.0, 2.0], [1.0, 2.0], [0.0, 1.0]]);
        let r = nondegeneracy(&[same, same], 1e-6);
        assert!(!r.pass);
        assert_eq!(r.masked, 2);
    }
}
