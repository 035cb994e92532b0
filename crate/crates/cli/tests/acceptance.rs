//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the summary is always printed.
//! Criteria listed in `EXPECTED_FAILURES` are reported as FAIL but do not fail
//! the run; if one of them starts passing the run fails so the list is kept honest.

use std::process::Command;
use std::time::Instant;

use pss_core::families::{fit_family, pde_rhs, presets, BranchT2, BranchT3, BranchT4, FamilySpec, FitResult, Sign};
use pss_core::functions::{BivariateFn, UnaryFn};
use pss_core::jetspace::{DerivMode, Jet, JetPoly};
use pss_core::lattice::{observed_order, FrameField};
use pss_core::pdesolver::{solve, ExactLinear, Grid1D, SineGordonKink, SolveOptions};
use pss_core::reference::{
    exact_linear_frames, linear_frames, periodic_spacing, sine_gordon_surface, solved_surface, Window,
};
use pss_core::sampling::{JetBox, QuasiRandom};
use pss_core::secondform::{
    classify_existence, codazzi_residual, sine_gordon_sff, sff_prop1_ii, sff_prop3_iii, universal_for, Prop1i,
    Prop1ii, Prop3i, Prop3ii, Prop3iii, SffError, UniversalChoice, Verdict,
};
use pss_core::verifier::{nondegeneracy, structure_residual, theorem1_conditions, DEFAULT_MASK_THRESHOLD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const ID_TOL_ANALYTIC: f64 = 1e-9;
const ID_TOL_FD: f64 = 1e-6;
const ID_SAMPLES: usize = 1000;
const ID_RUNTIME_S: f64 = 5.0;
const GAUSS_TOL: f64 = 1e-13;
const POINT_TOL: f64 = 1e-12;
const STRIP_HALF: f64 = 0.4812;
const STRIP_TOL: f64 = 1e-4;
const PLUGBACK_TOL: f64 = 1e-8;
const ODE_GAUSS_TOL: f64 = 1e-10;
const PDE_LINF_TOL: f64 = 1e-8;
const PDE_ORDER: (f64, f64) = (3.8, 4.2);
const CONSTANT_TOL: f64 = 1e-10;
const MIN_ORDER: f64 = 1.9;
const POWER_RATIO: f64 = 1e3;
const CODAZZI_TOL: f64 = 1e-3;
const METRIC_REL_TOL: f64 = 1e-3;
const MEAN_K: (f64, f64) = (-1.001, -0.999);
const SFF_REC_TOL: f64 = 2e-2;
const STRUCTURE_TOL: f64 = 1e-3;
const FIT_TOL: f64 = 1e-10;

const EXPECTED_FAILURES: &[(usize, &str)] = &[(
    10,
    "Degasperis-Procesi is a fourth-branch member in the affine/quadratic basis \
     (lambda=1, mu=0, m1=2, m2=0, h=z0-z2, psi=(z0-z1)^2), so NoMatch cannot be returned",
)];

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn le(name: &str, v: f64, tol: f64) -> Check {
    ensure(v < tol, format!("{name}={v:.3e} (<{tol:.0e})"))
}

fn order_ok(name: &str, coarse: f64, fine: f64) -> Check {
    let p = observed_order(coarse, fine);
    ensure(p >= MIN_ORDER, format!("{name} order={p:.3} (>={MIN_ORDER})"))
}

fn all(parts: Vec<Check>) -> Check {
    let mut msgs = Vec::new();
    let mut ok = true;
    for p in parts {
        match p {
            Ok(m) => msgs.push(m),
            Err(m) => {
                ok = false;
                msgs.push(format!("FAILED {m}"));
            }
        }
    }
    ensure(ok, msgs.join("; "))
}

fn catalog_presets() -> Vec<(String, FamilySpec<f64>)> {
    let mut v = vec![("ch".to_string(), presets::camassa_holm(1.0)), ("t3".to_string(), presets::t3_example())];
    for sign in [Sign::Plus, Sign::Minus] {
        v.push((format!("linear-t2{sign}"), presets::linear_t2(1.0, sign)));
        v.push((format!("t4{sign}"), presets::t4_example(sign)));
        v.push((format!("t5i{sign}"), presets::t5i_example(sign)));
        v.push((format!("t5ii{sign}"), presets::t5ii_example(sign)));
    }
    v
}

fn criterion_1() -> Check {
    let domain = JetBox::cube(2.0);
    let start = Instant::now();
    let mut parts = Vec::new();
    for (name, spec) in catalog_presets() {
        let a = theorem1_conditions(&spec, ID_SAMPLES, &domain, ID_TOL_ANALYTIC, DerivMode::Analytic, 1)
            .map_err(|e| format!("{name}: {e}"))?;
        let f = theorem1_conditions(&spec, ID_SAMPLES, &domain, ID_TOL_FD, DerivMode::FiniteDifference, 1)
            .map_err(|e| format!("{name}: {e}"))?;
        parts.push(ensure(a.pass, format!("{name} analytic max={:.1e} failed={:?}", a.max_residual(), a.failed())));
        parts.push(ensure(f.pass, format!("{name} fd max={:.1e} failed={:?}", f.max_residual(), f.failed())));
    }
    let secs = start.elapsed().as_secs_f64();
    let mut out = vec![ensure(secs < ID_RUNTIME_S, format!("runtime={secs:.2}s"))];
    // keep the line short: only report failing presets individually
    let failures: Vec<Check> = parts.into_iter().filter(|p| p.is_err()).collect();
    out.push(ensure(failures.is_empty(), format!("{} presets x 2 modes", catalog_presets().len())));
    out.extend(failures);
    all(out)
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..ID_SAMPLES / 3 + 1 {
        let sigma = rng.gen_range(2.5..6.0);
        let beta = rng.gen_range(0.2..1.2);
        let sign = if rng.gen() { Sign::Plus } else { Sign::Minus };
        let p1 = Prop1i::<f64> { eta: rng.gen_range(0.3..2.0), sigma, beta, sign };
        let (lo, hi) = p1.x_interval().map_err(|e| e.to_string())?;
        worst = worst.max(p1.eval(lo + (hi - lo) * rng.gen_range(0.0..1.0)).map_err(|e| e.to_string())?.gauss_residual().abs());
        let p3 = Prop3i::<f64> { m2: rng.gen_range(0.3..2.0), sigma, beta, sign };
        let (lo, hi) = p3.t_interval().map_err(|e| e.to_string())?;
        worst = worst.max(p3.eval(lo + (hi - lo) * rng.gen_range(0.0..1.0)).map_err(|e| e.to_string())?.gauss_residual().abs());
        let q = Prop3ii::<f64> { m1: rng.gen_range(0.3..2.0), m2: rng.gen_range(-2.0..2.0), sigma, beta, sign };
        let (lo, hi) = q.s_interval().map_err(|e| e.to_string())?;
        let s = lo + (hi - lo) * rng.gen_range(0.0..1.0);
        let t = rng.gen_range(-1.0..1.0);
        let x = (s - q.m2 * t) / q.m1;
        worst = worst.max(q.eval(x, t).map_err(|e| e.to_string())?.gauss_residual().abs());
    }
    let p = Prop1i::<f64> { eta: 1.0, sigma: 3.0, beta: 1.0, sign: Sign::Plus };
    let s = p.eval(0.0).map_err(|e| e.to_string())?;
    let point = (s.a - 1.0).abs().max((s.b + 1.0).abs()).max(s.c.abs());
    let (lo, hi) = p.strip().map_err(|e| e.to_string())?;
    let strip = (lo + STRIP_HALF).abs().max((hi - STRIP_HALF).abs());
    all(vec![
        le("max|ac-b^2+1|", worst, GAUSS_TOL),
        le("point(1,-1,0) err", point, POINT_TOL),
        ensure(strip < STRIP_TOL, format!("strip=({lo:.4},{hi:.4})")),
    ])
}

fn ode_checks(label: &str, curve: Result<pss_core::secondform::SffCurve<f64>, SffError>) -> Check {
    let c = curve.and_then(|c| c.require_complete()).map_err(|e| format!("{label}: {e}"))?;
    all(vec![
        le(&format!("{label} plugback"), c.max_plugback(), PLUGBACK_TOL),
        le(&format!("{label} gauss"), c.max_gauss(), ODE_GAUSS_TOL),
        ensure(c.min_discriminant() > 0.0, format!("{label} min Δ={:.2e}", c.min_discriminant())),
    ])
}

fn criterion_3() -> Check {
    let mut parts = Vec::new();
    let reference = Prop1ii { mu: 1.0, eta: 1.0, beta: 0.0, sign: Sign::Plus, b0: 2.0, x0: 0.0 };
    parts.push(ode_checks("ref", sff_prop1_ii(&reference, 0.5, 101)));
    let reference3 = Prop3iii { mu: 1.0, m1: 1.0, m2: 0.0, beta: 0.0, sign: Sign::Plus, b0: 2.0, s0: 0.0 };
    parts.push(ode_checks("ref3", sff_prop3_iii(&reference3, 0.5, 101)));
    // two random valid cases per branch: admissible start and no stopping event
    // before the end of the interval
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut n1, mut n3) = (0, 0);
    let valid = |r: &Result<pss_core::secondform::SffCurve<f64>, SffError>| {
        matches!(r, Ok(c) if c.stop == pss_core::secondform::CurveStop::Completed)
    };
    while n1 < 2 || n3 < 2 {
        let mu = rng.gen_range(0.5..2.0);
        let beta = rng.gen_range(0.0..0.5);
        let b0 = rng.gen_range(1.5..3.0);
        let sign = if rng.gen() { Sign::Plus } else { Sign::Minus };
        if n1 < 2 {
            let p = Prop1ii { mu, eta: rng.gen_range(0.5..1.5), beta, sign, b0, x0: 0.0 };
            let r = sff_prop1_ii(&p, 0.3, 61);
            if !valid(&r) {
                continue;
            }
            parts.push(ode_checks(&format!("1ii#{n1}"), r));
            n1 += 1;
        } else {
            let p = Prop3iii { mu, m1: rng.gen_range(0.5..1.5), m2: rng.gen_range(-1.0..1.0), beta, sign, b0, s0: 0.0 };
            let r = sff_prop3_iii(&p, 0.3, 61);
            if !valid(&r) {
                continue;
            }
            parts.push(ode_checks(&format!("3iii#{n3}"), r));
            n3 += 1;
        }
    }
    all(parts)
}

fn criterion_4() -> Check {
    let mut parts = Vec::new();
    let exists = [presets::linear_t2(1.0, Sign::Plus), presets::t4_example(Sign::Plus), presets::degasperis_procesi(Sign::Plus)];
    for spec in &exists {
        let r = classify_existence(spec).map_err(|e| e.to_string())?;
        parts.push(ensure(r.verdict == Verdict::UniversalExists, format!("{}: {r}", spec.branch_name())));
    }
    let t3 = FamilySpec::T3(BranchT3 { lambda: 1.0, mu: 1.0, eta: 2.0, m1: 0.0, m2: 2.0, h: UnaryFn::identity() });
    let none =
        [presets::t3_example(), t3, presets::t5i_example(Sign::Plus), presets::t5ii_example(Sign::Minus), presets::camassa_holm(1.0)];
    for spec in &none {
        let r = classify_existence(spec).map_err(|e| e.to_string())?;
        let ob = r.obstruction.unwrap_or(0.0);
        parts.push(ensure(r.verdict == Verdict::Nonexistent && ob > 0.0, format!("{}: obstruction={ob}", spec.branch_name())));
    }
    let out = Command::new(env!("CARGO_BIN_EXE_pss"))
        .args(["certify", "--family", "preset:ch"])
        .output()
        .map_err(|e| e.to_string())?;
    let line = String::from_utf8_lossy(&out.stdout).lines().next().unwrap_or("").to_string();
    parts.push(ensure(out.status.success() && line == "NONEXISTENT, obstruction=1.0", format!("cli ch: '{line}'")));
    all(parts)
}

fn linf_at_one(n: usize, dt: f64) -> Result<f64, String> {
    let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
    let grid = Grid1D::two_pi(n).map_err(|e| e.to_string())?;
    let exact = ExactLinear::new(1.0, 1, 1.0).map_err(|e| e.to_string())?;
    let u0: Vec<f64> = grid.points().iter().map(|&x| exact.value(x, 0.0)).collect();
    let (f, _) = solve(&spec, &u0, grid, dt, 1.0, SolveOptions::default()).map_err(|e| e.to_string())?;
    Ok(grid.points().iter().zip(f.last()).map(|(&x, u)| (u - exact.value(x, 1.0)).abs()).fold(0.0, f64::max))
}

fn criterion_5() -> Check {
    let e = linf_at_one(256, 1e-3)?;
    // largest steps under the CFL limit so the temporal error dominates round-off
    let (e1, e2) = (linf_at_one(256, 1e-2)?, linf_at_one(256, 5e-3)?);
    let p = observed_order(e1, e2);
    let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
    let grid = Grid1D::two_pi(256).map_err(|e| e.to_string())?;
    let (f, _) = solve(&spec, &[0.7; 256], grid, 1e-3, 1.0, SolveOptions::default()).map_err(|e| e.to_string())?;
    let c = f.last().iter().map(|v| (v - 0.7 * 1f64.exp()).abs()).fold(0.0, f64::max);
    all(vec![
        le("Linf(t=1)", e, PDE_LINF_TOL),
        ensure((PDE_ORDER.0..=PDE_ORDER.1).contains(&p), format!("temporal order={p:.3}")),
        le("constant", c, CONSTANT_TOL),
    ])
}

fn structure_max(frames: &FrameField<f64>) -> f64 {
    let nd = nondegeneracy(&frames.f, DEFAULT_MASK_THRESHOLD);
    structure_residual(frames, Some(&nd.mask)).max_all()
}

/// Frames of `spec` along a random trigonometric field that solves nothing.
fn random_field_frames(spec: &FamilySpec<f64>, window: Window<f64>, n: usize, seed: u64) -> Result<FrameField<f64>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<[f64; 4]> = (0..4)
        .map(|_| [rng.gen_range(0.2..1.0), rng.gen_range(1.0..3.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.0..6.0)])
        .collect();
    let lattice = window.lattice(periodic_spacing(n)).map_err(|e| e.to_string())?;
    let mut f = Vec::with_capacity(lattice.len());
    for &t in &lattice.ts {
        for &x in &lattice.xs {
            let (mut z, mut zt0, mut zt1) = (vec![1.5; 4], 0.0, 0.0);
            for &[a, k, w, ph] in &modes {
                let th = k * x + w * t + ph;
                let (s, c) = th.sin_cos();
                z[0] += a * c;
                z[1] -= a * k * s;
                z[2] -= a * k * k * c;
                z[3] += a * k * k * k * s;
                zt0 -= a * w * s;
                zt1 -= a * k * w * c;
            }
            let jet = Jet::new(x, t, z).with_time(zt0, Some(zt1));
            f.push(pss_core::families::frame_coeffs(spec, &jet).map_err(|e| e.to_string())?);
        }
    }
    Ok(FrameField { lattice, f })
}

fn criterion_6() -> Check {
    let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
    let w = Window::linear_default();
    let coarse = structure_max(&exact_linear_frames(&spec, 1, 256, w).map_err(|e| e.to_string())?);
    let fine = structure_max(&exact_linear_frames(&spec, 1, 512, w).map_err(|e| e.to_string())?);
    let noise = structure_max(&random_field_frames(&spec, w, 512, 6)?);
    all(vec![
        order_ok("structure", coarse, fine),
        ensure(noise >= POWER_RATIO * fine, format!("power ratio={:.1e}", noise / fine)),
    ])
}

fn codazzi_max(n: usize) -> Result<f64, String> {
    let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
    let w = Window::linear_default();
    let lattice = w.lattice(periodic_spacing(n)).map_err(|e| e.to_string())?;
    let exact = ExactLinear::new(1.0, 1, 1.0).map_err(|e| e.to_string())?;
    let frames = linear_frames(&spec, &exact, &lattice).map_err(|e| e.to_string())?;
    let sff = universal_for(&spec, UniversalChoice::default()).and_then(|u| u.field(&lattice)).map_err(|e| e.to_string())?;
    Ok(codazzi_residual(&frames, &sff).max_all())
}

fn criterion_7() -> Check {
    let (coarse, fine) = (codazzi_max(256)?, codazzi_max(512)?);
    all(vec![le("codazzi(n=512)", fine, CODAZZI_TOL), order_ok("codazzi", coarse, fine)])
}

fn criterion_8() -> Check {
    let spec = presets::linear_t2::<f64>(1.0, Sign::Plus);
    let w = Window::linear_default();
    let run = |n: usize| {
        let grid = Grid1D::<f64>::two_pi(n).map_err(|e| e.to_string())?;
        let u0: Vec<f64> = grid.points().iter().map(|x| x.cos()).collect();
        solved_surface(&spec, &u0, n, w, UniversalChoice::default()).map_err(|e| e.to_string())
    };
    let (a, b) = (run(512)?, run(1024)?);
    let r = &a.report;
    all(vec![
        le("metric rel", r.metric_rel_error, METRIC_REL_TOL),
        ensure(
            (MEAN_K.0..=MEAN_K.1).contains(&r.mean_curvature),
            format!("mean K={:.6} over {} pts", r.mean_curvature, r.curvature_points),
        ),
        le("sff recovery", r.sff_error, SFF_REC_TOL),
        order_ok("closure", r.max_closure, b.report.max_closure),
        order_ok("holonomy", a.linear_problem.max_defect(), b.linear_problem.max_defect()),
    ])
}

fn criterion_9() -> Check {
    let w = Window::sine_gordon_default();
    let a = sine_gordon_surface::<f64>(512, w).map_err(|e| e.to_string())?;
    let b = sine_gordon_surface::<f64>(1024, w).map_err(|e| e.to_string())?;
    let r = &a.report;
    let s = 1f64.asinh();
    let spot = sine_gordon_sff(SineGordonKink.value(s, 0.0)).map_err(|e| e.to_string())?;
    let spot_err = (spot.a + 1.0).abs().max(spot.b.abs()).max((spot.c - 1.0).abs());
    // a window through x + t = 0 (u = π) must be masked there
    let crossing = Window::new(-0.5, 0.5, -0.5, 0.5).lattice(periodic_spacing::<f64>(256)).map_err(|e| e.to_string())?;
    let (_, sff) = pss_core::reference::sine_gordon_fields(&crossing).map_err(|e| e.to_string())?;
    let masked = sff.mask.iter().filter(|&&m| m).count();
    all(vec![
        le("structure", a.structure.max_all(), STRUCTURE_TOL),
        order_ok("structure", a.structure.max_all(), b.structure.max_all()),
        le("codazzi", a.codazzi.max_all(), CODAZZI_TOL),
        order_ok("codazzi", a.codazzi.max_all(), b.codazzi.max_all()),
        le("metric rel", r.metric_rel_error, METRIC_REL_TOL),
        ensure((MEAN_K.0..=MEAN_K.1).contains(&r.mean_curvature), format!("mean K={:.6}", r.mean_curvature)),
        le("sff recovery", r.sff_error, SFF_REC_TOL),
        order_ok("closure", r.max_closure, b.report.max_closure),
        le("spot(-1,0,1)", spot_err, POINT_TOL),
        ensure(masked > 0, format!("masked near u=π: {masked}")),
    ])
}

const BASIS: [&[(usize, u32)]; 10] = [
    &[],
    &[(0, 1)],
    &[(1, 1)],
    &[(2, 1)],
    &[(0, 2)],
    &[(0, 1), (1, 1)],
    &[(1, 2)],
    &[(0, 1), (2, 1)],
    &[(1, 1), (2, 1)],
    &[(0, 1), (3, 1)],
];

fn monomial(z: &[f64], powers: &[(usize, u32)]) -> f64 {
    powers.iter().map(|&(i, p)| z[i].powi(p as i32)).product()
}

/// Interpolates the right-hand side in the fit basis by least squares and
/// returns the polynomial with its worst residual at fresh jets.
fn rhs_polynomial(spec: &FamilySpec<f64>) -> Result<(JetPoly<f64>, f64), String> {
    let pts = QuasiRandom::new(JetBox::cube(1.0), 11).points(40);
    let rows: Vec<[f64; 10]> = pts.iter().map(|z| std::array::from_fn(|k| monomial(z, BASIS[k]))).collect();
    let rhs: Vec<f64> =
        pts.iter().map(|z| pde_rhs(spec, &Jet::from_z(z))).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    // normal equations, Gaussian elimination with partial pivoting
    let mut a = [[0.0f64; 11]; 10];
    for (row, y) in rows.iter().zip(&rhs) {
        for i in 0..10 {
            for j in 0..10 {
                a[i][j] += row[i] * row[j];
            }
            a[i][10] += row[i] * y;
        }
    }
    for c in 0..10 {
        let p = (c..10).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        for r in 0..10 {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..11 {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..10).map(|i| a[i][10] / a[i][i]).map(|c| if c.abs() < 1e-11 { 0.0 } else { c }).collect();
    let poly = coef.iter().zip(BASIS).filter(|(c, _)| **c != 0.0).fold(JetPoly::new(), |p, (c, m)| p.term(*c, m));
    let check = QuasiRandom::new(JetBox::cube(1.5), 12).points(50);
    let mut worst = 0.0f64;
    for z in &check {
        let want = pde_rhs(spec, &Jet::from_z(z)).map_err(|e| e.to_string())?;
        let got: f64 = coef.iter().zip(BASIS).map(|(c, m)| c * monomial(z, m)).sum();
        worst = worst.max((got - want).abs());
    }
    Ok((poly, worst))
}

fn round_trip(label: &str, spec: &FamilySpec<f64>) -> Check {
    let (target, interp) = rhs_polynomial(spec)?;
    if interp > 1e-8 {
        return Err(format!("{label}: right-hand side outside basis ({interp:.1e})"));
    }
    let FitResult::Match(found) = fit_family(&target) else {
        return Err(format!("{label}: NoMatch"));
    };
    let mut worst = 0.0f64;
    for z in QuasiRandom::new(JetBox::cube(2.0), 13).points(64) {
        let j = Jet::from_z(&z);
        let d = (pde_rhs(&found, &j).map_err(|e| e.to_string())? - pde_rhs(spec, &j).map_err(|e| e.to_string())?).abs();
        worst = worst.max(d / (1.0 + d.abs()));
    }
    ensure(worst < FIT_TOL * 1e2, format!("{label}->{} rhs diff={worst:.1e}", found.branch_name()))
}

/// The fit sub-checks that are expected to hold.
fn criterion_10_round_trips() -> Check {
    let mut parts = Vec::new();
    for m in [0.0, 1.0, 2.5] {
        let (target, _) = rhs_polynomial(&presets::camassa_holm(m))?;
        parts.push(match fit_family(&target) {
            FitResult::Match(FamilySpec::T5ii(b)) => ensure(
                (b.lambda - 1.0).abs() < FIT_TOL && b.m1.abs() < FIT_TOL && (b.m2 - m).abs() < FIT_TOL,
                format!("ch(m={m}) -> (λ={}, m1={}, m2={})", b.lambda, b.m1, b.m2),
            ),
            other => Err(format!("ch(m={m}) -> {:?}", other.spec().map(|s| s.branch_name().to_string()))),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let poly2 = |rng: &mut ChaCha8Rng| BivariateFn::Poly2(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    for i in 0..3 {
        let sign = if i % 2 == 0 { Sign::Plus } else { Sign::Minus };
        let h = UnaryFn::affine(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0));
        let t2 = FamilySpec::T2(BranchT2 { mu: rng.gen_range(-1.0..1.0), m: rng.gen_range(0.2..2.0), sign, h: h.clone(), psi: poly2(&mut rng) });
        parts.push(round_trip(&format!("t2#{i}"), &t2));
        let (lambda, mu, eta, m1): (f64, f64, f64, f64) = (rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0));
        let m2 = (m1 * m1 + (m1 * mu - eta).powi(2)).sqrt() / eta;
        let t3 = FamilySpec::T3(BranchT3 { lambda, mu, eta, m1, m2, h: h.clone() });
        parts.push(round_trip(&format!("t3#{i}"), &t3));
        let t4 = FamilySpec::T4(BranchT4 {
            lambda: rng.gen_range(0.5..2.0),
            mu: rng.gen_range(-1.0..1.0),
            m1: rng.gen_range(-1.0..1.0),
            m2: rng.gen_range(0.2..2.0),
            sign,
            h,
            psi: poly2(&mut rng),
        });
        parts.push(round_trip(&format!("t4#{i}"), &t4));
    }
    all(parts)
}

fn criterion_10() -> Check {
    let trips = criterion_10_round_trips();
    let (target, _) = rhs_polynomial(&presets::degasperis_procesi(Sign::Plus))?;
    let dp = match fit_family(&target) {
        FitResult::NoMatch => Ok("dp -> NoMatch".to_string()),
        FitResult::Match(s) => Err(format!("dp -> {} (NoMatch expected)", s.branch_name())),
    };
    all(vec![trips, dp])
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(usize, &str, fn() -> Check); 10] = [
        (1, "characterization identities", criterion_1),
        (2, "Gauss invariant of closed forms", criterion_2),
        (3, "ODE branches", criterion_3),
        (4, "existence classification", criterion_4),
        (5, "PDE solver", criterion_5),
        (6, "structure-equation residuals", criterion_6),
        (7, "Codazzi plug-back", criterion_7),
        (8, "immersion", criterion_8),
        (9, "sine-Gordon end to end", criterion_9),
        (10, "family fitting", criterion_10),
    ];
    let mut unexpected = Vec::new();
    for (k, name, f) in criteria {
        let start = Instant::now();
        let r = f();
        let secs = start.elapsed().as_secs_f64();
        let expected = EXPECTED_FAILURES.iter().find(|(n, _)| *n == k);
        match (&r, expected) {
            (Ok(msg), None) => println!("criterion {k:>2} PASS  {name} [{secs:.1}s]: {msg}"),
            (Err(msg), Some((_, why))) => {
                println!("criterion {k:>2} FAIL  {name} [{secs:.1}s] (expected: {why}): {msg}")
            }
            (Err(msg), None) => {
                println!("criterion {k:>2} FAIL  {name} [{secs:.1}s]: {msg}");
                unexpected.push(k);
            }
            (Ok(msg), Some(_)) => {
                println!("criterion {k:>2} PASS  {name} [{secs:.1}s] (listed as an expected failure): {msg}");
                unexpected.push(k);
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
