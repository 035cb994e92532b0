//! `pss`: verification, certification, solving and immersion runs.
//!
//! Exit codes: 0 success, 1 mathematical or verification failure, 2 usage or
//! configuration error.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pss_core::families::{parse_family_config, presets, FamilySpec};
use pss_core::immersion::{export_obj, linear_problem_integrate, LinearProblemField};
use pss_core::jetspace::{DerivMode, Stencil};
use pss_core::lattice::{FrameField, SffField};
use pss_core::pdesolver::{solve, Grid1D, InitialCondition, PdeError, SolveOptions, SpatialMode};
use pss_core::reference::{
    exact_linear_frames, periodic_spacing, run_surface, sine_gordon_fields, solved_frames, ReferenceError, Window,
};
use pss_core::sampling::JetBox;
use pss_core::secondform::{classify_existence, universal_for, UniversalChoice, UniversalSff, Verdict};
use pss_core::verifier::{nondegeneracy, sample_frames, theorem1_conditions, DEFAULT_MASK_THRESHOLD};

use report::{num, opt, write_csv, Provenance};

/// A failure with its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure { code: 2, err: e.into() }
}

fn math<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure { code: 1, err: e.into() }
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "pss", version, about = "Pseudospherical-surface equations: verify, certify, solve, immerse")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the characterization identities and nondegeneracy at sampled jets.
    Verify(VerifyArgs),
    /// Decide whether a second fundamental form on finitely many jets exists.
    Certify(CertifyArgs),
    /// Evolve the equation on a periodic grid.
    Solve(SolveArgs),
    /// Tabulate the universal second fundamental form along its coordinate.
    Sff(SffArgs),
    /// Integrate the moving frame into a surface and check its geometry.
    Immerse(ImmerseArgs),
    /// Integrate the 2x2 linear problem and measure its path dependence.
    LinearProblem(LinearArgs),
}

#[derive(Args)]
struct FamilyArg {
    /// Family file, or `preset:NAME`.
    #[arg(long)]
    family: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Partials {
    Analytic,
    Fd,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    family: FamilyArg,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Half-width of the sampled jet cube.
    #[arg(long, default_value_t = 2.0)]
    box_half: f64,
    #[arg(long, value_enum, default_value_t = Partials::Analytic)]
    partials: Partials,
    /// CSV report path (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct UniversalArgs {
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Initial b for the ODE cases.
    #[arg(long, default_value_t = 2.0)]
    b0: f64,
    /// Coordinate where the ODE starts.
    #[arg(long, default_value_t = 0.0)]
    anchor: f64,
}

impl UniversalArgs {
    fn choice(&self) -> UniversalChoice<f64> {
        UniversalChoice { sigma: self.sigma, beta: self.beta, b0: self.b0, anchor: self.anchor }
    }
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    family: FamilyArg,
    #[command(flatten)]
    universal: UniversalArgs,
    /// Sample CSV of the universal form over the window (`-` for stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `x0,x1,t0,t1`
    #[arg(long)]
    window: Option<String>,
    /// Lattice spacing is 2π/n.
    #[arg(long, default_value_t = 128)]
    n: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    family: FamilyArg,
    /// `cos`, `gauss:MU,SIGMA` or a CSV file of n values.
    #[arg(long, default_value = "cos")]
    ic: String,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    tmax: f64,
    /// Keep every k-th step.
    #[arg(long, default_value_t = 100)]
    every: usize,
    #[arg(long, value_enum, default_value_t = Spatial::Spectral)]
    spatial: Spatial,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Spatial {
    Spectral,
    Fd2,
    Fd4,
}

#[derive(Args)]
struct SffArgs {
    #[command(flatten)]
    family: FamilyArg,
    #[command(flatten)]
    universal: UniversalArgs,
    /// `x0,x1,t0,t1`
    #[arg(long)]
    window: Option<String>,
    /// Lattice spacing is 2π/n.
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Use the exact solution `e^{mt/(1+k²)} cos(kx + kt/(1+k²))` (`k=1` or `1`).
    #[arg(long)]
    preset_exact: Option<String>,
    /// Initial data for the solver chain when no exact preset is requested.
    #[arg(long, default_value = "cos")]
    ic: String,
    #[arg(long, default_value_t = 512)]
    n: usize,
    /// `x0,x1,t0,t1`
    #[arg(long)]
    window: Option<String>,
}

#[derive(Args)]
struct ImmerseArgs {
    #[command(flatten)]
    family: FamilyArg,
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    universal: UniversalArgs,
    /// OBJ output.
    #[arg(long)]
    out: PathBuf,
    /// Metrics CSV (defaults to the OBJ path with a `.csv` extension).
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct LinearArgs {
    #[command(flatten)]
    family: FamilyArg,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    out: PathBuf,
}

fn load_family(arg: &str) -> Result<FamilySpec<f64>, Failure> {
    if let Some(name) = arg.strip_prefix("preset:") {
        return presets::by_name(name)
            .ok_or_else(|| config(anyhow!("unknown preset '{name}' (known: {})", presets::NAMES.join(", "))));
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}")).map_err(config)?;
    parse_family_config(&text).with_context(|| format!("in {arg}")).map_err(config)
}

fn parse_window(text: Option<&str>, default: Window<f64>) -> Result<Window<f64>, Failure> {
    let Some(text) = text else { return Ok(default) };
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| config(anyhow!("--window {text}: {e}")))?;
    match v[..] {
        [x0, x1, t0, t1] if x0 < x1 && t0 < t1 => Ok(Window::new(x0, x1, t0, t1)),
        _ => Err(config(anyhow!("--window expects x0,x1,t0,t1 with x0 < x1 and t0 < t1"))),
    }
}

fn initial_condition(text: &str, grid: &Grid1D<f64>) -> Result<Vec<f64>, Failure> {
    let ic = match InitialCondition::parse(text) {
        Ok(ic) => ic,
        Err(_) if Path::new(text).exists() => {
            let body = std::fs::read_to_string(text).with_context(|| format!("reading {text}")).map_err(config)?;
            InitialCondition::from_csv(&body).map_err(config)?
        }
        Err(e) => return Err(config(e)),
    };
    ic.sample(grid).map_err(config)
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let spec = load_family(&a.family.family)?;
    if !spec.is_catalog() {
        return Err(config(anyhow!("verify needs a catalog family (T2..T5ii), got {}", spec.branch_name())));
    }
    if a.samples == 0 || !(a.tol > 0.0) || !(a.box_half > 0.0) {
        return Err(config(anyhow!("--samples, --tol and --box-half must be positive")));
    }
    let domain = JetBox::cube(a.box_half);
    let validation = spec.validate(&domain);
    let mode = match a.partials {
        Partials::Analytic => DerivMode::Analytic,
        Partials::Fd => DerivMode::FiniteDifference,
    };
    let r = theorem1_conditions(&spec, a.samples, &domain, a.tol, mode, a.seed).map_err(math)?;
    let frames = sample_frames(&spec, a.samples, &domain, a.seed).map_err(math)?;
    let nd = nondegeneracy(&frames, DEFAULT_MASK_THRESHOLD);
    for c in &r.checks {
        eprintln!("{:<28} {:>12.3e}  {}", c.name, c.value, if c.pass { "ok" } else { "FAIL" });
    }
    eprintln!("{:<28} {:>12.3e}  {}", "nondegeneracy_min_abs_d12", nd.min_abs_d12, if nd.pass { "ok" } else { "FAIL" });
    eprintln!("{:<28} {:>12.3e}", "nondegeneracy_min_d13_d23", nd.min_d13_d23);
    eprintln!("delta={}", r.delta.unwrap_or(0));
    {
        let prov = Provenance::new("verify", &spec)
            .with("seed", a.seed)
            .with("samples", a.samples)
            .with("tol", a.tol)
            .with("box_half", a.box_half)
            .with("delta", r.delta.unwrap_or(0));
        let mut rows: Vec<String> =
            r.checks.iter().map(|c| format!("{},{},{},{}", c.name, num(c.value), r.n_samples, c.pass)).collect();
        rows.push(format!("nondegeneracy_min_abs_d12,{},{},{}", num(nd.min_abs_d12), r.n_samples, nd.pass));
        rows.push(format!("nondegeneracy_min_d13_d23,{},{},{}", num(nd.min_d13_d23), r.n_samples, nd.pass));
        write_csv(&a.out, &prov, "identity,max_residual,n_samples,pass", &rows).map_err(config)?;
    }
    let mut failed: Vec<String> = r.failed().iter().map(|s| s.to_string()).collect();
    if !nd.pass {
        failed.push("nondegeneracy".into());
    }
    if let Err(e) = validation {
        failed.push(e.to_string());
    }
    if failed.is_empty() {
        eprintln!("PASS");
        Ok(())
    } else {
        Err(math(anyhow!("verification failed: {}", failed.join(", "))))
    }
}

fn cmd_certify(a: &CertifyArgs) -> Outcome {
    let spec = load_family(&a.family.family)?;
    let rep = classify_existence(&spec).map_err(config)?;
    println!("{rep}");
    if let Some(note) = &rep.note {
        println!("note: {note}");
    }
    if rep.verdict != Verdict::UniversalExists {
        return Ok(());
    }
    let Some(path) = &a.out else { return Ok(()) };
    let uni = universal_for(&spec, a.universal.choice()).map_err(math)?;
    let window = parse_window(a.window.as_deref(), Window::linear_default())?;
    let lattice = window.lattice(periodic_spacing(a.n)).map_err(config)?;
    let field = uni.field(&lattice).map_err(math)?;
    let prov = universal_prov("certify", &spec, &a.universal, &uni).with("n", a.n).with("window", fmt_window(&window));
    write_csv(path, &prov, SFF_COLUMNS, &sff_rows(&field)).map_err(config)
}

fn universal_prov(cmd: &'static str, spec: &FamilySpec<f64>, u: &UniversalArgs, uni: &UniversalSff<f64>) -> Provenance {
    Provenance::new(cmd, spec)
        .with("case", uni.case())
        .with("sigma", u.sigma)
        .with("beta", u.beta)
        .with("b0", u.b0)
        .with("anchor", u.anchor)
}

fn fmt_window(w: &Window<f64>) -> String {
    format!("{};{};{};{}", w.x0, w.x1, w.t0, w.t1)
}

const SFF_COLUMNS: &str = "x,t,a,b,c,gauss_residual,masked";

fn sff_rows(field: &SffField<f64>) -> Vec<String> {
    let lat = &field.lattice;
    (0..lat.len())
        .map(|k| {
            let (x, t) = (lat.xs[k % lat.nx()], lat.ts[k / lat.nx()]);
            if field.mask[k] {
                format!("{},{},,,,,1", num(x), num(t))
            } else {
                let s = field.sff[k];
                format!("{},{},{},{},{},{},0", num(x), num(t), num(s.a), num(s.b), num(s.c), num(s.gauss_residual()))
            }
        })
        .collect()
}

fn cmd_solve(a: &SolveArgs) -> Outcome {
    let spec = load_family(&a.family.family)?;
    if !spec.is_catalog() {
        return Err(config(anyhow!("solve needs a catalog family, got {}", spec.branch_name())));
    }
    let grid = Grid1D::two_pi(a.n).map_err(config)?;
    let u0 = initial_condition(&a.ic, &grid)?;
    let mode = match a.spatial {
        Spatial::Spectral => SpatialMode::Spectral,
        Spatial::Fd2 => SpatialMode::FiniteDifference(Stencil::Order2),
        Spatial::Fd4 => SpatialMode::FiniteDifference(Stencil::Order4),
    };
    let opts = SolveOptions { snapshot_every: a.every, mode, ..Default::default() };
    let (field, diag) = solve(&spec, &u0, grid, a.dt, a.tmax, opts).map_err(|e| match e {
        PdeError::BadTime(_) | PdeError::GridTooSmall { .. } | PdeError::InitialCondition(_) => config(e),
        other => math(other),
    })?;
    if diag.under_resolved {
        log::warn!("spectral tail above threshold; solution may be under-resolved");
    }
    let rows: Vec<String> = field
        .times
        .iter()
        .zip(&field.values)
        .map(|(t, row)| std::iter::once(num(*t)).chain(row.iter().map(|u| num(*u))).collect::<Vec<_>>().join(","))
        .collect();
    let columns = std::iter::once("t".to_string()).chain((0..a.n).map(|k| format!("x{k}"))).collect::<Vec<_>>().join(",");
    let prov = Provenance::new("solve", &spec)
        .with("ic", &a.ic)
        .with("n", a.n)
        .with("x_k", format!("k*{}", num(grid.dx())))
        .with("dt", diag.dt)
        .with("tmax", a.tmax)
        .with("steps", diag.steps)
        .with("under_resolved", diag.under_resolved);
    write_csv(&a.out, &prov, &columns, &rows).map_err(config)?;
    println!("steps={} dt={} max_abs={}", diag.steps, diag.dt, num(*diag.max_abs.last().unwrap_or(&f64::NAN)));
    Ok(())
}

fn cmd_sff(a: &SffArgs) -> Outcome {
    let spec = load_family(&a.family.family)?;
    let rep = classify_existence(&spec).map_err(config)?;
    if rep.verdict != Verdict::UniversalExists {
        return Err(math(anyhow!("no universal second fundamental form: {rep}")));
    }
    let uni = universal_for(&spec, a.universal.choice()).map_err(math)?;
    let window = parse_window(a.window.as_deref(), Window::linear_default())?;
    let lattice = window.lattice(periodic_spacing(a.n)).map_err(config)?;
    let field = uni.field(&lattice).map_err(math)?;
    let prov = universal_prov("sff", &spec, &a.universal, &uni).with("n", a.n).with("window", fmt_window(&window));
    write_csv(&a.out, &prov, SFF_COLUMNS, &sff_rows(&field)).map_err(config)?;
    let masked = field.mask.iter().filter(|&&m| m).count();
    println!("{} points={} masked={}", uni.case(), field.mask.len(), masked);
    if masked == field.mask.len() {
        return Err(math(anyhow!("every lattice point is outside the domain of the form")));
    }
    Ok(())
}

/// Frames and, for immersion, the matching second fundamental form.
fn build_frames(spec: &FamilySpec<f64>, s: &SourceArgs) -> Result<(FrameField<f64>, Window<f64>, String), Failure> {
    let sg = matches!(spec, FamilySpec::Explicit(e) if e.name == "sg-lightcone");
    if sg {
        let window = parse_window(s.window.as_deref(), Window::sine_gordon_default())?;
        let lattice = window.lattice(periodic_spacing(s.n)).map_err(config)?;
        let (frames, _) = sine_gordon_fields(&lattice).map_err(math)?;
        return Ok((frames, window, "sine-gordon-kink".into()));
    }
    if !spec.is_catalog() {
        return Err(config(anyhow!("only the sg-lightcone explicit frame has a built-in solution")));
    }
    let window = parse_window(s.window.as_deref(), Window::linear_default())?;
    if let Some(k) = &s.preset_exact {
        let k: u32 = k
            .trim_start_matches("k=")
            .parse()
            .map_err(|e| config(anyhow!("--preset-exact {k}: {e}")))?;
        let frames = exact_linear_frames(spec, k, s.n, window).map_err(|e| match e {
            ReferenceError::NotLinear(_) | ReferenceError::EmptyWindow(..) => config(e),
            other => math(other),
        })?;
        return Ok((frames, window, format!("exact:k={k}")));
    }
    let grid = Grid1D::two_pi(s.n).map_err(config)?;
    let u0 = initial_condition(&s.ic, &grid)?;
    let frames = solved_frames(spec, &u0, s.n, window).map_err(math)?;
    Ok((frames, window, format!("solved:ic={}", s.ic)))
}

fn cmd_immerse(a: &ImmerseArgs) -> Outcome {
    let spec = load_family(&a.family.family)?;
    let (frames, window, source) = build_frames(&spec, &a.source)?;
    let sff = if spec.is_catalog() {
        let uni = universal_for(&spec, a.universal.choice()).map_err(math)?;
        uni.field(&frames.lattice).map_err(math)?
    } else {
        sine_gordon_fields(&frames.lattice).map_err(math)?.1
    };
    let run = run_surface(frames, sff).map_err(math)?;
    let stats = export_obj(&run.mesh, &a.out).map_err(config)?;
    let metrics = a.metrics.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    let rows: Vec<String> = run
        .report
        .rows
        .iter()
        .map(|r| {
            let (e, f, g) = match r.metric {
                Some((e, f, g)) => (Some(e), Some(f), Some(g)),
                None => (None, None, None),
            };
            let rec = r.recovered;
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                num(r.x),
                num(r.t),
                opt(e),
                opt(f),
                opt(g),
                opt(r.curvature),
                opt(rec.map(|s| s.a)),
                opt(rec.map(|s| s.b)),
                opt(rec.map(|s| s.c)),
                opt(r.closure_defect)
            )
        })
        .collect();
    let rep = &run.report;
    let prov = Provenance::new("immerse", &spec)
        .with("source", &source)
        .with("n", a.source.n)
        .with("window", fmt_window(&window))
        .with("sigma", a.universal.sigma)
        .with("beta", a.universal.beta)
        .with("anchor_vertex", run.mesh.anchor)
        .with("anchor_frame", "X=0;e=standard basis")
        .with("mean_K", num(rep.mean_curvature));
    write_csv(&metrics, &prov, "x,t,E,F,G,K,a_rec,b_rec,c_rec,closure_defect", &rows).map_err(config)?;
    println!("vertices={} faces={}", stats.vertices, stats.faces);
    println!("mean_K={}", num(rep.mean_curvature));
    println!("max_abs_K_plus_1={}", num(rep.max_curvature_error));
    println!("metric_rel_error={}", num(rep.metric_rel_error));
    println!("sff_recovery_error={}", num(rep.sff_error));
    println!("closure_defect={}", num(rep.max_closure));
    println!("holonomy_defect={}", num(run.linear_problem.max_defect()));
    println!("structure_residual={}", num(run.structure.max_all()));
    println!("codazzi_residual={}", num(run.codazzi.max_all()));
    println!("frame_drift={}", num(rep.max_drift));
    Ok(())
}

fn cmd_linear_problem(a: &LinearArgs) -> Outcome {
    let spec = load_family(&a.family.family)?;
    let (frames, window, source) = build_frames(&spec, &a.source)?;
    let nd = nondegeneracy(&frames.f, DEFAULT_MASK_THRESHOLD);
    let lp: LinearProblemField<f64> = linear_problem_integrate(&frames, &nd.mask, None, [1.0, 0.0]).map_err(math)?;
    let lat = &lp.lattice;
    let rows: Vec<String> = (0..lat.len())
        .map(|k| {
            let v = lp.v[k];
            format!(
                "{},{},{},{},{}",
                num(lat.xs[k % lat.nx()]),
                num(lat.ts[k / lat.nx()]),
                opt(v.map(|v| v[0])),
                opt(v.map(|v| v[1])),
                opt(lp.defect[k])
            )
        })
        .collect();
    let prov = Provenance::new("linear-problem", &spec)
        .with("source", &source)
        .with("n", a.source.n)
        .with("window", fmt_window(&window))
        .with("v0", "1;0");
    write_csv(&a.out, &prov, "x,t,v1,v2,holonomy_defect", &rows).map_err(config)?;
    println!("holonomy_defect={}", num(lp.max_defect()));
    Ok(())
}

fn init_threads() -> Outcome {
    let Ok(v) = std::env::var("PSS_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| config(anyhow!("PSS_THREADS must be a positive integer, got '{v}'")))?;
    if n == 0 {
        return Err(config(anyhow!("PSS_THREADS must be a positive integer, got '{v}'")));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sff(a) => cmd_sff(a),
        Command::Immerse(a) => cmd_immerse(a),
        Command::LinearProblem(a) => cmd_linear_problem(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
