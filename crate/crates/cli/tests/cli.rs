use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pss")).args(args).output().expect("spawn pss")
}

fn family(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../families").join(name).display().to_string()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_linear_t2_exits_zero_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = pss(&["verify", "--family", &family("linear-t2.cfg"), "--samples", "1000", "--tol", "1e-9", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let body = std::fs::read_to_string(&out).unwrap();
    assert!(body.contains("# seed=1"));
    assert!(body.contains("sha256="));
    assert!(body.contains("\nidentity,max_residual,n_samples,pass\n"));
    assert!(body.contains("id_f12,"));
}

#[test]
fn malformed_config_exits_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "branch = T2\nmu = 0\nm = oops\n").unwrap();
    let o = pss(&["verify", "--family", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "branch = T2\nmu = 0\nm = 1\nsign = +\nh = identity\npsi = identity\ncolour = red\n").unwrap();
    assert_eq!(pss(&["verify", "--family", path_str(&cfg)]).status.code(), Some(2));
}

#[test]
fn broken_constraint_exits_one_and_names_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t3.cfg");
    let body = std::fs::read_to_string(family("t3.cfg")).unwrap().replace("m2 = 1", "m2 = 1.3");
    std::fs::write(&cfg, body).unwrap();
    let out = dir.path().join("r.csv");
    let o = pss(&["verify", "--family", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("id_f32"), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&out).unwrap().contains("id_f32,"));
}

#[test]
fn certify_prints_reports() {
    let o = pss(&["certify", "--family", &family("ch.cfg")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("NONEXISTENT, obstruction=1.0"));
    let o = pss(&["certify", "--family", &family("t5i.cfg")]);
    let line = stdout(&o).lines().next().unwrap().to_string();
    assert!(line.starts_with("NONEXISTENT") && line.contains("k1=") && line.contains("k2="), "{line}");

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sff.csv");
    let o = pss(&["certify", "--family", &family("linear-t2.cfg"), "--out", path_str(&out)]);
    assert_eq!(stdout(&o).lines().next(), Some("UNIVERSAL_EXISTS, Prop 1(i)"));
    let body = std::fs::read_to_string(&out).unwrap();
    assert!(body.contains("x,t,a,b,c,gauss_residual,masked\n"));
}

#[test]
fn missing_output_path_exits_two() {
    assert_eq!(pss(&["immerse", "--family", "preset:linear-t2"]).status.code(), Some(2));
    assert_eq!(pss(&["solve", "--family", "preset:ch"]).status.code(), Some(2));
    let o = pss(&["solve", "--family", "preset:ch", "--tmax", "0.01", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_two() {
    let o = Command::new(env!("CARGO_BIN_EXE_pss"))
        .env("PSS_THREADS", "0")
        .args(["certify", "--family", "preset:ch"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_writes_one_row_per_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let o = pss(&[
        "solve", "--family", &family("ch.cfg"), "--ic", "cos", "--n", "256", "--dt", "1e-3", "--tmax", "1", "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let body = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = body.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("t,x0,x1,"));
    assert_eq!(rows[0].split(',').count(), 257);
    // snapshots every 100 steps from 0 to 1000
    assert_eq!(rows.len(), 1 + 11);
    assert!(rows.last().unwrap().starts_with("1.0"));
}

#[test]
fn solve_cfl_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let o = pss(&["solve", "--family", "preset:ch", "--dt", "0.5", "--tmax", "1", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

fn summary_value(text: &str, key: &str) -> f64 {
    text.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap().parse().unwrap()
}

#[test]
fn immerse_writes_obj_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let obj: PathBuf = dir.path().join("surf.obj");
    let o = pss(&["immerse", "--family", &family("linear-t2.cfg"), "--preset-exact", "k=1", "--n", "512", "--out", path_str(&obj)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let k = summary_value(&stdout(&o), "mean_K");
    assert!((-1.001..=-0.999).contains(&k), "{k}");
    let mesh = std::fs::read_to_string(&obj).unwrap();
    assert!(mesh.lines().any(|l| l.starts_with("v ")));
    assert!(mesh.lines().any(|l| l.starts_with("f ")));
    let metrics = std::fs::read_to_string(obj.with_extension("csv")).unwrap();
    assert!(metrics.contains("x,t,E,F,G,K,a_rec,b_rec,c_rec,closure_defect\n"));
    assert!(metrics.contains("# anchor_vertex="));
}

#[test]
fn immerse_sine_gordon_and_linear_problem() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("sg.obj");
    let o = pss(&["immerse", "--family", "preset:sg-lightcone", "--n", "256", "--out", path_str(&obj)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lp = dir.path().join("lp.csv");
    let o = pss(&["linear-problem", "--family", "preset:sg-lightcone", "--n", "256", "--out", path_str(&lp)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(summary_value(&stdout(&o), "holonomy_defect") < 1e-4);
}

#[test]
fn sff_on_nonexistent_branch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    assert_eq!(pss(&["sff", "--family", "preset:ch", "--out", path_str(&out)]).status.code(), Some(1));
    let o = pss(&["sff", "--family", "preset:t4-example", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn identical_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = pss(&["verify", "--family", "preset:t4-example", "--samples", "300", "--seed", "9", "--out", path_str(&out)]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
    let solve = |name: &str| {
        let out = dir.path().join(name);
        pss(&["solve", "--family", "preset:ch", "--n", "64", "--tmax", "0.2", "--out", path_str(&out)]);
        std::fs::read(out).unwrap()
    };
    assert_eq!(solve("u1.csv"), solve("u2.csv"));
}
