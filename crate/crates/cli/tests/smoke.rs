use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use tvvi_cli::{read_csv, Kind, Schema, Value};

const BUDGET: Duration = Duration::from_secs(10);

fn tvvi() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tvvi"));
    c.env_remove("TVVI_THREADS").env("RUST_LOG", "error");
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Runs with `--config` and the extra args, checking the time budget.
fn run(config: &Path, extra: &[&str]) -> Output {
    let start = Instant::now();
    let out = tvvi().arg("--config").arg(config).args(extra).output().unwrap();
    assert!(start.elapsed() < BUDGET, "{} took {:?}", config.display(), start.elapsed());
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn real(v: &Value) -> f64 {
    match v {
        Value::Real(x) => *x,
        other => panic!("expected a real, got {other:?}"),
    }
}

fn vector(v: &Value) -> Vec<f64> {
    match v {
        Value::Vector(x) => x.clone(),
        other => panic!("expected a vector, got {other:?}"),
    }
}

const TRACK: &str = "command = track
scenario = periodic_1d
algorithm = forward
algorithm.eta = 0.5
run.horizon = 20
run.z1 = 1
run.divergence_threshold = 50
";

fn track_schema() -> Schema {
    Schema::new(&[
        ("t", Kind::Int),
        ("z", Kind::Vector),
        ("z_star", Kind::Vector),
        ("sq_dist", Kind::Real),
        ("cum_track", Kind::Real),
        ("cum_regret", Kind::Real),
    ])
}

#[test]
fn track_grows_by_three_halves_and_fails_on_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "track.conf", TRACK);

    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_csv(&stdout(&out), &track_schema()).unwrap();
    assert_eq!(rows.len(), 16);
    for t in 0..=7 {
        let z = vector(&rows[2 * t][1])[0];
        assert!((z.abs() - 1.5f64.powi(t as i32)).abs() < 1e-12, "t = {t}: {z}");
    }
    assert_eq!(rows[15][0], Value::Int(16));
    assert!(rows[15][1..].iter().all(|v| *v == Value::Diverged));

    let out = run(&cfg, &["--fail-on-divergence"]);
    assert_eq!(out.status.code(), Some(3));
    let flagged = write_config(dir.path(), "flagged.conf", &format!("{TRACK}run.fail_on_divergence = true\n"));
    assert_eq!(run(&flagged, &[]).status.code(), Some(3));
}

#[test]
fn track_meta_writes_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "meta.conf",
        "command = track\nscenario = chaos_1d\nalgorithm = meta_adaptive\nalgorithm.k = 3\nrun.horizon = 30\nrun.z1 = 2\n",
    );
    let out = run(&cfg, &["--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 30);
    for r in rows {
        let w: Vec<f64> = r["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(w.len(), 3);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn bounds_cyclic_learner_holds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bounds.conf",
        "command = bounds\nscenario = periodic_1d\nscenario.radius = 1\nalgorithm = cyclic\nalgorithm.period = 2\nrun.horizon = 1000\nrun.z1 = 0.7\n",
    );
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let schema = Schema::new(&[
        ("kind", Kind::Text),
        ("measure", Kind::Text),
        ("measured", Kind::Real),
        ("bound", Kind::Real),
        ("holds", Kind::Bool),
    ]);
    let rows = read_csv(&stdout(&out), &schema).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], Value::Text("cyclic".into()));
    assert_eq!(rows[0][1], Value::Text("regret".into()));
    assert_eq!(rows[0][4], Value::Bool(true));
    // k G² / (2μ) (log(T/k) + 1) with k = 2, G = 8, μ = 1, T = 1000
    let bound = 64.0 * (500f64.ln() + 1.0);
    assert!((real(&rows[0][3]) - bound).abs() < 1e-9 * bound);
    assert!(real(&rows[0][2]) <= bound);
}

#[test]
fn bounds_violation_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    // a contraction factor far below the true one makes the bound too small
    let cfg = write_config(
        dir.path(),
        "tight.conf",
        "command = bounds\nscenario = quadratic_drift\nscenario.c1 = 5\nalgorithm = forward\nalgorithm.eta = 0.1\nbounds.c = 0.01\nrun.horizon = 50\n",
    );
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).contains(",false\n"));
}

fn bifurcation_schema() -> Schema {
    Schema::new(&[("eta", Kind::Real), ("classification", Kind::Text), ("cells", Kind::Indices)])
}

#[test]
fn bifurcation_reduced_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bif.conf", "command = bifurcation\nbifurcation.eta_n = 80\n");
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("# schema=v1\neta,classification,cells\n"));
    let rows = read_csv(&text, &bifurcation_schema()).unwrap();
    assert_eq!(rows.len(), 80);
    assert_eq!(rows[79][0], Value::Real(8.0));
    assert_eq!(rows[79][1], Value::Text("converged".into()));
    assert_eq!(rows[79][2], Value::Indices(vec![500]));
    let eta_2 = rows.iter().find(|r| real(&r[0]) == 2.0).unwrap();
    assert_eq!(eta_2[1], Value::Diverged);
    assert!(rows.iter().filter(|r| real(&r[0]) <= 0.5).all(|r| r[1] == Value::Text("converged".into())));
}

#[test]
fn orbit_modes() {
    let dir = tempfile::tempdir().unwrap();
    let newton = write_config(
        dir.path(),
        "newton.conf",
        "command = orbit\norbit.mode = newton\norbit.eta = 3.9\norbit.period = 4\norbit.x0 = -0.1\n",
    );
    let out = run(&newton, &[]);
    assert_eq!(out.status.code(), Some(0));
    let schema = Schema::new(&[
        ("period", Kind::Int),
        ("fixed_point", Kind::Real),
        ("residual", Kind::Real),
        ("orbit", Kind::Vector),
        ("multiplier", Kind::Real),
        ("stable", Kind::Bool),
        ("iterations", Kind::Int),
    ]);
    let rows = read_csv(&stdout(&out), &schema).unwrap();
    let cycle = vector(&rows[0][3]);
    for (x, want) in cycle.iter().zip([-1.3454, 5.9237, -1.5718, 7.0472]) {
        assert!((x - want).abs() < 1e-4, "{cycle:?}");
    }
    assert!((real(&rows[0][4]) + 0.2632).abs() < 1e-4);
    assert_eq!(rows[0][5], Value::Bool(true));

    let p3 = write_config(dir.path(), "p3.conf", "command = orbit\norbit.mode = period3\norbit.eta = 6.1\n");
    let out = run(&p3, &[]);
    assert_eq!(out.status.code(), Some(0));
    let schema = Schema::new(&[("x", Kind::Real), ("orbit", Kind::Vector), ("step_orbit", Kind::Vector)]);
    let rows = read_csv(&stdout(&out), &schema).unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!(vector(&r[1]).len(), 3);
        assert_eq!(vector(&r[2]).len(), 7);
    }

    let iterate =
        write_config(dir.path(), "it.conf", "command = orbit\norbit.eta = 2\norbit.x0 = 0.01\norbit.n_steps = 100\n");
    let out = run(&iterate, &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().last().unwrap().ends_with(",diverged,diverged"));
    assert_eq!(run(&iterate, &["--fail-on-divergence"]).status.code(), Some(3));
}

#[test]
fn star_scan_marks_diverged_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "star.conf",
        "command = star\nstar.eta = 0.3, 0.5\nstar.n_samples = 16\nstar.n_steps = 200\n",
    );
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let schema = Schema::new(&[
        ("eta", Kind::Real),
        ("n_samples", Kind::Int),
        ("diverged", Kind::Int),
        ("radial_score", Kind::Real),
        ("final_avg_norm", Kind::Real),
    ]);
    let rows = read_csv(&stdout(&out), &schema).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2], Value::Int(0));
    assert!(real(&rows[0][4]) < 1e-6);
    assert_eq!(rows[1][2], Value::Int(16));
    assert_eq!(rows[1][3], Value::Diverged);
    assert_eq!(run(&cfg, &["--fail-on-divergence"]).status.code(), Some(3));
}

#[test]
fn verify_chaos_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "verify.conf", "command = verify\nscenario = chaos_1d\nverify.samples = 5000\n");
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let schema =
        Schema::new(&[("t", Kind::Int), ("check", Kind::Text), ("constant", Kind::Real), ("passed", Kind::Bool)]);
    let rows = read_csv(&stdout(&out), &schema).unwrap();
    let constant = |t: i64, check: &str| {
        rows.iter().find(|r| r[0] == Value::Int(t) && r[1] == Value::Text(check.into())).map(|r| real(&r[2])).unwrap()
    };
    assert_eq!(constant(1, "strong_monotone"), 0.125);
    assert_eq!(constant(1, "lipschitz"), 0.3275);
    assert_eq!(constant(2, "strong_monotone"), 2.0);
    assert_eq!(constant(2, "lipschitz"), 5.24);
    assert!(rows.iter().all(|r| r[3] == Value::Bool(true)));

    let drift = write_config(
        dir.path(),
        "drift.conf",
        "command = verify\nscenario = quadratic_drift\nscenario.b = 0.5\nverify.rounds = 3\n",
    );
    assert_eq!(run(&drift, &[]).status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.conf",
        "command = track\nscenario = periodic_1d\nalgorithm = forward\nalgorithm.eta = -1\n",
    );
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("algorithm.eta"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn output_path_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "track.conf", TRACK);
    let target = dir.path().join("rows.csv");
    let out = run(&cfg, &["--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(read_csv(&std::fs::read_to_string(&target).unwrap(), &track_schema()).unwrap().len(), 16);

    let missing = dir.path().join("no/such/dir/rows.csv");
    let out = run(&cfg, &["--out", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("no/such/dir/rows.csv"));
}
