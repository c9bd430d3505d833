//! End-to-end tests of the command-line interface: exit-status contract,
//! artifact layout and the embedded-config reproducibility rule.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_sis-inverse")
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const TWIN_1D: &str = "\
grid.dim = 1
grid.nx = 16
grid.lx = 1.0
model.m = 0.2
model.n = 0.2
model.t = 0.25
model.dt = 0.00390625
initial.s0 = bump 0.5 0.3 0.35 0.2
initial.i0 = constant 0.3
twin.beta = sin 0.4 0.15 1
twin.gamma = bump 0.3 0.15 0.5 0.2
inverse.delta = 1e-6
inverse.max_iters = 60
inverse.grad_tol = 1e-12
inverse.step0 = 10
";

#[test]
fn forward_emits_conservation_report_and_slices() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.cfg", TWIN_1D);
    let out = tmp.path().join("fwd");
    let result = run_cli(&[
        "forward",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--slices",
        "16",
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );

    let report = fs::read_to_string(out.join("forward_report.txt")).unwrap();
    assert!(
        report.contains("clamp_activations = 0"),
        "report:\n{report}"
    );
    assert!(report.contains("population_floor_ok = true"));
    // Reproducibility: the resolved config is embedded in the report.
    assert!(report.contains("# grid.nx = 16"));
    assert!(report.contains("# model.dt = 0.00390625"));
    assert!(
        report.contains("# inverse.armijo_c = 0.0001"),
        "defaults must be embedded"
    );

    let conservation = fs::read_to_string(out.join("conservation.csv")).unwrap();
    let max_drift = conservation
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("step"))
        .map(|l| l.split(',').nth(5).unwrap().parse::<f64>().unwrap())
        .fold(0.0f64, f64::max);
    assert!(max_drift <= 1e-11, "mass drift {max_drift} in CLI run");

    let manifest = fs::read_to_string(out.join("slices.csv")).unwrap();
    let rows: Vec<&str> = manifest
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("index"))
        .collect();
    assert_eq!(rows.len(), 5, "strides 0,16,32,48 plus the final level");
    for row in rows {
        let s_file = row.split(',').nth(2).unwrap();
        assert!(out.join(s_file).exists(), "missing slice {s_file}");
    }
}

#[test]
fn invalid_config_value_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "bad.cfg",
        "grid.dim = 1\ngrid.nx = 16\ngrid.lx = 1\nmodel.m = 1.5\n",
    );
    let result = run_cli(&["forward", "--config", &config]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("model.m"), "stderr: {stderr}");
    assert!(stderr.contains("must lie in (0,1)"), "stderr: {stderr}");
}

#[test]
fn duplicate_key_is_a_syntax_error_with_both_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "dup.cfg",
        "grid.dim = 1\ngrid.nx = 16\ngrid.lx = 1\ngrid.nx = 32\n",
    );
    let result = run_cli(&["invert", "--config", &config]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("duplicate key"), "stderr: {stderr}");
    assert!(
        stderr.contains('2') && stderr.contains('4'),
        "both lines named: {stderr}"
    );
}

#[test]
fn invert_without_observations_or_twin_fails_fast() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "plain.cfg",
        "grid.dim = 1\ngrid.nx = 16\ngrid.lx = 1\n",
    );
    let out = tmp.path().join("inv");
    let result = run_cli(&[
        "invert",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    assert!(
        !out.join("iterations.csv").exists(),
        "no artifacts before validation"
    );
}

#[test]
fn unknown_verb_is_a_usage_error() {
    let result = run_cli(&["plot", "--config", "x.cfg"]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn invert_twin_writes_reports_with_monotone_cost() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.cfg", TWIN_1D);
    let out = tmp.path().join("inv");
    let result = run_cli(&[
        "invert",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );

    let iterations = fs::read_to_string(out.join("iterations.csv")).unwrap();
    let costs: Vec<f64> = iterations
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("iter"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(costs.len() > 1);
    assert!(
        costs.windows(2).all(|w| w[1] <= w[0]),
        "cost column must be nonincreasing"
    );

    let status = fs::read_to_string(out.join("status.txt")).unwrap();
    assert_eq!(status.lines().count(), 1, "status is a one-line file");
    let reason = status.split_whitespace().next().unwrap();
    assert!(["converged", "line_search_failed", "max_iterations"].contains(&reason));

    let beta = fs::read_to_string(out.join("beta.csv")).unwrap();
    assert!(beta.starts_with("# grid d=1 nx=16 lx=1"));
    assert_eq!(beta.lines().count(), 17, "header plus one value per cell");

    let scores = fs::read_to_string(out.join("scores.csv")).unwrap();
    let row = scores.lines().last().unwrap();
    let vals: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(vals.len(), 4);
    assert!(vals.iter().all(|v| v.is_finite() && *v >= 0.0));

    // Twin runs keep the problem inputs next to the recovery.
    for input in [
        "observations_s.csv",
        "observations_i.csv",
        "truth_beta.csv",
        "truth_gamma.csv",
    ] {
        assert!(out.join(input).exists(), "missing {input}");
    }
}

#[test]
fn forward_runs_in_two_dimensions() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "run2d.cfg",
        "grid.dim = 2\ngrid.nx = 12\ngrid.ny = 10\ngrid.lx = 1.0\ngrid.ly = 0.8\n\
         model.t = 0.25\nmodel.dt = 0.015625\n\
         twin.beta = bump 0.35 0.2 0.5 0.2\ntwin.gamma = constant 0.3\n",
    );
    let out = tmp.path().join("fwd2d");
    let result = run_cli(&[
        "forward",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let slice = fs::read_to_string(out.join("s_00016.csv")).unwrap();
    assert!(slice.starts_with("# grid d=2 nx=12 ny=10 lx=1 ly=0.8"));
    assert_eq!(slice.lines().count(), 121, "header plus 12 x 10 values");
}

#[test]
fn invert_accepts_observation_files_from_a_forward_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.cfg", TWIN_1D);
    let fwd = tmp.path().join("fwd");
    let result = run_cli(&[
        "forward",
        "--config",
        &config,
        "--out",
        fwd.to_str().unwrap(),
    ]);
    assert!(result.status.success());

    // The final slice files of the forward run become the observations.
    let s_file = fwd.join("s_00064.csv");
    let i_file = fwd.join("i_00064.csv");
    assert!(s_file.exists() && i_file.exists());

    let obs_config = format!(
        "grid.dim = 1\ngrid.nx = 16\ngrid.lx = 1.0\nmodel.m = 0.2\nmodel.n = 0.2\n\
         model.t = 0.25\nmodel.dt = 0.00390625\n\
         initial.s0 = bump 0.5 0.3 0.35 0.2\ninitial.i0 = constant 0.3\n\
         observations.s_file = {}\nobservations.i_file = {}\n\
         inverse.max_iters = 25\ninverse.step0 = 10\n",
        s_file.to_str().unwrap(),
        i_file.to_str().unwrap()
    );
    let obs_config = write_config(tmp.path(), "obs.cfg", &obs_config);
    let out = tmp.path().join("inv");
    let result = run_cli(&[
        "invert",
        "--config",
        &obs_config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    assert!(out.join("iterations.csv").exists());
    assert!(out.join("observations_s.csv").exists());
    // No twin block, hence no truth to score against.
    assert!(!out.join("scores.csv").exists());
    assert!(!out.join("truth_beta.csv").exists());
}

#[test]
fn adjoint_check_reports_small_fd_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.cfg", TWIN_1D);
    let out = tmp.path().join("chk");
    let result = run_cli(&[
        "adjoint-check",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );

    let fd = fs::read_to_string(out.join("fd_table.csv")).unwrap();
    let mut min_err = f64::INFINITY;
    for line in fd
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("direction"))
    {
        let err: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        min_err = min_err.min(err);
    }
    assert!(min_err <= 1e-4, "FD table minimum relative error {min_err}");

    let duality = fs::read_to_string(out.join("duality.csv")).unwrap();
    assert_eq!(
        duality
            .lines()
            .filter(|l| l.starts_with('0') || l.starts_with('1'))
            .count(),
        2
    );
    assert!(out.join("tangent.csv").exists());
}

#[test]
fn sweep_writes_summary_and_per_delta_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("{TWIN_1D}sweep.deltas = 1e-4 1e-2\nsweep.seeds = 1 2\n");
    let config = write_config(tmp.path(), "run.cfg", &body);
    let out = tmp.path().join("sweep");
    let result = run_cli(&["sweep", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("delta"))
        .collect();
    assert_eq!(rows.len(), 2, "one row per delta");
    for (idx, delta) in ["1e-4", "1e-2"].iter().enumerate() {
        let dir = out.join(format!("delta_{idx}_{delta}"));
        assert!(dir.join("iterations.csv").exists(), "missing {dir:?}");
        assert!(dir.join("start_1").join("status.txt").exists());
        assert!(dir.join("start_2").join("status.txt").exists());
    }
}

#[test]
fn seed_override_changes_observations_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let noisy = format!("{TWIN_1D}twin.noise = 0.02\ntwin.seed = 7\n");
    let config = write_config(tmp.path(), "noisy.cfg", &noisy);

    let run_with = |label: &str, seed: Option<&str>| -> String {
        let out = tmp.path().join(label);
        let mut args = vec![
            "invert".to_string(),
            "--config".to_string(),
            config.clone(),
            "--out".to_string(),
            out.to_str().unwrap().to_string(),
        ];
        if let Some(seed) = seed {
            args.push("--seed".to_string());
            args.push(seed.to_string());
        }
        let argrefs: Vec<&str> = args.iter().map(String::as_str).collect();
        let result = run_cli(&argrefs);
        assert!(result.status.success());
        fs::read_to_string(out.join("beta.csv")).unwrap()
    };

    let base = run_with("a", None);
    let same = run_with("b", None);
    let overridden = run_with("c", Some("8"));
    assert_eq!(
        base, same,
        "same config and seed must be bitwise reproducible"
    );
    assert_ne!(base, overridden, "--seed must change the noise draw");
}
