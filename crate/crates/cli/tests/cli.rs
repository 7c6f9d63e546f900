use std::fs;
use std::process::Command;

use liqlab::{parse_config, run_experiment, validate, Config, ConfigError, RunError, EXPERIMENTS, MANIFEST_FILE};
use sha2::{Digest, Sha256};

fn config(text: &str) -> Config {
    parse_config(text).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn every_experiment_runs_with_defaults_and_lists_its_files() {
    let dir = tempfile::tempdir().unwrap();
    for experiment in EXPERIMENTS {
        let out = dir.path().join(experiment);
        let manifest = run_experiment(experiment, &Config::new(), 3, &out).unwrap();
        assert!(!manifest.outputs.is_empty(), "{experiment}");
        for file in &manifest.outputs {
            let bytes = fs::read(out.join(&file.name)).unwrap();
            assert!(!bytes.is_empty());
            assert_eq!(bytes.len(), file.bytes);
            assert_eq!(format!("{:x}", Sha256::digest(&bytes)), file.sha256);
            assert!(!bytes.contains(&b'\r'));
        }
        let text = fs::read_to_string(out.join(MANIFEST_FILE)).unwrap();
        assert!(text.contains(&format!("experiment={experiment}\n")));
        assert!(text.contains("base_seed=3\n"));
        for file in &manifest.outputs {
            assert!(text.contains(&format!("={}\n", file.sha256)));
        }
    }
}

#[test]
fn impact_curve_fits_square_root() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_experiment(
        "impact-curve",
        &config("hurst=0.5\nsigma=1\nk=1\nkhat=1\nq_min=0.01\nq_max=10000"),
        0,
        dir.path(),
    )
    .unwrap();
    let fitted: f64 = manifest.result("fitted_exponent").unwrap().parse().unwrap();
    assert!((fitted - 0.5).abs() < 1e-9);
    let rows = csv_rows(&fs::read_to_string(dir.path().join("impact_curve.csv")).unwrap());
    assert_eq!(rows[0], ["q", "delta_p", "exponent_model"]);
    let first: f64 = rows[1][0].parse().unwrap();
    let last: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert_eq!((first, last), (0.01, 10000.0));
}

#[test]
fn cycle_run_reproduces_worked_stages() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(
        "cycle-run",
        &config("x0=100\ny0=100\nalpha=10\nm=9\nsigma_amt=1"),
        0,
        dir.path(),
    )
    .unwrap();
    let rows = csv_rows(&fs::read_to_string(dir.path().join("cycle_report.csv")).unwrap());
    assert_eq!(rows[0], ["stage", "pool_x", "pool_y", "inside_x", "inside_y", "outside_x", "outside_y"]);
    let stage = |i: usize| -> Vec<f64> { rows[i][1..].iter().map(|v| v.parse().unwrap()).collect() };
    assert_eq!(rows[2][0], "stage1");
    let s1 = stage(2);
    assert_eq!(s1[0], 90.0);
    assert!((s1[1] - 10000.0 / 90.0).abs() < 1e-12);
    let s2 = stage(3);
    assert_eq!(s2[0], 99.0);
    assert!((s2[1] * s2[0] - 12100.0).abs() < 1e-9);
    let s4 = stage(5);
    assert!((s4[0] - 100.0).abs() < 1e-12 && (s4[1] - 100.0).abs() < 1e-12);
    assert_eq!(rows.last().unwrap()[0], "summary");
}

#[test]
fn cycle_run_explicit_amounts_respect_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment("cycle-run", &config("removal=amounts\ng=1"), 0, dir.path()).unwrap_err();
    assert!(matches!(err, RunError::Config(ConfigError::Missing { ref key }) if key == "h"));
    let err = run_experiment("cycle-run", &config("g=1\nh=1"), 0, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = run_experiment("cycle-run", &config("removal=amounts\ng=1\nh=5"), 0, dir.path()).unwrap_err();
    assert!(matches!(err, RunError::Model(liqlab_core::Error::RatioMismatch { .. })));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn catbond_optimize_reports_point_six() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_experiment("catbond-optimize", &config("q=0.2\nr=1"), 0, dir.path()).unwrap();
    assert_eq!(manifest.result("fraction").unwrap().parse::<f64>().unwrap(), 0.6);
    let rows = csv_rows(&fs::read_to_string(dir.path().join("catbond_optimize.csv")).unwrap());
    let analytic = rows.iter().find(|r| r[0] == "single-analytic").unwrap();
    assert_eq!(analytic[3].parse::<f64>().unwrap(), 0.6);
    let numeric = rows.iter().find(|r| r[0] == "single-golden-section").unwrap();
    assert!((numeric[3].parse::<f64>().unwrap() - 0.6).abs() < 1e-8);
}

#[test]
fn catbond_sensitivity_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment("catbond-sensitivity", &config("n_q=3\nn_r=2"), 0, dir.path()).unwrap();
    let rows = csv_rows(&fs::read_to_string(dir.path().join("sensitivity.csv")).unwrap());
    assert_eq!(rows[0], ["q", "r", "f_analytic", "f_numeric", "f_series", "abs_err"]);
    assert_eq!(rows.len(), 1 + 6);
}

#[test]
fn fbm_gen_changes_with_seed_and_method_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let small = config("n_steps=64\nn_paths=2");
    let a = run_experiment("fbm-gen", &small, 1, &dir.path().join("a")).unwrap();
    let b = run_experiment("fbm-gen", &small, 2, &dir.path().join("b")).unwrap();
    assert_ne!(a.outputs[0].sha256, b.outputs[0].sha256);
    let chol = run_experiment(
        "fbm-gen",
        &config("n_steps=64\nn_paths=1\nmethod=cholesky\nprocess=fou\nkappa=-1\nsigma=0.2\np0=1"),
        1,
        &dir.path().join("c"),
    )
    .unwrap();
    let generator = &chol.methods.iter().find(|(k, _)| k == "fbm_generator").unwrap().1;
    assert!(generator.contains("method=cholesky"));
    assert!(generator.contains("prng=chacha8"));
    let text = fs::read_to_string(dir.path().join("c").join("path_0000.csv")).unwrap();
    assert!(text.starts_with("t,value\n0.0000000000000000e0,1.0000000000000000e0\n"));
}

#[test]
fn config_errors_name_the_key() {
    assert!(matches!(
        validate("impact-curve", &config("hurst=1.5")),
        Err(ConfigError::Range { ref key, .. }) if key == "hurst"
    ));
    assert!(matches!(
        validate("impact-curve", &config("n_points=many")),
        Err(ConfigError::TypeMismatch { ref key, .. }) if key == "n_points"
    ));
    assert!(matches!(
        validate("fbm-gen", &config("alpha=1")),
        Err(ConfigError::UnknownKey { ref key, .. }) if key == "alpha"
    ));
    assert!(matches!(validate("bogus", &Config::new()), Err(ConfigError::UnknownExperiment(_))));
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment("impact-curve", &config("q_min=10\nq_max=1"), 0, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let err = run_experiment("catbond-optimize", &Config::new(), 0, &blocker.join("out")).unwrap_err();
    assert!(matches!(err, RunError::Io { .. }));
    assert_eq!(err.exit_code(), 4);
}

fn liqlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liqlab"))
}

#[test]
fn binary_applies_file_then_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# catbond\nq=0.3\nr=2\n").unwrap();
    let out = dir.path().join("out");
    let status = liqlab()
        .args(["catbond-optimize", "--config"])
        .arg(&cfg)
        .args(["--set", "q=0.2", "--set", "r=1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success());
    let manifest = fs::read_to_string(out.join(MANIFEST_FILE)).unwrap();
    assert!(manifest.contains("config.q=0.2\n"));
    assert!(manifest.contains("config.r=1\n"));
    assert!(manifest.contains("result.fraction=5.9999999999999998e-1\n"));
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| liqlab().args(args).arg("--out").arg(dir.path()).status().unwrap().code();
    assert_eq!(code(&["no-such-experiment"]), Some(2));
    assert_eq!(code(&["impact-curve", "--set", "hurst=1.5"]), Some(2));
    assert_eq!(code(&["impact-curve", "--set", "hurst"]), Some(2));
    assert_eq!(code(&["cycle-run", "--set", "removal=amounts", "--set", "g=1", "--set", "h=5"]), Some(3));

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "q=0.1\nq=0.2\n").unwrap();
    let output = liqlab()
        .arg("catbond-optimize")
        .arg("--config")
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 2"));
    assert_eq!(
        liqlab().args(["catbond-optimize", "--config", "/nonexistent/cfg"]).status().unwrap().code(),
        Some(4)
    );
}
