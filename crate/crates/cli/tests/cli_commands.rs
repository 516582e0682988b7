use std::fs;
use std::path::Path;
use std::process::Command;

use jmgt_cli::output::content_hash;

fn jmgt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_jmgt"))
        .args(args)
        .env("JMGT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn modal_csv_has_expected_columns() {
    let out = jmgt(&["modal", "--tau", "0.5", "--beta", "1", "--xi-count", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau,beta,xi,re_l1,re_l2,re_l3,abscissa,stable");
    assert_eq!(lines.len(), 6);
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
}

#[test]
fn modal_unstable_pair_reports_nonnegative_abscissa() {
    let out = jmgt(&["modal", "--tau", "1.5", "--beta", "1", "--xi-count", "20"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).any(|l| l.ends_with(",false")));
}

#[test]
fn modal_sweep_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.json", r#"{"tau": 0.5, "beta": 1.0, "sweep": true, "grid_count": 10, "xi_count": 12}"#);
    let out_dir = dir.path().join("run");
    let out = jmgt(&["modal", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("modal.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 100);
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (tau, beta): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        if (tau - beta).abs() > 0.2 + 1e-9 {
            assert_eq!(f[7] == "true", tau < beta, "{line}");
        }
    }
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_type = write(dir.path(), "a.json", r#"{"tau": "x", "beta": 1.0}"#);
    let out = jmgt(&["modal", "--config", &bad_type]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau"));
    let extra = write(dir.path(), "b.json", r#"{"tau": 0.5, "beta": 1.0, "gamma": 3}"#);
    let out = jmgt(&["modal", "--config", &extra]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn bad_thread_count_is_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_jmgt"))
        .args(["modal", "--xi-count", "3"])
        .env("JMGT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

const SMALL_RUN: &str = r#"{"n": 16, "t_end": 0.2, "family": "random-band", "band": [1.0, 3.0],
  "amplitude": 0.05, "seed": 42, "report_stride": 2, "snapshot_stride": 3}"#;

fn simulate(dir: &Path, name: &str, cfg: &str) -> std::process::Output {
    let out_dir = dir.join(name);
    jmgt(&["simulate", "--config", cfg, "--out", out_dir.to_str().unwrap()])
}

#[test]
fn simulate_is_deterministic_and_manifest_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SMALL_RUN);
    for name in ["a", "b"] {
        let out = simulate(dir.path(), name, &cfg);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("a/norms.csv")).unwrap();
    let b = fs::read(dir.path().join("b/norms.csv")).unwrap();
    assert_eq!(a, b);
    let header = String::from_utf8(a.clone()).unwrap();
    assert!(header.starts_with("t,energy2,"));
    assert!(header.lines().next().unwrap().ends_with(",m0,besov_m,fitted_c"));

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["config"]["family"], "random-band");
    assert!(manifest["notes"][0].as_str().unwrap().contains("periodic box"));
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o["name"] == "final_w.bin"));
    assert!(outputs.iter().any(|o| o["name"] == "snap_000000_u.bin"));
    for o in outputs {
        let bytes = fs::read(dir.path().join("a").join(o["name"].as_str().unwrap())).unwrap();
        assert_eq!(o["hash"], content_hash(&bytes));
    }
}

#[test]
fn besov_reads_simulation_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SMALL_RUN);
    assert!(simulate(dir.path(), "run", &cfg).status.success());
    let snap = dir.path().join("run/final_u.bin");
    let out = jmgt(&["besov", "--input", snap.to_str().unwrap(), "--s", "1.5", "--r", "1", "--homogeneous"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let norm: f64 = text.lines().next().unwrap().strip_prefix("norm,").unwrap().parse().unwrap();
    assert!(norm > 0.0 && norm.is_finite());
    assert!(text.contains("q,weighted_block_norm"));
}

#[test]
fn unstable_linear_run_diverges_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sim.json",
        r#"{"tau": 1.5, "beta": 1.0, "nonlinear": false, "n": 8, "t_end": 400.0,
           "family": "single-mode", "mode": [1, 0, 0], "amplitude": 1.0, "report_stride": 50,
           "track_besov": false}"#,
    );
    let out = simulate(dir.path(), "run", &cfg);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // the partial run is still fully described
    assert!(dir.path().join("run/manifest.json").exists());
    assert!(dir.path().join("run/norms.csv").exists());
}

#[test]
fn linear_decay_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("ld");
    let out = jmgt(&[
        "linear-decay", "--tau", "0.5", "--beta", "1", "--ell-list", "0", "--sigma-list", "",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("pass"));
    let gp = fs::read_to_string(out_dir.join("decay.gp")).unwrap();
    assert!(gp.contains("decay.csv"));
    let csv = fs::read_to_string(out_dir.join("decay.csv")).unwrap();
    assert!(csv.starts_with("t,lambda^0_V"));
}

#[test]
fn decay_rejects_unstable_parameters() {
    let out = jmgt(&["w-decay", "--tau", "2", "--beta", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_stability_passes() {
    let out = jmgt(&["verify", "stability"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
}

#[test]
fn negative_control_exits_nonzero() {
    let out = jmgt(&["verify", "stability", "--negative-control"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("[FAIL]"));
}

#[test]
fn unknown_suite_is_config_error() {
    assert_eq!(jmgt(&["verify", "bogus"]).status.code(), Some(2));
}
