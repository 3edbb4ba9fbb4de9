use std::path::Path;
use std::process::{Command, Output};

fn roughbound(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roughbound"))
        .args(args)
        .current_dir(dir)
        .env("ROUGHBOUND_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sample_is_reproducible_and_writes_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "hurst = 0.45\nsteps = 1024\n");
    let mut bodies = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        std::fs::create_dir(&out).unwrap();
        let o = roughbound(&["sample", "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        bodies.push(std::fs::read(out.join("driver.csv")).unwrap());
        let meta = std::fs::read_to_string(out.join("driver.meta.toml")).unwrap();
        assert!(meta.contains("seed = 7") && meta.contains("steps = 1024") && meta.contains("lift = \"geometric\""));
    }
    assert_eq!(bodies[0], bodies[1]);
    let csv = String::from_utf8(bodies.remove(0)).unwrap();
    assert!(csv.starts_with("time,X\n"));
    assert_eq!(csv.lines().count(), 1026);
}

#[test]
fn invalid_hurst_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "hurst = 1.2\n");
    let o = roughbound(&["sample", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(10));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "hurts = 0.4\n");
    let o = roughbound(&["sample", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(10));
}

#[test]
fn missing_output_directory_reports_path() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nowhere");
    let o = roughbound(&["sample", "--out", missing.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(22));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere"));
}

#[test]
fn dirichlet_below_threshold_has_its_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bc = \"dirichlet\"\nhurst = 0.6\n");
    let o = roughbound(&["solve", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(19));
}

#[test]
fn invariants_pass_on_default_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = roughbound(&["invariants"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().count() >= 5);
    assert!(stdout.lines().all(|l| l.starts_with("CHECK ") && l.contains(" PASS ")));
    assert!(tmp.path().join("summary.txt").exists());
}

#[test]
fn convergence_defects_decrease() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "steps = 2048\n");
    let o = roughbound(&["convergence", "--config", &cfg, "--levels", "4..10"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    let defects: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(defects.len(), 7);
    assert!(defects.windows(2).all(|w| w[1] < w[0]), "{defects:?}");
}

#[test]
fn solve_writes_solution_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "steps = 128\nmodes = 8\noutput_stride = 4\n");
    let o = roughbound(&["solve", "--config", &cfg], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("solution.csv")).unwrap();
    assert!(csv.starts_with("time,mode,coefficient\n"));
    assert_eq!(csv.lines().count(), 1 + 33 * 8);
}

#[test]
fn malformed_levels_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = roughbound(&["convergence", "--levels", "ten"], tmp.path());
    assert_eq!(o.status.code(), Some(10));
}
