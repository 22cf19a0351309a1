use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nonlocal-liouville");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn counterexample_exits_zero_with_exact_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("counterexample.ini");
    let o = run(&["experiment", "counterexample", "--config", cfg.to_str().unwrap(), "--conv", "direct"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_report(dir.path());
    let residual = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "residual_sup")
        .unwrap()["measured"]
        .as_f64()
        .unwrap();
    assert!(residual <= 1e-12);
    assert!(dir.path().join("counterexample.csv").exists());
}

#[test]
fn solve_on_empty_obstacle_from_ones_takes_no_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("empty_ones.ini");
    let o = run(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = read_report(dir.path());
    assert_eq!(r["metadata"]["steps"], "0");
    assert!(fs::read_to_string(dir.path().join("log.csv")).unwrap().starts_with("step,"));
}

#[test]
fn liouville_on_annulus_fails_by_design() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("liouville_annulus.ini");
    let o = run(&["experiment", "liouville", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(read_report(dir.path())["outcome"], "fail");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    fs::write(&cfg, "[grid]\nspacing = 0.1\n").unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.spacing"));
}

#[test]
fn malformed_value_and_override_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["front", "--set", "kernel.radius=wide"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kernel.radius"));
    let o = run(&["front", "--set", "kernel.radius"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn precondition_rejection_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // Ball radius below d0.
    let o = run(&["maximal", "--set", "ball.radius=2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("d0"));
    // Counterexample needs the annulus.
    let o = run(&["experiment", "counterexample"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn front_writes_profile_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["front", "--set", "f.theta=0.25"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("front.csv")).unwrap();
    assert!(csv.starts_with("x0,value,mask\n"));
    let r = read_report(dir.path());
    assert_eq!(r["inputs"]["f.theta"], "0.25");
    assert_eq!(r["inputs"]["solver.clamp_width"], "0.5");
    let ini = fs::read_to_string(dir.path().join("config.ini")).unwrap();
    assert!(ini.contains("theta = 0.25"));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = configs().join("counterexample.ini");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["verify", "operator", "--config", cfg.to_str().unwrap(), "--set", "experiment.trials=3", "--seed", "5"];
    assert_eq!(run(&args, a.path()).status.code(), Some(0));
    assert_eq!(run(&args, b.path()).status.code(), Some(0));
    for name in ["report.json", "report.csv", "config.ini"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    assert!(a.path().join("timing.txt").exists());
}

#[test]
fn conv_both_cross_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("empty_ones.ini");
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--conv", "both", "--set", "solver.initial=hostile"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_report(dir.path())["inputs"]["conv"], "both");
}
