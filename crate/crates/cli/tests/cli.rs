use std::path::Path;
use std::process::{Command, Output};

fn fidelity(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fidelity"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

const ROTOR: &str = r#"
[system]
kind = "kicked_rotor"
d = 3
epsilon = 1e-3
n1 = 512

[state]
q = 1.5
p = 0.0

[run]
method = "dr"
t_max = 10
n = 200
s = 3
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rotor.toml", ROTOR);
    let out = fidelity(&["run", &cfg, "--out", "a.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(csv.starts_with("time,F,f_real,f_imag,sigma,N,method,D,k,epsilon,n1,seed\n"));
    assert_eq!(csv.lines().count(), 12);
    assert!(dir.path().join("a.manifest.toml").exists());
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rotor.toml", &ROTOR.replace("\"dr\"", "\"echo-2\""));
    for (workers, name) in [("1", "w1.csv"), ("3", "w3.csv")] {
        let out = fidelity(&["run", &cfg, "--workers", workers, "--seed", "9", "--out", name], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("w1.csv")).unwrap();
    let b = std::fs::read(dir.path().join("w3.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "bad.toml", &ROTOR.replace("n = 200", "n = 200\ntrajectories = 5"));
    let wrong_method = write_config(dir.path(), "method.toml", &ROTOR.replace("\"dr\"", "\"echo-two\""));
    for args in [
        vec!["run", unknown.as_str()],
        vec!["run", wrong_method.as_str()],
        vec!["run", "missing.toml"],
        vec!["preset", "fig4b", "--scale", "0"],
        vec!["preset", "fig9"],
        vec!["run", unknown.as_str(), "--workers", "0"],
        vec!["bogus"],
    ] {
        let out = fidelity(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = fidelity(&["run", &unknown], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("trajectories"));
}

#[test]
fn runtime_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rotor.toml", ROTOR);
    std::fs::create_dir(dir.path().join("taken.csv")).unwrap();
    let out = fidelity(&["run", &cfg, "--out", "taken.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn timing_prints_table_and_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let out = fidelity(&["timing", "dr", "--t", "8,16,32", "--n", "50"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,wall_seconds\n8,"));
    assert!(text.contains("exponent"));
}

#[test]
fn convergence_writes_one_row_per_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rotor.toml", ROTOR);
    let out = fidelity(&["convergence", &cfg, "--ensembles", "4", "--out", "c.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
}
