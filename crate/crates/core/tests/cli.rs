use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nsp");

const SMALL: &str = "\
grid.dim = 2
grid.points = 16
stepper.dt = 0.01
stepper.t_end = 0.2
";

fn nsp(dir: &Path, sub: &str, config: &str, assert: bool) -> Output {
    let cfg = dir.join(format!("{sub}.cfg"));
    std::fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(BIN);
    cmd.arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env("NSP_THREADS", "2");
    if assert {
        cmd.arg("--assert");
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn successful_run_writes_records_and_lists_assertions() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsp(dir.path(), "run", SMALL, true);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("nsp run: assertions (enforced):"));
    assert!(text.contains("[PASS]"));
    assert!(dir.path().join("out/run.ndjson").exists());
    assert!(dir.path().join("out/run.csv").exists());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsp(dir.path(), "run", "params.mu = -1\n", false);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.mu"));
    let o = nsp(dir.path(), "linear", "no.such = key\n", false);
    assert_eq!(o.status.code(), Some(2));
    let missing = Command::new(BIN)
        .args(["run", "--config", "/nonexistent/cfg"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    let threads = Command::new(BIN)
        .arg("check-lemmas")
        .env("NSP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn failed_assertions_exit_with_one_only_when_enforced() {
    let dir = tempfile::tempdir().unwrap();
    // a bound below 1 fails at t = 0, where E(t)/E(0) = 1
    let cfg = format!("{SMALL}check.bound = 0.5\n");
    let o = nsp(dir.path(), "run", &cfg, true);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[FAIL]"));
    let o = nsp(dir.path(), "run", &cfg, false);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("assertions (reported)"));
}

#[test]
fn numerical_aborts_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "grid.dim = 2\ngrid.points = 16\nstepper.dt = 1\nstepper.t_end = 2\ninit.amplitude = 5\n";
    let o = nsp(dir.path(), "run", cfg, false);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}init.seed = 7\n");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let sub = dir.path().join(format!("{i}"));
        std::fs::create_dir(&sub).unwrap();
        let o = nsp(&sub, "perturb", &cfg, true);
        assert_eq!(o.status.code(), Some(0));
        outputs.push((
            std::fs::read(sub.join("out/perturb.ndjson")).unwrap(),
            std::fs::read(sub.join("out/perturb_difference.ndjson")).unwrap(),
        ));
    }
    assert!(!outputs[0].0.is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn help_documents_configuration_keys() {
    let o = Command::new(BIN).arg("--help").output().unwrap();
    let text = stdout(&o);
    for key in ["grid.points", "stepper.scheme", "init.band", "check.bound"] {
        assert!(text.contains(key), "{key}");
    }
}
