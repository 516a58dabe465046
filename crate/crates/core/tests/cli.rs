use std::process::Command;

use qdshe::cli::{run_stage1, RunConfig};

fn sets(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn identical_config_gives_identical_bytes() {
    let cfg = RunConfig::load(None, &sets(&["n_levels=5", "stage1_duration_ps=6", "temperature_K=150"])).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_stage1(&cfg, a.path()).unwrap();
    run_stage1(&cfg, b.path()).unwrap();
    for f in ["stage1.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn run_reproduces_from_its_own_header() {
    let cfg = RunConfig::load(None, &sets(&["n_levels=4", "stage1_duration_ps=5", "gamma_ph_meV=0.1"])).unwrap();
    let a = tempfile::tempdir().unwrap();
    run_stage1(&cfg, a.path()).unwrap();
    let text = std::fs::read_to_string(a.path().join("stage1.csv")).unwrap();
    let again = RunConfig::from_header(&text).unwrap();
    let b = tempfile::tempdir().unwrap();
    run_stage1(&again, b.path()).unwrap();
    let body = |s: &str| s.lines().filter(|l| !l.starts_with('#')).map(str::to_owned).collect::<Vec<_>>();
    let text_b = std::fs::read_to_string(b.path().join("stage1.csv")).unwrap();
    assert_eq!(body(&text), body(&text_b));
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_qdshe");
    let out = tempfile::tempdir().unwrap();
    let status = |args: &[&str]| {
        Command::new(exe)
            .args(args)
            .arg("--out")
            .arg(out.path())
            .status()
            .unwrap()
            .code()
            .unwrap()
    };
    assert_eq!(status(&["stage1", "--set", "temperature_K=-5"]), 2);
    assert_eq!(status(&["stage1", "--set", "no_such_key=1"]), 2);
    assert_eq!(status(&["erasure"]), 2);
    assert_eq!(status(&["stage1", "--set", "n_levels=3", "--set", "stage1_duration_ps=1"]), 0);
    let csv = std::fs::read_to_string(out.path().join("stage1.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("# qdshe"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 21);
}
