use std::fs;
use std::process::{Command, Output};

fn beamcolor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamcolor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("small.cfg");
    fs::write(
        &path,
        "# quick run\npreset = desk\nn_ms = 5\nn_s = 4\nm_antennas = 16\nn_drops = 2\nn_fading_blocks = 2\n",
    )
    .unwrap();
    path
}

#[test]
fn runs_a_sweep_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = beamcolor(&[
        "--config",
        cfg.to_str().unwrap(),
        "--delta",
        "-80,-40",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rates = fs::read_to_string(out.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 1 + 2 * 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("graph: best delta"));
}

#[test]
fn scheme_flag_limits_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = beamcolor(&[
        "--config",
        cfg.to_str().unwrap(),
        "--delta=-50",
        "--scheme",
        "orth",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let overhead = fs::read_to_string(out.join("overhead.csv")).unwrap();
    assert_eq!(overhead.lines().count(), 2);
    assert!(overhead.lines().nth(1).unwrap().starts_with("orthogonal,"));
}

#[test]
fn validate_prints_summary() {
    let o = beamcolor(&["--preset", "desk", "--validate"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("PASS worked example coloring"));
    assert!(text.contains("checks passed"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn usage_and_config_errors_exit_1() {
    assert_eq!(beamcolor(&["--bogus"]).status.code(), Some(1));
    assert_eq!(beamcolor(&["--preset", "huge"]).status.code(), Some(1));
    assert_eq!(beamcolor(&["--delta", "abc"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "n_drops = many\n").unwrap();
    let o = beamcolor(&["--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    assert_eq!(
        beamcolor(&["--config", dir.path().join("missing.cfg").to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let o = beamcolor(&[
        "--config",
        cfg.to_str().unwrap(),
        "--delta=-50",
        "--out",
        blocker.join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    let o = beamcolor(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("--preset"));
}
