use std::fs;

use beamcolor::harness::{
    aggregate, render_csv, run_experiment, self_check, simulate, simulate_drop, ExperimentConfig,
};
use beamcolor::spectrum::dft_codebook;
use beamcolor::training::Scheme;
use beamcolor::Error;

fn tiny() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::desk();
    cfg.env.n_ms = 6;
    cfg.env.n_s = 5;
    cfg.env.m_antennas = 16;
    cfg.n_drops = 4;
    cfg.n_fading_blocks = 3;
    cfg.delta_sweep_db = vec![-80.0, -40.0];
    cfg.master_seed = 11;
    cfg
}

fn data_rows(text: &str) -> usize {
    text.lines().count() - 1
}

#[test]
fn one_cell_gives_one_aggregate_row() {
    let mut cfg = tiny();
    cfg.delta_sweep_db = vec![-60.0];
    cfg.schemes = vec![Scheme::Graph];
    let result = simulate(&cfg).unwrap();
    let files = render_csv(&result);
    for (name, body) in &files {
        let header = body.lines().next().unwrap();
        assert!(!header.is_empty(), "{name} lacks a header");
        match *name {
            "overhead.csv" | "mse_measured.csv" | "mse_effective.csv" | "rates.csv" => {
                assert_eq!(data_rows(body), 1, "{name}")
            }
            "rate_cdf.csv" => {
                let pooled = result.cells[0].pooled_rates.len();
                assert_eq!(data_rows(body), 1 + pooled);
            }
            "users_mse.csv" | "users_rate.csv" => assert_eq!(data_rows(body), 4 * 6),
            other => panic!("unexpected file {other}"),
        }
    }
}

#[test]
fn same_seed_same_bytes_different_seed_different_bytes() {
    let a = render_csv(&simulate(&tiny()).unwrap());
    let b = render_csv(&simulate(&tiny()).unwrap());
    assert_eq!(a, b);
    let mut other = tiny();
    other.master_seed = 12;
    assert_ne!(a, render_csv(&simulate(&other).unwrap()));
}

#[test]
fn aggregation_ignores_drop_order() {
    let cfg = tiny();
    let f = dft_codebook(cfg.m());
    let drops: Vec<_> = (0..cfg.n_drops).map(|d| simulate_drop(&cfg, &f, d).unwrap()).collect();
    let mut shuffled = drops.clone();
    shuffled.reverse();
    shuffled.swap(0, 2);
    assert_eq!(aggregate(&cfg, drops), aggregate(&cfg, shuffled));
}

#[test]
fn overhead_ratios_per_cell() {
    let result = simulate(&tiny()).unwrap();
    for c in &result.cells {
        match c.scheme {
            Scheme::Orthogonal => assert_eq!(c.mean_overhead, 1.0),
            Scheme::Graph => assert!(c.mean_overhead <= 1.0),
        }
    }
}

#[test]
fn writes_the_csv_set_and_drop_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny();
    cfg.output_dir = dir.path().join("nested/out");
    cfg.write_drops = true;
    run_experiment(&cfg).unwrap();
    for name in ["overhead.csv", "mse_measured.csv", "mse_effective.csv", "rates.csv", "rate_cdf.csv"] {
        let text = fs::read_to_string(cfg.output_dir.join(name)).unwrap();
        assert!(text.lines().count() > 1, "{name}");
    }
    let drop0 = fs::read_to_string(cfg.output_dir.join("drops/drop_0000.txt")).unwrap();
    let env = beamcolor::Environment::from_drop_text(&drop0).unwrap();
    assert_eq!(env, beamcolor::harness::run::drop_environment(&cfg, 0));
}

#[test]
fn unwritable_output_is_an_io_error_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let mut cfg = tiny();
    cfg.output_dir = blocker.join("sub");
    assert!(matches!(run_experiment(&cfg), Err(Error::Io { .. })));
}

#[test]
fn invalid_config_is_rejected() {
    let mut cfg = tiny();
    cfg.delta_sweep_db.clear();
    assert!(matches!(simulate(&cfg), Err(Error::Config(_))));
}

#[test]
fn self_check_passes_on_desk_preset() {
    let checks = self_check(&ExperimentConfig::desk()).unwrap();
    for c in &checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
    assert!(checks.len() >= 6);
}
