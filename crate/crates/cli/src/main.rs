use std::path::PathBuf;
use std::process::ExitCode;

use beamcolor::harness::{parse_delta_list, parse_schemes, run_experiment, self_check, ExperimentConfig, Preset};
use beamcolor::Error;
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Paper,
    Desk,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Orth,
    Graph,
    Both,
}

/// Sweep the dominant-beam threshold and compare orthogonal against
/// conflict-graph beam training.
#[derive(Debug, Parser)]
#[command(name = "beamcolor", version)]
struct Cli {
    /// Flat `key = value` config file, applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Threshold list in dB: `a,b,c` or `start:step:stop`.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long, value_enum, default_value = "paper")]
    preset: PresetArg,
    /// Output directory for the CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the invariant self-checks only.
    #[arg(long)]
    validate: bool,
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Argument(_) | Error::Parse { .. })
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let base = match cli.preset {
        PresetArg::Paper => Preset::Paper,
        PresetArg::Desk => Preset::Desk,
    };
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path, base)?,
        None => ExperimentConfig::preset(base),
    };
    if let Some(d) = &cli.delta {
        cfg.delta_sweep_db = parse_delta_list(d)?;
    }
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(s) = cli.scheme {
        cfg.schemes = parse_schemes(match s {
            SchemeArg::Orth => "orth",
            SchemeArg::Graph => "graph",
            SchemeArg::Both => "both",
        })?;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> ExitCode {
    let cfg = match build_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("beamcolor: {e}");
            return ExitCode::from(1);
        }
    };

    if cli.validate {
        return match self_check(&cfg) {
            Ok(checks) => {
                let failed = checks.iter().filter(|c| !c.passed).count();
                for c in &checks {
                    println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
                println!("{}/{} checks passed", checks.len() - failed, checks.len());
                ExitCode::from(if failed == 0 { 0 } else { 2 })
            }
            Err(e) => {
                eprintln!("beamcolor: {e}");
                ExitCode::from(2)
            }
        };
    }

    log::info!(
        "M={} users={} drops={} deltas={} -> {}",
        cfg.m(),
        cfg.env.n_ms,
        cfg.n_drops,
        cfg.delta_sweep_db.len(),
        cfg.output_dir.display()
    );
    match run_experiment(&cfg) {
        Ok(result) => {
            for scheme in &result.schemes {
                if let Some(best) = result.best_delta_index(*scheme).and_then(|i| result.cell(*scheme, i)) {
                    println!(
                        "{}: best delta {} dB, sum rate {:.4}, overhead ratio {:.4}",
                        scheme.as_str(),
                        best.delta_db,
                        best.sum_rate,
                        best.mean_overhead
                    );
                }
            }
            println!("wrote {}", cfg.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("beamcolor: {e}");
            ExitCode::from(if is_config_error(&e) { 1 } else { 2 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    run(&cli)
}
