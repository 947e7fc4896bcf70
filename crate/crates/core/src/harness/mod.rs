//! Seeded Monte Carlo sweeps over thresholds and training schemes.

pub mod config;
pub mod output;
pub mod run;
pub mod selfcheck;

pub use config::{dbm_to_watts, parse_delta_list, parse_schemes, ExperimentConfig, Preset, TSlots};
pub use output::{emit_csv, render_csv};
pub use run::{aggregate, run_experiment, simulate, simulate_drop, DropCell, DropOutcome, SweepCell, SweepResult, UserRecord};
pub use selfcheck::{self_check, CheckOutcome};
