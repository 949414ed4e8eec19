//! Seeded Monte Carlo experiments over parameter grids, with CSV, JSON and
//! gnuplot output.
//!
//! Trial `j` of cell `i` draws everything from `stream(seed, [i, j])`
//! (estimate sweeps use `stream(cell_seed(seed, i), [j])`), and results are
//! collected in trial order, so output does not depend on scheduling.

mod commands;
mod config;
mod output;
mod runners;
mod signals;

pub use commands::{certify_trials, estimate_config, solve_report, EstimateGrid, ProblemFile};
pub use config::{CertificateOptions, ExperimentConfig, ExperimentKind, Grid, SweepEvent, SweepOptions};
pub use output::{csv_string, dat_string, format_value, gnuplot_script, sidecar_path, write_outputs, OutputPaths};
pub use runners::{
    build_cells, cell_seed, certificate_trial, least_squares_line, recovery_trial, replay_trial, run, run_certificate_rate,
    run_ensemble_compare, run_error_scaling, run_estimate_sweep, run_phase_transition, run_with_threads, sweep_setup, Cell,
    CellRecord, CertificateTrial, ExperimentResult, Metric, ProgramOutcome, RecoveryTrial, SlopeFit, SweepSetup,
    AGREEMENT_FACTOR, SUCCESS_TOL,
};
pub use signals::SignalModel;
