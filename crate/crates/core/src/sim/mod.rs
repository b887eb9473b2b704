//! Seeded Monte Carlo sweeps over relay/IRS placement and IRS size, GPI
//! convergence traces, configuration and CSV output.

mod config;
mod output;
mod seed;
mod sweep;

pub use config::{
    load_config, parse_config, ExperimentConfig, RateMetric, DEFAULT_CONVERGENCE_GRID, DEFAULT_SIZE_GRID,
};
pub use output::{read_csv, write_csv, write_csv_to};
pub use seed::{channel_rng, method_rng, trial_seed};
pub use sweep::{
    evaluate_trial, run_convergence, run_convergence_trace, run_distance_sweep, run_distance_sweep_with,
    run_size_sweep, run_size_sweep_with, summarize, ConvergenceRow, ConvergenceRun, Execution, SweepRow, TrialRates,
};
