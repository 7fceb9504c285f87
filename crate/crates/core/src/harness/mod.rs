//! Experiment runner and command implementations behind the `rna` binary.

mod cli;
mod commands;
mod spec;

pub use commands::{
    accelerate, cell_file_name, cmd_accelerate, cmd_run, cmd_sweep, exit_code, metric_rows, render_summary,
    run_experiment, sweep, sweep_workers_from_env, AccelerateArgs, AccelerateReport, RunSummary, SweepCell,
    SweepResult, EXIT_FAILURE, EXIT_FORMAT, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, SUMMARY_HEADER, SUMMARY_NAME,
    SWEEP_WORKERS_ENV,
};
pub use cli::{execute, main_with_args, Cli, Command};
pub use spec::{ExperimentSpec, InitSpec, OutputSpec, ProblemSpec};
