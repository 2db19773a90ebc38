//! Experiment orchestration: configuration, trials, sweeps and plots.

mod config;
mod plot;
mod sweep;
mod trial;

pub use config::{ExperimentConfig, LatencyConstants, OtTiming, DEFAULT_LINK_RATE_BPS};
pub use plot::{
    plot_emit, read_runs_csv, render_line_chart, render_scatter_chart, write_scatter_csv, Chart,
    PlotFilter, PlotKind, SCATTER_HEADER,
};
pub use sweep::{
    median_iqr, quantile, run_sweep, summarize, sweep, trial_specs, write_runs_csv,
    write_summary_csv, SummaryRow, SweepOutcome, TrialSpec, RUNS_HEADER, SUMMARY_HEADER,
};
pub use trial::{run_trial, RunRecord, Session, TrialStatus, TrialTrace, TEMPLATE_TOLERANCE_M};
