//! Experiment configuration, sweeps, traces on disk, manifests and plots.

mod config;
mod experiment;
mod plot;
mod select;

pub use config::{ExperimentConfig, ModeKind, PrimalKind, ProblemSource};
pub use experiment::{
    build_problem, reference_optimum, run_experiment, sweep, trace_file_name, write_atomic, ExperimentOutput,
    RunRecord, RunStatus, SweepPoint,
};
pub use plot::{emit_plot, render_svg, PlotSeries, PlotSummary};
pub use select::{best_of, coords_to_eps};
