//! Configuration, repeated experiments, sweeps and CSV output.

mod config;
mod experiment;
mod output;
mod sweep;
mod verify;

pub use config::{InitialPoint, OneOrMany, ProblemSource, RunConfig, SweepKey, SweepPoint, TopologyKind, DEFAULT_SWEEP_BUDGET};
pub use experiment::{
    aggregate, build_problem, build_topology, initial_point, pool, prepare, rep_seed, run_experiment, run_prepared,
    AggregateReport, AggregateRow, BoundSummary, Cell, ExperimentReport, Setup,
};
pub use output::{aggregate_csv, bounds_csv, constants_csv, seeds_csv, summary_csv, write_atomic, write_report};
pub use sweep::{index_csv, point_dir, run_sweep, SweepReport};
pub use verify::{verify, CheckKind, CheckOutcome, COLLAPSE_TOL, MONITOR_TOL, SHADOW_TOL};
