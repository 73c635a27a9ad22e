//! Experiment orchestration: episodes, sweeps, power-law fits and reports.

mod config;
mod episode;
mod fit;
mod report;
mod sweep;

pub use config::{Algorithm, CheckpointSchedule, RunConfig};
pub use episode::{run_episode, Checkpoint, RunMeta, RunTrace};
pub use fit::{fit_power_law, FitPoint, PowerLawFit};
pub use report::{mean_stderr, report, FigureRow, FitRow, Report, SummaryRow};
pub use sweep::{
    read_rows, sweep, SweepManifest, SweepOutcome, SweepSpec, TraceRow, CSV_NAME, MANIFEST_NAME,
    SCHEMA_VERSION,
};
