//! Monte Carlo harness for distributed iterative detection: configuration,
//! seeded sweeps, CSV output and plot scripts.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::SimConfig;
pub use output::{
    emit_backhaul_csv, emit_csv, emit_metadata, emit_plot_script, read_csv, PlotKind,
};
pub use sweep::{run_backhaul, run_sweep, BackhaulRow, FrameRunner, ResultRow, Stopping};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Core(#[from] netdid_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
