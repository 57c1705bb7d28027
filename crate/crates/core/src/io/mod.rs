//! Configuration, persistence and plotting.

pub mod config;
pub mod output;
pub mod plot;
pub mod runner;

pub use config::{load_config, BundleConfig, InitialConfig, OutputConfig, RunConfig};
pub use output::{
    read_report, read_snapshots, read_status, read_trace, trace_columns, write_manifest, write_outputs, Manifest, RunStatus,
};
pub use plot::{render_plots, Plot, PlotOutcome, Series};
pub use runner::{analyze_dir, execute, RunSummary};
