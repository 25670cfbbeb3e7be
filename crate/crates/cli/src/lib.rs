//! Configuration, file-backed pipeline runs, parameter sweeps and reports
//! for the `recc` command-line tool.

pub mod artifacts;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod sweep;

pub use config::{ConfigError, PipelineConfig};
pub use pipeline::{run_pipeline, PipelineRun, RunError};
pub use report::RunReport;
