//! Command-line front end: configs, presets, the frame loop and output files.

pub mod compare;
pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig};
pub use runner::{run_experiment, RunManifest, RunOptions};
