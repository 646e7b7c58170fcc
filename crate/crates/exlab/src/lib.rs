//! Configuration-driven runner for the exclusion-process experiments.
//!
//! A run reads a flat `key = value` file, checks every parameter against the
//! target experiment, computes, and writes CSV files plus `manifest.json`.

pub mod config;
pub mod output;
pub mod registry;
pub mod run;
pub mod schema;

pub use config::{ConfigError, ExperimentConfig, Params, RawConfig};
pub use registry::{find, Experiment, REGISTRY};
pub use run::{plan, run, Overrides, RunError, RunManifest};
