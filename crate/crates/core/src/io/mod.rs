//! Trace files, shot and run manifests, CSV tables, run configuration and
//! result bundles. All writes go through a temporary file and a rename.

pub mod bundle;
pub mod config;
pub mod csv;
pub mod manifest;
pub mod trace;

pub use bundle::ResultBundle;
pub use config::{load_config, preset, RunConfig, RunLabel};
pub use trace::{read_trace, write_trace};
