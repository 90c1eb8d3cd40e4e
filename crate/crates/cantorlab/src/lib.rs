//! Experiment configs, presets and the batch runner behind the `cantorlab`
//! command line tool. The numerics live in `cantorlab-core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod presets;
pub mod shorthand;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};
pub use experiment::{run_experiment, ExperimentResult};
pub use presets::{preset, PRESETS};
