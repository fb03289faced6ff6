//! Experiment harness for the `arm-core` estimators: configuration,
//! datasets, experiment drivers and CSV/JSON reporting.

pub mod config;
pub mod data;
pub mod error;
pub mod output;
pub mod suite;
pub mod toy;
pub mod train;
pub mod variance;

use std::path::PathBuf;

pub use config::{ConfigOverrides, DatasetSpec, Experiment, ExperimentConfig, GradientSource, ToyOptimizer};
pub use error::{HarnessError, Result};

/// Runs the experiment described by `cfg` and returns the files written.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| HarnessError::Io {
        path: cfg.out.clone(),
        source: e,
    })?;
    match cfg.experiment {
        Experiment::Toy => toy::write_toy(cfg),
        Experiment::VarianceReport => variance::write_variance_report(cfg),
        Experiment::TrainVae => train::write_train_vae(cfg),
        Experiment::TrainMle => train::write_train_mle(cfg),
        Experiment::PropertySuite => suite::write_property_suite(cfg),
    }
}
