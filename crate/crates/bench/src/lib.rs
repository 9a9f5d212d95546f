//! Experiment driver for the `mismc` estimators: rate studies, MSE-versus-cost
//! studies, reference values and dataset generation.

pub mod complexity;
pub mod config;
pub mod datagen;
pub mod error;
pub mod output;
pub mod plot;
pub mod rates;
pub mod reference;
pub mod setup;

pub use config::{EstimatorKind, ExperimentConfig, ModelKind};
pub use error::{BenchError, Result};
