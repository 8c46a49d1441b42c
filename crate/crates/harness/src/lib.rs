//! Batch experiment harness for the exploration simulator: config files and
//! presets, parallel seeded runs, result tables, plots, replay and dataset
//! export.

pub mod config;
pub mod dataset;
pub mod encode;
pub mod error;
pub mod plot;
pub mod presets;
pub mod replay;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
