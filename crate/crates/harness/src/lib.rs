//! Experiment orchestration for neuralbayes: configuration, the study
//! runners, CSV and SVG output, and reproducibility manifests.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod svg;
pub mod table;

pub use error::{HarnessError, Result};
