//! Command-line front end and experiment runners for PGSS models: CSV
//! ingestion, sequential filtering with forecasts, the predictive ensemble
//! experiment with summary/histogram/manifest output, and zero-count diagnostics.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod output;
pub mod series;

pub use config::{ConfigFile, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use experiment::{run_figure1, Figure1Output, SummaryRow};
