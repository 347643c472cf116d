//! Simulation harness for federated frequency estimation: experiment
//! configuration, data loading, end-to-end runs, and metrics output.
//!
//! The estimation machinery itself lives in `fedfreq-core`; this crate
//! drives it from config files and writes CSV results.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;

pub use config::{Dataset, DpConfig, ExperimentConfig, SizingMode};
pub use data::{exact_oracle, load_items, repeated_round_plan, sample_items, zipf_plan, zipf_probs};
pub use error::{Error, Result};
pub use experiment::{run_experiment, CellEstimate, RunResult};
pub use metrics::{items_over, linf, write_csv, MetricsRow, CSV_HEADER};
