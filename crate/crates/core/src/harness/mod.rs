//! Experiment driver: configuration, the simulation studies, CSV output
//! and the validation suite.

pub mod config;
pub mod experiments;
pub mod output;
pub mod validate;

pub use config::{ExperimentConfig, Scenario, FULL_REALIZATIONS};
pub use experiments::{run, run_rate_region, run_snr_sweep, run_tpm_sweep, Summary};
pub use output::{write_csv, Cell, Table};
pub use validate::{run_validation, Mutation, ValidationReport};
