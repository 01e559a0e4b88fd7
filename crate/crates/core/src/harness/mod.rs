//! Experiment drivers behind the command-line tool.

pub mod config;
pub mod experiments;
pub mod validate;

pub use config::ExperimentConfig;
pub use experiments::{
    run_convergence, run_epsilon_study, CsvRow, EpsilonStudy, SlopeStatus, CSV_HEADER,
};
pub use validate::{run_validate, ValidateOptions, ValidationReport};
