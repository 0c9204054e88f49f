//! Configuration files, run records and the `bayrn-lab` command line for
//! [`bayrn_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod record;
pub mod runner;

pub use bayrn_core as core;
pub use config::ExperimentConfig;
pub use error::{LabError, Result};
