//! Experiment runner for the radial chemotaxis-competition solver: configuration
//! files, single runs, parameter sweeps, audits of saved records and initial-data
//! generation. The `chemolab` binary is a thin wrapper around [`cli::main`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod cli;
pub mod config;
pub mod format;
pub mod simulate;
pub mod sweep;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("initial data file {path}: {message}")]
    InitialFile { path: PathBuf, message: String },
    #[error(transparent)]
    InitData(#[from] chemo_core::initdata::InitDataError),
    #[error(transparent)]
    Step(#[from] chemo_core::dynamics::StepError),
    #[error(transparent)]
    Grid(#[from] chemo_core::grid::GridError),
    #[error("record: {0}")]
    Record(String),
}

impl HarnessError {
    /// Process exit code: 2 for unusable input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}
