//! Experiment runner for the microsets toolkit.
//!
//! Every command is described by an [`ExperimentConfig`], given either as
//! flags or as a JSON file. Artifacts start with the config and the crate
//! version, so a rerun of the recorded config reproduces them byte for byte.

pub mod commands;
pub mod config;
pub mod specs;

use std::fmt;

pub use commands::{run, Outcome};
pub use config::{Command, ExperimentConfig, Limits};

/// A failed run, grouped by exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad input; exit 1.
    Validation(String),
    /// A checked property failed; exit 2.
    Invariant(String),
    /// A configured or intrinsic limit was hit; exit 3.
    Resource(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Invariant(_) => 2,
            Failure::Resource(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation error: {m}"),
            Failure::Invariant(m) => write!(f, "invariant violation: {m}"),
            Failure::Resource(m) => write!(f, "resource limit: {m}"),
        }
    }
}

impl From<microsets::Error> for Failure {
    fn from(e: microsets::Error) -> Self {
        use microsets::Error::*;
        let msg = e.to_string();
        match e {
            OracleInconsistency { .. } | InvariantViolation(_) => Failure::Invariant(msg),
            ResolutionExhausted { .. } | PlacementOverflow { .. } | ResourceLimit(_) => Failure::Resource(msg),
            _ => Failure::Validation(msg),
        }
    }
}
