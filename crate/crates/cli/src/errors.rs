//! Error-to-exit-code mapping.
//!
//! 1 = verification failure, 2 = invalid input, 3 = instruction problem,
//! 4 = planning infeasible.

use std::fmt;

use placenav_core::concept::{
    FitError, InstructionError, ModelError, ModelIoError, TrainingDataError,
};
use placenav_core::costmap::CostmapError;
use placenav_core::eval::EvalError;
use placenav_core::export::ExportError;
use placenav_core::grid::MapError;
use placenav_core::oracle::OracleError;
use placenav_core::planner::PlanError;

#[derive(Debug)]
pub enum CliError {
    /// Exit 2: unreadable or invalid inputs.
    Validation(String),
    /// Exit 3: unusable instruction (all words out of vocabulary).
    Instruction(String),
    /// Exit 4: the planner cannot produce a trajectory.
    Planning(String),
    /// Exit 1: the verification battery found a discrepancy.
    OracleFailure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::OracleFailure(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Instruction(_) => 3,
            CliError::Planning(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m)
            | CliError::Instruction(m)
            | CliError::Planning(m)
            | CliError::OracleFailure(m) => f.write_str(m),
        }
    }
}

macro_rules! validation_from {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Validation(e.to_string())
            }
        })*
    };
}

validation_from!(
    MapError,
    CostmapError,
    ModelError,
    ModelIoError,
    FitError,
    TrainingDataError,
    ExportError,
    std::io::Error,
    serde_json::Error,
    OracleError,
);

impl From<InstructionError> for CliError {
    fn from(e: InstructionError) -> Self {
        CliError::Instruction(e.to_string())
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        CliError::Planning(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Instruction(inner) => CliError::Instruction(inner.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}
