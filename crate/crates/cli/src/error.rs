//! CLI error type carrying the exit-code contract:
//! 0 success, 1 usage, 2 data error, 3 unsolvable-as-requested-hard-goal.

use dsaw_core::algebra::AlgebraError;
use dsaw_core::corpus::CorpusError;
use dsaw_core::evalsuite::EvalError;
use dsaw_core::nncore::NnError;
use dsaw_core::planner::PlannerError;
use dsaw_core::trainer::TrainError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Unsolvable(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Unsolvable(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
            CliError::Unsolvable(m) => write!(f, "unsolvable: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

macro_rules! from_data {
    ($ty:ty) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> CliError {
                CliError::Data(e.to_string())
            }
        }
    };
}

from_data!(std::io::Error);
from_data!(CorpusError);
from_data!(NnError);
from_data!(TrainError);
from_data!(AlgebraError);
from_data!(EvalError);
from_data!(PlannerError);
