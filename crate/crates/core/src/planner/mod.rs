//! Propositional STRIPS planning: task model with negative preconditions
//! and action costs, paraphrase-task construction, soft-goal (net-benefit)
//! compilation, right-regular-grammar compilers, an anytime satisficing
//! planner, plan validation and PDDL import/export.

mod compile;
mod grammar;
mod pddl;
mod search;
mod task;

pub use compile::{build_paraphrase_task, compile_net_benefit};
pub use grammar::{
    enumerate_plan_strings, enumerate_strings, grammar_to_task, task_to_grammar, PlanAlphabet,
    RightRegularGrammar, Rule,
};
pub use pddl::{emit_pddl, parse_pddl};
pub use search::{solve_anytime, write_solution_csv, SolveOptions, SolveOutcome, SolveResult};
pub use task::{
    goal_count, validate, Action, NetBenefitTask, Plan, StripsTask, ValidationOutcome,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("unknown action {name:?} at step {step}")]
    UnknownAction { step: usize, name: String },
    #[error("reachable state count exceeds the bound {bound}")]
    StateBoundExceeded { bound: usize },
    #[error("target word {word:?} has an all-zero effect; the goal would be empty")]
    EmptyGoal { word: String },
    #[error("pddl parse error at {line}:{col}: {msg}")]
    PddlParse { line: usize, col: usize, msg: String },
    #[error("grammar line {line}: {msg}")]
    Grammar { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
