//! Task model, successor semantics and plan validation.

use super::PlannerError;
use crate::bits::BitVec;
use std::collections::HashMap;
use std::time::Duration;

/// A grounded action. `name` is unique within a task; `label` is what the
/// action emits into a plan's word/terminal sequence (bookkeeping actions
/// are silent). Preconditions carry positive and negative literal sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub name: String,
    pub label: Option<String>,
    pub pre_pos: BitVec,
    pub pre_neg: BitVec,
    pub add: BitVec,
    pub del: BitVec,
    pub cost: u64,
}

impl Action {
    /// Empty action over `width` propositions; fill the literal sets after.
    pub fn new(name: impl Into<String>, width: usize) -> Action {
        let name = name.into();
        Action {
            label: Some(name.clone()),
            name,
            pre_pos: BitVec::zeros(width),
            pre_neg: BitVec::zeros(width),
            add: BitVec::zeros(width),
            del: BitVec::zeros(width),
            cost: 1,
        }
    }

    pub fn silent(mut self) -> Action {
        self.label = None;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripsTask {
    pub name: String,
    /// Proposition names; the index is the proposition id.
    pub props: Vec<String>,
    pub actions: Vec<Action>,
    pub init: BitVec,
    pub goal: BitVec,
}

impl StripsTask {
    pub fn new(
        name: impl Into<String>,
        props: Vec<String>,
        actions: Vec<Action>,
        init: BitVec,
        goal: BitVec,
    ) -> Result<StripsTask, PlannerError> {
        let width = props.len();
        if init.len() != width || goal.len() != width {
            return Err(PlannerError::InvalidTask("init/goal width mismatch".into()));
        }
        let mut seen = HashMap::new();
        for (i, a) in actions.iter().enumerate() {
            for bits in [&a.pre_pos, &a.pre_neg, &a.add, &a.del] {
                if bits.len() != width {
                    return Err(PlannerError::InvalidTask(format!(
                        "action {:?} has literal sets of the wrong width",
                        a.name
                    )));
                }
            }
            if !a.add.is_disjoint(&a.del) {
                return Err(PlannerError::InvalidTask(format!(
                    "action {:?} has overlapping add and delete effects",
                    a.name
                )));
            }
            if seen.insert(a.name.clone(), i).is_some() {
                return Err(PlannerError::InvalidTask(format!(
                    "duplicate action name {:?}",
                    a.name
                )));
            }
        }
        Ok(StripsTask { name: name.into(), props, actions, init, goal })
    }

    pub fn width(&self) -> usize {
        self.props.len()
    }

    pub fn prop_index(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|p| p == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }

    pub fn applicable(&self, state: &BitVec, action: &Action) -> bool {
        action.pre_pos.is_subset(state) && action.pre_neg.is_disjoint(state)
    }

    /// (s \ del) ∪ add.
    pub fn successor(&self, state: &BitVec, action: &Action) -> BitVec {
        state.and_not(&action.del).or(&action.add)
    }

    pub fn goal_satisfied(&self, state: &BitVec) -> bool {
        self.goal.is_subset(state)
    }
}

/// Number of goal propositions unsatisfied in `state`.
pub fn goal_count(state: &BitVec, goal: &BitVec) -> usize {
    goal.and_not(state).count_ones()
}

/// Soft-goal task: the inner task's goal set carries per-proposition
/// utilities, paid for every goal left unsatisfied at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetBenefitTask {
    pub task: StripsTask,
    /// (goal proposition index, utility), ascending by index, defined
    /// exactly on the goal set.
    pub utility: Vec<(usize, u64)>,
}

impl NetBenefitTask {
    pub fn new(task: StripsTask, utility: Vec<(usize, u64)>) -> Result<NetBenefitTask, PlannerError> {
        let goal: Vec<usize> = task.goal.iter_ones().collect();
        let indices: Vec<usize> = utility.iter().map(|(i, _)| *i).collect();
        if goal != indices {
            return Err(PlannerError::InvalidTask(
                "utility must be defined exactly on the goal propositions, in index order".into(),
            ));
        }
        Ok(NetBenefitTask { task, utility })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// Action names in execution order.
    pub steps: Vec<String>,
    pub cost: u64,
    /// Time at which the anytime search produced this plan.
    pub wall_clock: Duration,
}

impl Plan {
    /// The emitted word/terminal sequence: labels of non-silent steps.
    pub fn labels(&self, task: &StripsTask) -> Vec<String> {
        self.steps
            .iter()
            .filter_map(|name| {
                task.action_index(name).and_then(|i| task.actions[i].label.clone())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationOutcome {
    Valid { end_state: BitVec },
    /// First violating step: the action's preconditions did not hold.
    Violation { step: usize, action: String, reason: String },
}

/// Replays a plan from the initial state, checking positive and negative
/// preconditions at every step. Unknown action names are an error; a failed
/// precondition is reported as a violation at its step index.
pub fn validate(task: &StripsTask, steps: &[String]) -> Result<ValidationOutcome, PlannerError> {
    let mut state = task.init.clone();
    for (i, name) in steps.iter().enumerate() {
        let idx = task
            .action_index(name)
            .ok_or_else(|| PlannerError::UnknownAction { step: i, name: name.clone() })?;
        let action = &task.actions[idx];
        if !action.pre_pos.is_subset(&state) {
            let missing = action.pre_pos.and_not(&state);
            let prop = missing.iter_ones().next().unwrap();
            return Ok(ValidationOutcome::Violation {
                step: i,
                action: name.clone(),
                reason: format!("positive precondition {:?} unsatisfied", task.props[prop]),
            });
        }
        if !action.pre_neg.is_disjoint(&state) {
            let hit = action.pre_neg.and(&state);
            let prop = hit.iter_ones().next().unwrap();
            return Ok(ValidationOutcome::Violation {
                step: i,
                action: name.clone(),
                reason: format!("negative precondition {:?} violated", task.props[prop]),
            });
        }
        state = task.successor(&state, action);
    }
    Ok(ValidationOutcome::Valid { end_state: state })
}
