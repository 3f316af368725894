//! Paraphrase-task construction from effect vectors and the soft-goal
//! (net-benefit) to classical-planning compilation.

use super::task::{Action, NetBenefitTask, StripsTask};
use super::PlannerError;
use crate::algebra::BinaryEffect;
use crate::bits::BitVec;

/// Builds the paraphrase instance for a target word: 2E propositions
/// add-i/del-i, one zero-precondition action per vocabulary word mirroring
/// its effect bits, empty initial state, the target's effect bits as goals.
/// Every action costs E; every goal carries the same `utility`.
pub fn build_paraphrase_task(
    target_word: &str,
    target_effect: &BinaryEffect,
    action_vocab: &[(String, BinaryEffect)],
    utility: u64,
) -> Result<NetBenefitTask, PlannerError> {
    let width = target_effect.width();
    if target_effect.is_noop() {
        return Err(PlannerError::EmptyGoal { word: target_word.to_string() });
    }
    let mut props: Vec<String> = (1..=width).map(|i| format!("add-{i}")).collect();
    props.extend((1..=width).map(|i| format!("del-{i}")));
    let n_props = 2 * width;

    let mut actions = Vec::new();
    for (word, effect) in action_vocab {
        if word == target_word {
            continue; // the target itself never appears as an action
        }
        let mut a = Action::new(word.clone(), n_props);
        a.cost = width as u64;
        for i in 0..width {
            if effect.add().get(i) {
                a.add.set(i, true); // add-i
                a.del.set(width + i, true); // del-i
            }
            if effect.del().get(i) {
                a.add.set(width + i, true);
                a.del.set(i, true);
            }
        }
        actions.push(a);
    }

    let mut goal = BitVec::zeros(n_props);
    for i in 0..width {
        if target_effect.add().get(i) {
            goal.set(i, true);
        }
        if target_effect.del().get(i) {
            goal.set(width + i, true);
        }
    }
    let task = StripsTask::new(
        format!("paraphrase-{target_word}"),
        props,
        actions,
        BitVec::zeros(n_props),
        goal.clone(),
    )?;
    let utilities = goal.iter_ones().map(|i| (i, utility)).collect();
    NetBenefitTask::new(task, utilities)
}

/// Compiles soft goals away. The compiled task adds an end-mode proposition,
/// one marked(p) per goal, and one used(a) per original action:
///   - original actions gain the not-end-mode precondition and a
///     use-at-most-once guard,
///   - end switches into end mode at cost 0,
///   - collect(p) marks a satisfied goal at cost 0, forgo(p) marks an
///     unsatisfied one at cost u(p); both are linearized in ascending goal
///     index order (the first goal is unguarded),
///   - the compiled goal is every goal marked.
pub fn compile_net_benefit(nb: &NetBenefitTask) -> StripsTask {
    let base = &nb.task;
    let w = base.width();
    let n_goals = nb.utility.len();
    let n_actions = base.actions.len();
    let width = w + 1 + n_goals + n_actions;

    let end_mode = w;
    let marked = |gi: usize| w + 1 + gi;
    let used = |ai: usize| w + 1 + n_goals + ai;

    let mut props = base.props.clone();
    props.push("end-mode".to_string());
    for (p, _) in &nb.utility {
        props.push(format!("marked-{}", base.props[*p]));
    }
    for a in &base.actions {
        props.push(format!("used-{}", a.name));
    }

    let grow = |bits: &BitVec| {
        let mut out = BitVec::zeros(width);
        for i in bits.iter_ones() {
            out.set(i, true);
        }
        out
    };

    let mut actions = Vec::new();
    for (ai, a) in base.actions.iter().enumerate() {
        let mut pre_neg = grow(&a.pre_neg);
        pre_neg.set(end_mode, true);
        pre_neg.set(used(ai), true);
        let mut add = grow(&a.add);
        add.set(used(ai), true);
        actions.push(Action {
            name: a.name.clone(),
            label: a.label.clone(),
            pre_pos: grow(&a.pre_pos),
            pre_neg,
            add,
            del: grow(&a.del),
            cost: a.cost,
        });
    }

    let mut end = Action::new("end", width).silent();
    end.pre_neg.set(end_mode, true);
    end.add.set(end_mode, true);
    end.cost = 0;
    actions.push(end);

    for (gi, (p, u)) in nb.utility.iter().enumerate() {
        let mut collect = Action::new(format!("collect-{}", base.props[*p]), width).silent();
        collect.pre_pos.set(end_mode, true);
        collect.pre_pos.set(*p, true);
        collect.pre_neg.set(marked(gi), true);
        if gi > 0 {
            collect.pre_pos.set(marked(gi - 1), true);
        }
        collect.add.set(marked(gi), true);
        collect.cost = 0;
        actions.push(collect);

        let mut forgo = Action::new(format!("forgo-{}", base.props[*p]), width).silent();
        forgo.pre_pos.set(end_mode, true);
        forgo.pre_neg.set(*p, true);
        forgo.pre_neg.set(marked(gi), true);
        if gi > 0 {
            forgo.pre_pos.set(marked(gi - 1), true);
        }
        forgo.add.set(marked(gi), true);
        forgo.cost = *u;
        actions.push(forgo);
    }

    let init = grow(&base.init);
    let mut goal = BitVec::zeros(width);
    for gi in 0..n_goals {
        goal.set(marked(gi), true);
    }
    StripsTask::new(format!("{}-compiled", base.name), props, actions, init, goal)
        .expect("compiled task is well-formed by construction")
}
