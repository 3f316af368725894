//! Right-regular grammars and the two-way compilation between grammars and
//! planning tasks, plus the length-bounded enumerators used to compare the
//! two languages.

use super::task::{Action, StripsTask};
use super::PlannerError;
use crate::bits::BitVec;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

/// One production. The three admissible forms:
/// X -> a Y (terminal + next), X -> a (terminal only), X -> e (neither).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub lhs: String,
    pub terminal: Option<String>,
    pub next: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RightRegularGrammar {
    pub rules: Vec<Rule>,
    pub start: String,
}

impl RightRegularGrammar {
    pub fn new(rules: Vec<Rule>, start: String) -> Result<RightRegularGrammar, PlannerError> {
        let g = RightRegularGrammar { rules, start };
        g.validate()?;
        Ok(g)
    }

    /// The start symbol, left-hand sides and continuation-slot symbols, in
    /// first appearance order. A nonterminal may have no rules at all (a
    /// dead end contributing nothing to the language).
    pub fn nonterminals(&self) -> Vec<String> {
        let mut out = vec![self.start.clone()];
        let mut seen: HashSet<String> = out.iter().cloned().collect();
        for r in &self.rules {
            if seen.insert(r.lhs.clone()) {
                out.push(r.lhs.clone());
            }
        }
        for r in &self.rules {
            if let Some(n) = &r.next {
                if seen.insert(n.clone()) {
                    out.push(n.clone());
                }
            }
        }
        out
    }

    pub fn terminals(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for r in &self.rules {
            if let Some(t) = &r.terminal {
                if seen.insert(t.clone()) {
                    out.push(t.clone());
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<(), PlannerError> {
        let nts: HashSet<&String> = std::iter::once(&self.start)
            .chain(self.rules.iter().map(|r| &r.lhs))
            .chain(self.rules.iter().filter_map(|r| r.next.as_ref()))
            .collect();
        for (i, r) in self.rules.iter().enumerate() {
            if r.terminal.is_none() && r.next.is_some() {
                return Err(PlannerError::Grammar {
                    line: i + 1,
                    msg: "a continuation requires a terminal (X -> a Y)".into(),
                });
            }
            if let Some(t) = &r.terminal {
                if nts.contains(t) {
                    return Err(PlannerError::Grammar {
                        line: i + 1,
                        msg: format!(
                            "symbol {t:?} is used as a nonterminal; rule is not right-regular"
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// Text format: one rule per line, "X -> a Y", "X -> a", or "X ->" for
    /// the empty production; '#' starts a comment. The first rule's
    /// left-hand side is the start symbol.
    pub fn parse(text: &str) -> Result<RightRegularGrammar, PlannerError> {
        let mut rules = Vec::new();
        let mut start = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| PlannerError::Grammar { line: ln + 1, msg };
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| err(format!("expected \"X -> ...\", got {line:?}")))?;
            let lhs = lhs.trim();
            if lhs.split_whitespace().count() != 1 {
                return Err(err(format!("left-hand side must be one symbol, got {lhs:?}")));
            }
            let rhs: Vec<&str> = rhs.split_whitespace().collect();
            let rule = match rhs.as_slice() {
                [] => Rule { lhs: lhs.into(), terminal: None, next: None },
                [t] => Rule { lhs: lhs.into(), terminal: Some(t.to_string()), next: None },
                [t, y] => Rule {
                    lhs: lhs.into(),
                    terminal: Some(t.to_string()),
                    next: Some(y.to_string()),
                },
                _ => return Err(err(format!("right-hand side too long in {line:?}"))),
            };
            start.get_or_insert_with(|| rule.lhs.clone());
            rules.push(rule);
        }
        let start = start.ok_or(PlannerError::Grammar {
            line: 0,
            msg: "no rules found".into(),
        })?;
        let g = RightRegularGrammar { rules, start };
        // Re-check with per-rule line numbers lost to comments/blanks kept
        // simple: validation reports the rule index.
        g.validate()?;
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            match (&r.terminal, &r.next) {
                (None, _) => out.push_str(&format!("{} ->\n", r.lhs)),
                (Some(t), None) => out.push_str(&format!("{} -> {}\n", r.lhs, t)),
                (Some(t), Some(y)) => out.push_str(&format!("{} -> {} {}\n", r.lhs, t, y)),
            }
        }
        out
    }
}

/// Grammar -> task: one proposition per nonterminal plus an acceptance
/// proposition; rule X -> a Y becomes an action <{X}, {Y}, {X}> labeled a,
/// terminal and empty rules move to the acceptance proposition (the empty
/// rule's action is silent). Plans of the task spell exactly the grammar's
/// strings through their labels.
pub fn grammar_to_task(g: &RightRegularGrammar) -> StripsTask {
    let nts = g.nonterminals();
    let mut accept = "accept".to_string();
    while nts.contains(&accept) {
        accept.push('x');
    }
    let mut props = nts.clone();
    props.push(accept.clone());
    let width = props.len();
    let index: HashMap<&String, usize> = nts.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let accept_idx = width - 1;

    let actions = g
        .rules
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut a = Action::new(format!("r{i}"), width);
            a.label = r.terminal.clone();
            a.cost = 1;
            a.pre_pos.set(index[&r.lhs], true);
            match &r.next {
                Some(y) => a.add.set(index[y], true),
                None => a.add.set(accept_idx, true),
            }
            // <{X}, {Y}, {X}>; for self-loops (Y = X) the re-added symbol
            // cancels the deletion, leaving a labeled no-op.
            if !a.add.get(index[&r.lhs]) {
                a.del.set(index[&r.lhs], true);
            }
            a
        })
        .collect();

    let mut init = BitVec::zeros(width);
    init.set(index[&g.start], true);
    let mut goal = BitVec::zeros(width);
    goal.set(accept_idx, true);
    StripsTask::new("grammar-task", props, actions, init, goal)
        .expect("grammar task is well-formed by construction")
}

/// Task -> grammar over the reachable state space: nonterminals are states,
/// terminals are action names, every applicable action contributes
/// s -> a s', and goal states gain an empty production. Errors out when the
/// reachable state count exceeds `state_bound`.
pub fn task_to_grammar(
    task: &StripsTask,
    state_bound: usize,
) -> Result<RightRegularGrammar, PlannerError> {
    let mut order: Vec<BitVec> = Vec::new();
    let mut seen: HashSet<BitVec> = HashSet::new();
    let mut queue = VecDeque::new();
    queue.push_back(task.init.clone());
    seen.insert(task.init.clone());
    while let Some(s) = queue.pop_front() {
        order.push(s.clone());
        if order.len() > state_bound {
            return Err(PlannerError::StateBoundExceeded { bound: state_bound });
        }
        for a in &task.actions {
            if task.applicable(&s, a) {
                let s2 = task.successor(&s, a);
                if seen.insert(s2.clone()) {
                    queue.push_back(s2);
                }
            }
        }
    }
    let name = |s: &BitVec| format!("s{}", s.to_bit_string());
    let mut rules = Vec::new();
    for s in &order {
        for a in &task.actions {
            if task.applicable(s, a) {
                let s2 = task.successor(s, a);
                rules.push(Rule {
                    lhs: name(s),
                    terminal: Some(a.name.clone()),
                    next: Some(name(&s2)),
                });
            }
        }
        if task.goal_satisfied(s) {
            rules.push(Rule { lhs: name(s), terminal: None, next: None });
        }
    }
    RightRegularGrammar::new(rules, name(&task.init))
}

/// All strings of length <= `max_len` generated by the grammar.
pub fn enumerate_strings(
    g: &RightRegularGrammar,
    max_len: usize,
) -> BTreeSet<Vec<String>> {
    let mut by_lhs: HashMap<&String, Vec<&Rule>> = HashMap::new();
    for r in &g.rules {
        by_lhs.entry(&r.lhs).or_default().push(r);
    }
    let mut out = BTreeSet::new();
    let mut seen: HashSet<(String, Vec<String>)> = HashSet::new();
    let mut queue = VecDeque::new();
    queue.push_back((g.start.clone(), Vec::new()));
    seen.insert((g.start.clone(), Vec::new()));
    while let Some((nt, prefix)) = queue.pop_front() {
        for r in by_lhs.get(&nt).map(|v| v.as_slice()).unwrap_or(&[]) {
            match (&r.terminal, &r.next) {
                (None, None) => {
                    out.insert(prefix.clone());
                }
                (Some(t), None) => {
                    if prefix.len() < max_len {
                        let mut s = prefix.clone();
                        s.push(t.clone());
                        out.insert(s);
                    }
                }
                (Some(t), Some(y)) => {
                    if prefix.len() < max_len {
                        let mut s = prefix.clone();
                        s.push(t.clone());
                        let key = (y.clone(), s);
                        if !seen.contains(&key) {
                            seen.insert(key.clone());
                            queue.push_back(key);
                        }
                    }
                }
                (None, Some(_)) => unreachable!("validated away"),
            }
        }
    }
    out
}

/// Which symbol a plan step contributes to the enumerated string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanAlphabet {
    /// Action names (the Theorem-2 terminals).
    Names,
    /// Action labels, silent steps contributing nothing.
    Labels,
}

/// All strings spelled by goal-reaching action sequences with at most
/// `max_len` emitted symbols and at most `max_steps` steps. Only intended
/// for desk-scale tasks; the exploration tree is exponential.
pub fn enumerate_plan_strings(
    task: &StripsTask,
    max_len: usize,
    max_steps: usize,
    alphabet: PlanAlphabet,
) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    // (state, emitted string) -> fewest steps at which it was reached.
    let mut seen: HashMap<(BitVec, Vec<String>), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    queue.push_back((task.init.clone(), Vec::new(), 0usize));
    seen.insert((task.init.clone(), Vec::new()), 0);
    while let Some((state, string, steps)) = queue.pop_front() {
        if task.goal_satisfied(&state) {
            out.insert(string.clone());
        }
        if steps == max_steps {
            continue;
        }
        for a in &task.actions {
            if !task.applicable(&state, a) {
                continue;
            }
            let emitted = match alphabet {
                PlanAlphabet::Names => Some(a.name.clone()),
                PlanAlphabet::Labels => a.label.clone(),
            };
            let mut s2 = string.clone();
            if let Some(sym) = emitted {
                if string.len() == max_len {
                    continue;
                }
                s2.push(sym);
            }
            let next = (task.successor(&state, a), s2);
            let best = seen.get(&next).copied().unwrap_or(usize::MAX);
            if steps + 1 < best {
                seen.insert(next.clone(), steps + 1);
                queue.push_back((next.0, next.1, steps + 1));
            }
        }
    }
    out
}
