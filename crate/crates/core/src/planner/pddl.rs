//! PDDL import/export for the grounded STRIPS subset this toolkit uses:
//! propositional predicates, negative preconditions and total-cost action
//! costs. Anything outside the subset is rejected with a location.
//!
//! PDDL has no notion of an action label; on parse, labels default to the
//! action name except for the bookkeeping actions of the soft-goal
//! compilation ("end", "collect-*", "forgo-*"), which stay silent. Round
//! trips of compiled paraphrase tasks are therefore exact.

use super::task::{Action, StripsTask};
use super::PlannerError;
use crate::bits::BitVec;
use std::collections::HashMap;
use std::fmt::Write as _;

pub fn emit_pddl(task: &StripsTask) -> (String, String) {
    let mut d = String::new();
    writeln!(d, "(define (domain {})", task.name).unwrap();
    writeln!(d, "  (:requirements :strips :negative-preconditions :action-costs)").unwrap();
    writeln!(d, "  (:predicates").unwrap();
    for p in &task.props {
        writeln!(d, "    ({p})").unwrap();
    }
    writeln!(d, "  )").unwrap();
    writeln!(d, "  (:functions (total-cost))").unwrap();
    for a in &task.actions {
        writeln!(d, "  (:action {}", a.name).unwrap();
        writeln!(d, "    :parameters ()").unwrap();
        let mut pre = String::new();
        for i in a.pre_pos.iter_ones() {
            write!(pre, " ({})", task.props[i]).unwrap();
        }
        for i in a.pre_neg.iter_ones() {
            write!(pre, " (not ({}))", task.props[i]).unwrap();
        }
        writeln!(d, "    :precondition (and{pre})").unwrap();
        let mut eff = String::new();
        for i in a.add.iter_ones() {
            write!(eff, " ({})", task.props[i]).unwrap();
        }
        for i in a.del.iter_ones() {
            write!(eff, " (not ({}))", task.props[i]).unwrap();
        }
        write!(eff, " (increase (total-cost) {})", a.cost).unwrap();
        writeln!(d, "    :effect (and{eff})").unwrap();
        writeln!(d, "  )").unwrap();
    }
    writeln!(d, ")").unwrap();

    let mut p = String::new();
    writeln!(p, "(define (problem {}-problem)", task.name).unwrap();
    writeln!(p, "  (:domain {})", task.name).unwrap();
    let mut init = String::from(" (= (total-cost) 0)");
    for i in task.init.iter_ones() {
        write!(init, " ({})", task.props[i]).unwrap();
    }
    writeln!(p, "  (:init{init})").unwrap();
    let mut goal = String::new();
    for i in task.goal.iter_ones() {
        write!(goal, " ({})", task.props[i]).unwrap();
    }
    writeln!(p, "  (:goal (and{goal}))").unwrap();
    writeln!(p, "  (:metric minimize (total-cost))").unwrap();
    writeln!(p, ")").unwrap();
    (d, p)
}

fn default_label(name: &str) -> Option<String> {
    if name == "end" || name.starts_with("collect-") || name.starts_with("forgo-") {
        None
    } else {
        Some(name.to_string())
    }
}

// ---------------------------------------------------------------------------
// S-expression layer

#[derive(Debug, Clone)]
enum Sexp {
    Atom { text: String, line: usize, col: usize },
    List { items: Vec<Sexp>, line: usize, col: usize },
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom { line, col, .. } | Sexp::List { line, col, .. } => (*line, *col),
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    fn items(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }
}

fn err_at(pos: (usize, usize), msg: impl Into<String>) -> PlannerError {
    PlannerError::PddlParse { line: pos.0, col: pos.1, msg: msg.into() }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

#[derive(Debug)]
enum Token {
    LParen(usize, usize),
    RParen(usize, usize),
    Atom(String, usize, usize),
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { chars: src.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<Token>, PlannerError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, col) = (self.line, self.col);
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c == '(' {
                self.bump();
                out.push(Token::LParen(line, col));
            } else if c == ')' {
                self.bump();
                out.push(Token::RParen(line, col));
            } else if c.is_ascii_alphanumeric() || "-_:=".contains(c) {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || "-_:=".contains(c) {
                        text.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                out.push(Token::Atom(text, line, col));
            } else {
                return Err(err_at((line, col), format!("unexpected character {c:?}")));
            }
        }
        Ok(out)
    }
}

fn parse_sexp(src: &str) -> Result<Sexp, PlannerError> {
    let tokens = Lexer::new(src).tokens()?;
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut top: Option<Sexp> = None;
    for tok in tokens {
        match tok {
            Token::LParen(l, c) => stack.push((Vec::new(), l, c)),
            Token::RParen(l, c) => {
                let (items, ll, cc) =
                    stack.pop().ok_or_else(|| err_at((l, c), "unbalanced ')'"))?;
                let sexp = Sexp::List { items, line: ll, col: cc };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(sexp),
                    None => {
                        if top.is_some() {
                            return Err(err_at((l, c), "multiple top-level expressions"));
                        }
                        top = Some(sexp);
                    }
                }
            }
            Token::Atom(text, l, c) => {
                let sexp = Sexp::Atom { text, line: l, col: c };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(sexp),
                    None => return Err(err_at((l, c), "atom outside any list")),
                }
            }
        }
    }
    if let Some((_, l, c)) = stack.last() {
        return Err(err_at((*l, *c), "unbalanced '('"));
    }
    top.ok_or_else(|| err_at((1, 1), "empty input"))
}

// ---------------------------------------------------------------------------
// Interpretation

struct DomainParts {
    name: String,
    props: Vec<String>,
    actions: Vec<Action>,
}

fn expect_head<'s>(sexp: &'s Sexp, head: &str) -> Result<&'s [Sexp], PlannerError> {
    let items = sexp.items().ok_or_else(|| err_at(sexp.pos(), format!("expected ({head} ...)")))?;
    match items.first().and_then(Sexp::atom) {
        Some(h) if h.eq_ignore_ascii_case(head) => Ok(&items[1..]),
        _ => Err(err_at(sexp.pos(), format!("expected ({head} ...)"))),
    }
}

/// A bare proposition: a one-element list holding its name.
fn parse_prop<'s>(sexp: &'s Sexp, props: &HashMap<&str, usize>) -> Result<usize, PlannerError> {
    let items =
        sexp.items().ok_or_else(|| err_at(sexp.pos(), "expected a (proposition)"))?;
    match items {
        [Sexp::Atom { text, line, col }] => props
            .get(text.as_str())
            .copied()
            .ok_or_else(|| err_at((*line, *col), format!("undeclared predicate {text:?}"))),
        _ => Err(err_at(sexp.pos(), "expected a zero-argument predicate")),
    }
}

fn parse_literals(
    sexp: &Sexp,
    props: &HashMap<&str, usize>,
    pos_bits: &mut BitVec,
    neg_bits: Option<&mut BitVec>,
    what: &str,
) -> Result<(), PlannerError> {
    // Either (and <lit>*) or a single literal.
    let items = sexp.items().ok_or_else(|| err_at(sexp.pos(), format!("malformed {what}")))?;
    let lits: Vec<&Sexp> = if items.first().and_then(Sexp::atom) == Some("and") {
        items[1..].iter().collect()
    } else {
        vec![sexp]
    };
    let mut neg_bits = neg_bits;
    for lit in lits {
        let inner = lit.items().ok_or_else(|| err_at(lit.pos(), format!("malformed {what}")))?;
        if inner.first().and_then(Sexp::atom) == Some("not") {
            match (&mut neg_bits, inner.len()) {
                (Some(neg), 2) => {
                    let idx = parse_prop(&inner[1], props)?;
                    neg.set(idx, true);
                }
                _ => return Err(err_at(lit.pos(), format!("negation not allowed in {what}"))),
            }
        } else {
            let idx = parse_prop(lit, props)?;
            pos_bits.set(idx, true);
        }
    }
    Ok(())
}

fn parse_effect(
    sexp: &Sexp,
    props: &HashMap<&str, usize>,
    action: &mut Action,
) -> Result<(), PlannerError> {
    let items = sexp.items().ok_or_else(|| err_at(sexp.pos(), "malformed effect"))?;
    let effs: Vec<&Sexp> = if items.first().and_then(Sexp::atom) == Some("and") {
        items[1..].iter().collect()
    } else {
        vec![sexp]
    };
    for e in effs {
        let inner = e.items().ok_or_else(|| err_at(e.pos(), "malformed effect"))?;
        match inner.first().and_then(Sexp::atom) {
            Some("not") if inner.len() == 2 => {
                let idx = parse_prop(&inner[1], props)?;
                action.del.set(idx, true);
            }
            Some("increase") if inner.len() == 3 => {
                expect_head(&inner[1], "total-cost")?;
                let cost = inner[2]
                    .atom()
                    .and_then(|t| t.parse::<u64>().ok())
                    .ok_or_else(|| err_at(inner[2].pos(), "expected an integer cost"))?;
                action.cost = cost;
            }
            Some("increase") => return Err(err_at(e.pos(), "malformed (increase ...)")),
            _ => {
                let idx = parse_prop(e, props)?;
                action.add.set(idx, true);
            }
        }
    }
    Ok(())
}

fn parse_domain(src: &str) -> Result<DomainParts, PlannerError> {
    let top = parse_sexp(src)?;
    let body = expect_head(&top, "define")?;
    let name = expect_head(
        body.first().ok_or_else(|| err_at(top.pos(), "missing (domain ...)"))?,
        "domain",
    )?
    .first()
    .and_then(Sexp::atom)
    .ok_or_else(|| err_at(top.pos(), "missing domain name"))?
    .to_string();

    let mut props: Vec<String> = Vec::new();
    let mut actions: Vec<Action> = Vec::new();
    let mut prop_index: HashMap<String, usize> = HashMap::new();

    for section in &body[1..] {
        let items =
            section.items().ok_or_else(|| err_at(section.pos(), "expected a (:section ...)"))?;
        match items.first().and_then(Sexp::atom) {
            Some(":requirements") => {
                for req in &items[1..] {
                    match req.atom() {
                        Some(":strips" | ":negative-preconditions" | ":action-costs") => {}
                        _ => {
                            return Err(err_at(
                                req.pos(),
                                "requirement outside the supported subset",
                            ))
                        }
                    }
                }
            }
            Some(":predicates") => {
                for p in &items[1..] {
                    let inner =
                        p.items().ok_or_else(|| err_at(p.pos(), "malformed predicate"))?;
                    match inner {
                        [Sexp::Atom { text, .. }] => {
                            if prop_index.insert(text.clone(), props.len()).is_some() {
                                return Err(err_at(p.pos(), format!("duplicate predicate {text:?}")));
                            }
                            props.push(text.clone());
                        }
                        _ => {
                            return Err(err_at(
                                p.pos(),
                                "only zero-argument predicates are supported",
                            ))
                        }
                    }
                }
            }
            Some(":functions") => {
                for f in &items[1..] {
                    expect_head(f, "total-cost").map_err(|_| {
                        err_at(f.pos(), "only the total-cost function is supported")
                    })?;
                }
            }
            Some(":action") => {
                let name = items
                    .get(1)
                    .and_then(Sexp::atom)
                    .ok_or_else(|| err_at(section.pos(), "missing action name"))?
                    .to_string();
                let width = props.len();
                let prop_refs: HashMap<&str, usize> =
                    prop_index.iter().map(|(k, v)| (k.as_str(), *v)).collect();
                let mut action = Action {
                    label: default_label(&name),
                    name,
                    pre_pos: BitVec::zeros(width),
                    pre_neg: BitVec::zeros(width),
                    add: BitVec::zeros(width),
                    del: BitVec::zeros(width),
                    cost: 0,
                };
                let mut i = 2;
                while i < items.len() {
                    let key = items[i]
                        .atom()
                        .ok_or_else(|| err_at(items[i].pos(), "expected an action keyword"))?;
                    let value = items
                        .get(i + 1)
                        .ok_or_else(|| err_at(items[i].pos(), format!("{key} needs a value")))?;
                    match key {
                        ":parameters" => {
                            if !value.items().is_some_and(|v| v.is_empty()) {
                                return Err(err_at(
                                    value.pos(),
                                    "only ground actions (empty :parameters) are supported",
                                ));
                            }
                        }
                        ":precondition" => {
                            let mut pos = std::mem::replace(
                                &mut action.pre_pos,
                                BitVec::zeros(0),
                            );
                            let mut neg =
                                std::mem::replace(&mut action.pre_neg, BitVec::zeros(0));
                            parse_literals(value, &prop_refs, &mut pos, Some(&mut neg), "precondition")?;
                            action.pre_pos = pos;
                            action.pre_neg = neg;
                        }
                        ":effect" => parse_effect(value, &prop_refs, &mut action)?,
                        _ => return Err(err_at(items[i].pos(), format!("unsupported key {key}"))),
                    }
                    i += 2;
                }
                actions.push(action);
            }
            _ => return Err(err_at(section.pos(), "unsupported domain section")),
        }
    }
    Ok(DomainParts { name, props, actions })
}

/// Parses a domain/problem pair back into a task. The problem must reference
/// the domain by name; init and goal may only use declared predicates.
pub fn parse_pddl(domain_src: &str, problem_src: &str) -> Result<StripsTask, PlannerError> {
    let domain = parse_domain(domain_src)?;
    let prop_refs: HashMap<&str, usize> =
        domain.props.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let width = domain.props.len();

    let top = parse_sexp(problem_src)?;
    let body = expect_head(&top, "define")?;
    expect_head(body.first().ok_or_else(|| err_at(top.pos(), "missing (problem ...)"))?, "problem")?;

    let mut init = BitVec::zeros(width);
    let mut goal = BitVec::zeros(width);
    let mut domain_ref: Option<String> = None;
    for section in &body[1..] {
        let items =
            section.items().ok_or_else(|| err_at(section.pos(), "expected a (:section ...)"))?;
        match items.first().and_then(Sexp::atom) {
            Some(":domain") => {
                domain_ref = items.get(1).and_then(Sexp::atom).map(|s| s.to_string());
            }
            Some(":init") => {
                for fact in &items[1..] {
                    let inner =
                        fact.items().ok_or_else(|| err_at(fact.pos(), "malformed init fact"))?;
                    if inner.first().and_then(Sexp::atom) == Some("=") {
                        continue; // (= (total-cost) 0)
                    }
                    let idx = parse_prop(fact, &prop_refs)?;
                    init.set(idx, true);
                }
            }
            Some(":goal") => {
                let value =
                    items.get(1).ok_or_else(|| err_at(section.pos(), "empty :goal section"))?;
                parse_literals(value, &prop_refs, &mut goal, None, "goal")?;
            }
            Some(":metric") => {} // minimize (total-cost); nothing to record
            _ => return Err(err_at(section.pos(), "unsupported problem section")),
        }
    }
    match domain_ref {
        Some(d) if d == domain.name => {}
        Some(d) => {
            return Err(err_at(
                top.pos(),
                format!("problem references domain {d:?}, expected {:?}", domain.name),
            ))
        }
        None => return Err(err_at(top.pos(), "problem is missing (:domain ...)")),
    }
    StripsTask::new(domain.name, domain.props, domain.actions, init, goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::compile::{build_paraphrase_task, compile_net_benefit};
    use crate::planner::search::{solve_anytime, SolveOptions};
    use crate::algebra::BinaryEffect;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bv(s: &str) -> BitVec {
        BitVec::from_bit_string(s).unwrap()
    }

    fn random_task<R: Rng>(rng: &mut R) -> StripsTask {
        let width = rng.gen_range(1..=6);
        let n_actions = rng.gen_range(1..=5);
        let actions = (0..n_actions)
            .map(|i| {
                let mut a = Action::new(format!("act-{i}"), width);
                a.cost = rng.gen_range(0..=9);
                for j in 0..width {
                    match rng.gen_range(0..5) {
                        0 => a.pre_pos.set(j, true),
                        1 => a.pre_neg.set(j, true),
                        _ => {}
                    }
                    match rng.gen_range(0..3) {
                        0 => a.add.set(j, true),
                        1 => {
                            if !a.add.get(j) {
                                a.del.set(j, true)
                            }
                        }
                        _ => {}
                    }
                }
                a
            })
            .collect();
        let mut init = BitVec::zeros(width);
        let mut goal = BitVec::zeros(width);
        for j in 0..width {
            init.set(j, rng.gen_bool(0.4));
            goal.set(j, rng.gen_bool(0.4));
        }
        StripsTask::new(
            "rt",
            (0..width).map(|i| format!("p{i}")).collect(),
            actions,
            init,
            goal,
        )
        .unwrap()
    }

    #[test]
    fn random_tasks_roundtrip_structurally() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..100 {
            let task = random_task(&mut rng);
            let (d, p) = emit_pddl(&task);
            let back = parse_pddl(&d, &p).unwrap();
            assert_eq!(task, back);
        }
    }

    #[test]
    fn empty_goal_roundtrips() {
        let task = StripsTask::new(
            "empty",
            vec!["p".into()],
            vec![Action::new("a", 1)],
            bv("1"),
            bv("0"),
        )
        .unwrap();
        let (d, p) = emit_pddl(&task);
        assert!(p.contains("(:goal (and))"), "{p}");
        let back = parse_pddl(&d, &p).unwrap();
        assert_eq!(task, back);
    }

    #[test]
    fn compiled_paraphrase_task_replays_to_same_optimal_cost() {
        let t = crate::fixtures::table1_effects();
        let vocab = vec![
            ("king".to_string(), t.king.clone()),
            ("man".to_string(), t.man.clone()),
            ("woman".to_string(), t.woman.clone()),
        ];
        let queen = BinaryEffect::new(bv("11"), bv("00"));
        let nb = build_paraphrase_task("queen", &queen, &vocab, 100).unwrap();
        let compiled = compile_net_benefit(&nb);
        let (d, p) = emit_pddl(&compiled);
        let back = parse_pddl(&d, &p).unwrap();
        assert_eq!(compiled, back);
        let a = solve_anytime(&compiled, &SolveOptions::default(), |_| {});
        let b = solve_anytime(&back, &SolveOptions::default(), |_| {});
        assert_eq!(a.plans.last().unwrap().cost, b.plans.last().unwrap().cost);
    }

    #[test]
    fn parser_rejects_out_of_subset_constructs() {
        let bad_domain = "(define (domain x)\n  (:requirements :typing)\n)";
        let err = parse_pddl(bad_domain, "(define (problem y) (:domain x))").unwrap_err();
        match err {
            PlannerError::PddlParse { line, col, msg } => {
                assert_eq!(line, 2);
                assert!(col > 0);
                assert!(msg.contains("subset"), "{msg}");
            }
            e => panic!("{e}"),
        }

        let param_domain = "(define (domain x)\n  (:predicates (p))\n  (:action a\n    :parameters (?v)\n    :precondition (and)\n    :effect (and (p))\n  )\n)";
        assert!(parse_pddl(param_domain, "(define (problem y) (:domain x))").is_err());
    }

    #[test]
    fn parser_reports_undeclared_predicates_with_location() {
        let domain = "(define (domain x)\n  (:predicates (p))\n  (:action a\n    :parameters ()\n    :precondition (and (q))\n    :effect (and (p))\n  )\n)";
        let err = parse_pddl(domain, "(define (problem y) (:domain x) (:init) (:goal (and)))")
            .unwrap_err();
        match err {
            PlannerError::PddlParse { line, msg, .. } => {
                assert_eq!(line, 5);
                assert!(msg.contains("undeclared"), "{msg}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn problem_domain_mismatch_is_rejected() {
        let task = StripsTask::new("a", vec!["p".into()], vec![], bv("0"), bv("0")).unwrap();
        let (d, _) = emit_pddl(&task);
        let other = StripsTask::new("b", vec!["p".into()], vec![], bv("0"), bv("0")).unwrap();
        let (_, p) = emit_pddl(&other);
        assert!(parse_pddl(&d, &p).is_err());
    }
}
