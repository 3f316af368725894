//! `dsaw grammar`: right-regular grammar <-> planning task conversion.

use crate::error::CliError;
use crate::store::atomic_write;
use crate::GrammarArgs;
use dsaw_core::planner::{
    emit_pddl, grammar_to_task, parse_pddl, solve_anytime, task_to_grammar, RightRegularGrammar,
    SolveOptions, SolveOutcome,
};
use std::fs;
use std::path::{Path, PathBuf};

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

pub fn run(args: GrammarArgs) -> Result<(), CliError> {
    match args.direction.as_str() {
        "to-task" => {
            let input = args
                .input
                .as_ref()
                .ok_or_else(|| CliError::Usage("to-task needs --input GRAMMAR_FILE".into()))?;
            let grammar = RightRegularGrammar::parse(&read(input)?)?;
            let task = grammar_to_task(&grammar);
            let (domain, problem) = emit_pddl(&task);
            let base = args.out.display();
            let domain_path = PathBuf::from(format!("{base}.domain.pddl"));
            let problem_path = PathBuf::from(format!("{base}.problem.pddl"));
            atomic_write(&domain_path, domain.as_bytes())?;
            atomic_write(&problem_path, problem.as_bytes())?;
            eprintln!("wrote {} and {}", domain_path.display(), problem_path.display());
            if args.solve {
                let result = solve_anytime(&task, &SolveOptions::default(), |_| {});
                match result.outcome {
                    SolveOutcome::Unsolvable => {
                        return Err(CliError::Unsolvable(
                            "the grammar generates no string".into(),
                        ))
                    }
                    _ => {
                        let plan = result.plans.last().expect("solvable task has a plan");
                        println!("plan labels: {}", plan.labels(&task).join(" "));
                        println!("plan cost: {}", plan.cost);
                    }
                }
            }
            Ok(())
        }
        "to-grammar" => {
            let (domain, problem) = match (&args.domain, &args.problem) {
                (Some(d), Some(p)) => (read(d)?, read(p)?),
                _ => {
                    return Err(CliError::Usage(
                        "to-grammar needs --domain DOMAIN.pddl and --problem PROBLEM.pddl".into(),
                    ))
                }
            };
            let task = parse_pddl(&domain, &problem)?;
            let grammar = task_to_grammar(&task, args.state_bound)?;
            atomic_write(&args.out, grammar.to_text().as_bytes())?;
            eprintln!(
                "wrote {} ({} nonterminals, {} rules)",
                args.out.display(),
                grammar.nonterminals().len(),
                grammar.rules.len()
            );
            Ok(())
        }
        other => Err(CliError::Usage(format!(
            "unknown direction {other:?} (expected to-task or to-grammar)"
        ))),
    }
}
