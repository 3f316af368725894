//! `dsaw paraphrase`: compile a zero-shot paraphrasing query into a
//! planning task, emit its PDDL pair, and stream improving plans to CSV.

use crate::config::ResolvedConfig;
use crate::error::CliError;
use crate::store::{atomic_write, ModelDir};
use crate::ParaphraseArgs;
use dsaw_core::algebra::{BinaryEffect, EffectTable};
use dsaw_core::planner::{
    build_paraphrase_task, compile_net_benefit, emit_pddl, solve_anytime, SolveOptions,
    SolveOutcome,
};
use std::fs;
use std::io::Write as _;
use std::time::Duration;

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut cur = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur.push(sub.min(prev[j + 1] + 1).min(cur[j] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}

pub fn run(args: ParaphraseArgs) -> Result<(), CliError> {
    let (model, vocab) = ModelDir::new(&args.model).load()?;
    if !model.variant.is_discrete() {
        return Err(CliError::Usage(format!(
            "paraphrasing requires a discrete model (dsaw or sgbtl), got {}",
            model.variant
        )));
    }
    let Some(target_id) = vocab.id(&args.target) else {
        let mut scored: Vec<(usize, &str)> = (0..vocab.len() as u32)
            .map(|id| (levenshtein(&args.target, vocab.word(id)), vocab.word(id)))
            .collect();
        scored.sort();
        let nearest: Vec<&str> = scored.iter().take(5).map(|(_, w)| *w).collect();
        return Err(CliError::Data(format!(
            "target {:?} is not in the vocabulary; nearest words: {}",
            args.target,
            nearest.join(", ")
        )));
    };

    let table = EffectTable::extract(&model, &vocab)?;
    let top = args.vocab_top.min(vocab.len());
    let action_vocab: Vec<(String, BinaryEffect)> = (0..top as u32)
        .filter(|&id| id != target_id)
        .map(|id| (vocab.word(id).to_string(), table.get(id).clone()))
        .collect();
    let nb = build_paraphrase_task(&args.target, table.get(target_id), &action_vocab, args.utility)?;
    let hard = args.hard;
    let task = if hard { nb.task.clone() } else { compile_net_benefit(&nb) };

    fs::create_dir_all(&args.out)?;
    let (domain, problem) = emit_pddl(&task);
    atomic_write(&args.out.join("domain.pddl"), domain.as_bytes())?;
    atomic_write(&args.out.join("problem.pddl"), problem.as_bytes())?;

    let mut config = ResolvedConfig::new();
    config.set("model_dir", args.model.display());
    config.set("target", &args.target);
    config.set("vocab_top", top);
    config.set("mode", if hard { "hard" } else { "soft" });
    config.set("utility", args.utility);
    config.set("budget_seconds", args.budget.map_or("none".to_string(), |b| b.to_string()));
    atomic_write(&args.out.join("config.txt"), config.to_text().as_bytes())?;

    let options = SolveOptions {
        budget: args.budget.map(Duration::from_secs_f64),
        ..SolveOptions::default()
    };
    let mut log = fs::File::create(args.out.join("plans.csv"))?;
    writeln!(log, "solution_index,cost,wall_clock_seconds,plan_length,plan")?;
    let mut index = 0usize;
    let result = solve_anytime(&task, &options, |plan| {
        let labels = plan.labels(&task).join(" ");
        let _ = writeln!(
            log,
            "{},{},{:.6},{},{}",
            index,
            plan.cost,
            plan.wall_clock.as_secs_f64(),
            plan.steps.len(),
            labels
        );
        let _ = log.flush();
        eprintln!("solution {index}: cost {} [{}]", plan.cost, labels);
        index += 1;
    });
    let marker = match result.outcome {
        SolveOutcome::ProvedOptimal => "optimal-exhausted",
        SolveOutcome::Timeout => "timeout",
        SolveOutcome::Unsolvable => "unsolvable",
    };
    writeln!(log, "# {marker}")?;
    eprintln!("{marker}; solution log at {}", args.out.join("plans.csv").display());
    if hard && result.outcome == SolveOutcome::Unsolvable {
        return Err(CliError::Unsolvable(format!(
            "no word sequence achieves the exact effects of {:?}",
            args.target
        )));
    }
    Ok(())
}
