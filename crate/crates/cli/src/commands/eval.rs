//! `dsaw eval`: similarity, analogy and classification reports as CSV.

use crate::config::ResolvedConfig;
use crate::error::CliError;
use crate::store::{atomic_write, ModelDir};
use crate::EvalArgs;
use dsaw_core::evalsuite::{
    analogy_eval, classify_eval, parse_analogy, parse_classify, similarity_eval_many,
    AnalogyMethod, EmbeddingSpace, SeqOrdering, SimilarityDataset, SplitSpec,
};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let (model, vocab) = ModelDir::new(&args.model).load()?;
    let space = EmbeddingSpace::from_model(&model, &vocab)?;

    let mut config = ResolvedConfig::new();
    config.set("model_dir", args.model.display());
    config.set("task", &args.task);
    config.set(
        "datasets",
        args.dataset.iter().map(dataset_name).collect::<Vec<_>>().join(","),
    );

    let mut csv = String::new();
    match args.task.as_str() {
        "sim" => {
            let mut datasets = Vec::new();
            for path in &args.dataset {
                datasets.push((dataset_name(path), SimilarityDataset::parse(&read(path)?)?));
            }
            let (reports, pooled) = similarity_eval_many(&space, &vocab, &datasets)?;
            writeln!(csv, "dataset,pairs_total,pairs_used,pairs_skipped,rho").unwrap();
            for (name, r) in &reports {
                writeln!(csv, "{name},{},{},{},{}", r.pairs_total, r.pairs_used, r.pairs_skipped, r.rho)
                    .unwrap();
            }
            if reports.len() > 1 {
                writeln!(
                    csv,
                    "pooled,{},{},{},{}",
                    pooled.pairs_total, pooled.pairs_used, pooled.pairs_skipped, pooled.rho
                )
                .unwrap();
            }
        }
        "analogy" => {
            let method_name = args.method.as_deref().unwrap_or(if space.is_discrete() {
                "seqadd"
            } else {
                "3cosadd"
            });
            let method = match method_name {
                "3cosadd" => {
                    if space.is_discrete() {
                        return Err(CliError::Usage(
                            "3cosadd requires a continuous model (cbow or sg)".into(),
                        ));
                    }
                    AnalogyMethod::ThreeCosAdd
                }
                "seqadd" => {
                    if !space.is_discrete() {
                        return Err(CliError::Usage(
                            "seqadd requires a discrete model (dsaw or sgbtl)".into(),
                        ));
                    }
                    let ordering = match &args.ordering {
                        Some(s) => SeqOrdering::parse(s)
                            .map_err(|e| CliError::Usage(e.to_string()))?,
                        None => SeqOrdering::default_best(),
                    };
                    AnalogyMethod::SeqAdd(ordering)
                }
                "ignore-a" => AnalogyMethod::IgnoreA,
                "only-b" => AnalogyMethod::OnlyB,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown analogy method {other:?} (3cosadd, seqadd, ignore-a, only-b)"
                    )))
                }
            };
            if let AnalogyMethod::SeqAdd(o) = &method {
                config.set("ordering", o);
            }
            config.set("method", method_name);
            config.set("topk", args.topk);

            let mut questions = Vec::new();
            for path in &args.dataset {
                questions.extend(parse_analogy(&read(path)?)?);
            }
            let report = analogy_eval(&space, &vocab, &questions, &method, args.topk)?;
            writeln!(csv, "category,questions,used,skipped_oov,correct,accuracy").unwrap();
            for (cat, s) in &report.per_category {
                writeln!(
                    csv,
                    "{cat},{},{},{},{},{}",
                    s.questions,
                    s.used,
                    s.skipped_oov,
                    s.correct,
                    s.accuracy()
                )
                .unwrap();
            }
            let t = &report.total;
            writeln!(csv, "total,{},{},{},{},{}", t.questions, t.used, t.skipped_oov, t.correct, t.accuracy())
                .unwrap();
        }
        "classify" => {
            config.set("split_seed", args.split_seed);
            config.set("train_frac", args.train_frac);
            config.set("valid_frac", args.valid_frac);
            config.set("sentiment", args.sentiment);
            writeln!(csv, "dataset,train_n,valid_n,test_n,chosen_l2,valid_accuracy,test_accuracy")
                .unwrap();
            let split =
                SplitSpec { train: args.train_frac, valid: args.valid_frac, seed: args.split_seed };
            let mut accs = Vec::new();
            for path in &args.dataset {
                let docs = parse_classify(&read(path)?, args.sentiment)?;
                let r = classify_eval(&space, &vocab, &docs, split)?;
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    dataset_name(path),
                    r.train_n,
                    r.valid_n,
                    r.test_n,
                    r.chosen_l2,
                    r.valid_accuracy,
                    r.test_accuracy
                )
                .unwrap();
                accs.push(r.test_accuracy);
            }
            if accs.len() > 1 {
                // Unweighted average across datasets.
                let mean = accs.iter().sum::<f64>() / accs.len() as f64;
                writeln!(csv, "average,,,,,,{mean}").unwrap();
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown task {other:?} (expected sim, analogy or classify)"
            )))
        }
    }

    atomic_write(&args.out, csv.as_bytes())?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            atomic_write(&parent.join("config.txt"), config.to_text().as_bytes())?;
        } else {
            atomic_write(Path::new("config.txt"), config.to_text().as_bytes())?;
        }
    }
    print!("{csv}");
    Ok(())
}
