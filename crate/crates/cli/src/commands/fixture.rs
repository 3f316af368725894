//! `dsaw fixture`: regenerate the bundled fixture files (the hand-built
//! four-word model, the planted-synonym corpus and the toy evaluation
//! datasets).

use crate::error::CliError;
use crate::store::{atomic_write, ModelDir};
use crate::FixtureArgs;
use dsaw_core::fixtures;
use std::fs;

pub fn run(args: FixtureArgs) -> Result<(), CliError> {
    fs::create_dir_all(&args.out)?;
    let (vocab, model) = fixtures::table1_model();
    ModelDir::new(args.out.join("table1")).save(&model, &vocab)?;

    atomic_write(
        &args.out.join("synonym-corpus.txt"),
        fixtures::synonym_corpus(args.seed, args.lines).as_bytes(),
    )?;
    atomic_write(&args.out.join("sim.tsv"), fixtures::table1_similarity_tsv().as_bytes())?;
    atomic_write(&args.out.join("analogy.txt"), fixtures::table1_analogy_txt().as_bytes())?;
    atomic_write(
        &args.out.join("classify.tsv"),
        fixtures::table1_classify_tsv(3, 120).as_bytes(),
    )?;
    eprintln!("fixtures written to {}", args.out.display());
    Ok(())
}
