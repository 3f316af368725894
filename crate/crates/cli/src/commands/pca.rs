//! `dsaw pca`: 2-D projections of word or phrase vectors.

use crate::config::ResolvedConfig;
use crate::error::CliError;
use crate::store::{atomic_write, ModelDir};
use crate::PcaArgs;
use dsaw_core::evalsuite::{aggregate_document, pca2, EmbeddingSpace};
use std::fmt::Write as _;
use std::fs;

pub fn run(args: PcaArgs) -> Result<(), CliError> {
    let (model, vocab) = ModelDir::new(&args.model).load()?;
    let space = EmbeddingSpace::from_model(&model, &vocab)?;

    let mut items: Vec<String> = Vec::new();
    if let Some(words) = &args.words {
        items.extend(words.split(',').map(|w| w.trim().to_string()).filter(|w| !w.is_empty()));
    }
    if let Some(path) = &args.input {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        items.extend(text.lines().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()));
    }
    if items.len() < 3 {
        return Err(CliError::Usage(
            "pca needs at least 3 items via --words and/or --input".into(),
        ));
    }
    let mut vectors = Vec::new();
    for item in &items {
        let words: Vec<String> = item.split_whitespace().map(|w| w.to_string()).collect();
        if words.len() == 1 {
            match vocab.id(&words[0]) {
                Some(id) => vectors.push(space.vector(id).to_vec()),
                None => {
                    return Err(CliError::Data(format!("word {:?} not in vocabulary", words[0])))
                }
            }
        } else {
            vectors.push(aggregate_document(&words, &space, &vocab));
        }
    }
    let pca = pca2(&vectors)?;

    let mut csv = String::from("item,x,y\n");
    for (item, (x, y)) in items.iter().zip(&pca.projections) {
        writeln!(csv, "{item},{x},{y}").unwrap();
    }
    atomic_write(&args.out, csv.as_bytes())?;
    let mut config = ResolvedConfig::new();
    config.set("model_dir", args.model.display());
    config.set("items", items.len());
    config.set("variance_1", pca.eigenvalues[0]);
    config.set("variance_2", pca.eigenvalues[1]);
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        atomic_write(&parent.join("config.txt"), config.to_text().as_bytes())?;
    }
    print!("{csv}");
    Ok(())
}
