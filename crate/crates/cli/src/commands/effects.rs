//! `dsaw effects`: export the effect table and per-word densities.

use crate::config::ResolvedConfig;
use crate::error::CliError;
use crate::store::{atomic_write, ModelDir};
use crate::EffectsArgs;
use dsaw_core::algebra::EffectTable;
use dsaw_core::evalsuite::{effect_density, write_density_csv};
use std::fs;

pub fn run(args: EffectsArgs) -> Result<(), CliError> {
    let (model, vocab) = ModelDir::new(&args.model).load()?;
    if !model.variant.is_discrete() {
        return Err(CliError::Usage(format!(
            "effect extraction requires a discrete model (dsaw or sgbtl), got {}",
            model.variant
        )));
    }
    let table = EffectTable::extract(&model, &vocab)?;
    fs::create_dir_all(&args.out)?;

    let mut effects = Vec::new();
    table.export(&vocab, &mut effects)?;
    atomic_write(&args.out.join("effects.tsv"), &effects)?;

    let densities = effect_density(&table);
    let mut density = Vec::new();
    write_density_csv(&vocab, &densities, &mut density)?;
    atomic_write(&args.out.join("density.csv"), &density)?;

    let mut config = ResolvedConfig::new();
    config.set("model_dir", args.model.display());
    config.set("width", table.width());
    atomic_write(&args.out.join("config.txt"), config.to_text().as_bytes())?;
    eprintln!("wrote effects.tsv and density.csv to {}", args.out.display());
    Ok(())
}
