//! Model-directory layout and atomic file writes. A trained model lives in
//! a directory holding model.bin, vocab.tsv, metrics.csv and config.txt;
//! the model file embeds the vocabulary hash and loading re-checks it.

use crate::error::CliError;
use dsaw_core::corpus::Vocabulary;
use dsaw_core::nncore::ModelParameters;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub struct ModelDir {
    pub dir: PathBuf,
}

impl ModelDir {
    pub fn new(dir: impl Into<PathBuf>) -> ModelDir {
        ModelDir { dir: dir.into() }
    }

    pub fn model_path(&self) -> PathBuf {
        self.dir.join("model.bin")
    }

    pub fn vocab_path(&self) -> PathBuf {
        self.dir.join("vocab.tsv")
    }

    pub fn save(&self, model: &ModelParameters, vocab: &Vocabulary) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir)?;
        let mut vocab_bytes = Vec::new();
        vocab.save(&mut vocab_bytes)?;
        atomic_write(&self.vocab_path(), &vocab_bytes)?;
        let mut model_bytes = Vec::new();
        model.save(&mut model_bytes)?;
        atomic_write(&self.model_path(), &model_bytes)?;
        Ok(())
    }

    pub fn load(&self) -> Result<(ModelParameters, Vocabulary), CliError> {
        let vocab_file = fs::File::open(self.vocab_path()).map_err(|e| {
            CliError::Data(format!("cannot open {}: {e}", self.vocab_path().display()))
        })?;
        let vocab = Vocabulary::load(BufReader::new(vocab_file), 1)?;
        let model_file = fs::File::open(self.model_path()).map_err(|e| {
            CliError::Data(format!("cannot open {}: {e}", self.model_path().display()))
        })?;
        let model = ModelParameters::load_checked(
            BufReader::new(model_file),
            vocab.integrity_hash(),
        )?;
        Ok((model, vocab))
    }
}
