//! Model parameter container and its versioned binary serialization.

use super::batchnorm::BatchNormState;
use super::{init_matrix, InitDist, NnError};
use rand::Rng;
use std::io::{Read, Write};

const MAGIC: &[u8; 8] = b"DSAWMODL";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVariant {
    Cbow,
    Dsaw,
    Sg,
    SgBtl,
}

impl ModelVariant {
    pub fn parse(s: &str) -> Option<ModelVariant> {
        match s {
            "cbow" => Some(ModelVariant::Cbow),
            "dsaw" => Some(ModelVariant::Dsaw),
            "sg" => Some(ModelVariant::Sg),
            "sgbtl" => Some(ModelVariant::SgBtl),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Cbow => "cbow",
            ModelVariant::Dsaw => "dsaw",
            ModelVariant::Sg => "sg",
            ModelVariant::SgBtl => "sgbtl",
        }
    }

    /// Discrete variants carry a BatchNorm state and support effect
    /// extraction; the continuous ones carry a context matrix instead.
    pub fn is_discrete(self) -> bool {
        matches!(self, ModelVariant::Dsaw | ModelVariant::SgBtl)
    }

    fn tag(self) -> u8 {
        match self {
            ModelVariant::Cbow => 0,
            ModelVariant::Dsaw => 1,
            ModelVariant::Sg => 2,
            ModelVariant::SgBtl => 3,
        }
    }

    fn from_tag(t: u8) -> Option<ModelVariant> {
        match t {
            0 => Some(ModelVariant::Cbow),
            1 => Some(ModelVariant::Dsaw),
            2 => Some(ModelVariant::Sg),
            3 => Some(ModelVariant::SgBtl),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Embedding matrices plus BatchNorm state for one model variant.
/// `effect` is the V x E matrix W; the continuous variants additionally hold
/// the context matrix W'.
#[derive(Debug, Clone)]
pub struct ModelParameters {
    pub variant: ModelVariant,
    pub vocab_size: usize,
    pub dim: usize,
    pub effect: Vec<f64>,
    pub context: Option<Vec<f64>>,
    pub bn: Option<BatchNormState>,
    pub vocab_hash: u64,
}

impl ModelParameters {
    /// Fresh parameters with the variant's default initialization: Logistic
    /// for the discrete models, the word2vec uniform scheme (with a zero
    /// context matrix) for the continuous ones.
    pub fn init<R: Rng>(
        variant: ModelVariant,
        vocab_size: usize,
        dim: usize,
        affine: bool,
        rng: &mut R,
    ) -> ModelParameters {
        let (effect, context, bn) = if variant.is_discrete() {
            let w = init_matrix(vocab_size, dim, InitDist::Logistic, rng);
            (w, None, Some(BatchNormState::new(dim, affine)))
        } else {
            let w = init_matrix(vocab_size, dim, InitDist::Uniform, rng);
            (w, Some(vec![0.0; vocab_size * dim]), None)
        };
        ModelParameters { variant, vocab_size, dim, effect, context, bn, vocab_hash: 0 }
    }

    pub fn effect_row(&self, id: u32) -> &[f64] {
        let d = self.dim;
        &self.effect[id as usize * d..(id as usize + 1) * d]
    }

    pub fn context_row(&self, id: u32) -> &[f64] {
        let d = self.dim;
        let c = self.context.as_ref().expect("variant has no context matrix");
        &c[id as usize * d..(id as usize + 1) * d]
    }

    pub fn is_finite(&self) -> bool {
        self.effect.iter().all(|v| v.is_finite())
            && self.context.iter().flatten().all(|v| v.is_finite())
            && self.bn.as_ref().map_or(true, |bn| {
                bn.gamma.iter().all(|v| v.is_finite())
                    && bn.beta.iter().all(|v| v.is_finite())
                    && bn.running_mean.iter().all(|v| v.is_finite())
                    && bn.running_var.iter().all(|v| v.is_finite())
            })
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<(), NnError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.variant.tag()])?;
        let mut flags = 0u8;
        if self.context.is_some() {
            flags |= 1;
        }
        if self.bn.is_some() {
            flags |= 2;
        }
        if self.bn.as_ref().is_some_and(|b| b.affine) {
            flags |= 4;
        }
        w.write_all(&[flags])?;
        w.write_all(&(self.vocab_size as u64).to_le_bytes())?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        w.write_all(&self.vocab_hash.to_le_bytes())?;
        write_f32s(&mut w, &self.effect)?;
        if let Some(c) = &self.context {
            write_f32s(&mut w, c)?;
        }
        if let Some(bn) = &self.bn {
            w.write_all(&bn.momentum.to_le_bytes())?;
            w.write_all(&bn.epsilon.to_le_bytes())?;
            write_f32s(&mut w, &bn.gamma)?;
            write_f32s(&mut w, &bn.beta)?;
            write_f32s(&mut w, &bn.running_mean)?;
            write_f32s(&mut w, &bn.running_var)?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<ModelParameters, NnError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(NnError::Format("bad magic; not a model file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(NnError::Format(format!("unsupported model version {version}")));
        }
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte)?;
        let variant = ModelVariant::from_tag(byte[0])
            .ok_or_else(|| NnError::Format(format!("unknown variant tag {}", byte[0])))?;
        r.read_exact(&mut byte)?;
        let flags = byte[0];
        let vocab_size = read_u64(&mut r)? as usize;
        let dim = read_u64(&mut r)? as usize;
        let vocab_hash = read_u64(&mut r)?;
        let effect = read_f32s(&mut r, vocab_size * dim)?;
        let context =
            if flags & 1 != 0 { Some(read_f32s(&mut r, vocab_size * dim)?) } else { None };
        let bn = if flags & 2 != 0 {
            let momentum = read_f64(&mut r)?;
            let epsilon = read_f64(&mut r)?;
            let gamma = read_f32s(&mut r, dim)?;
            let beta = read_f32s(&mut r, dim)?;
            let running_mean = read_f32s(&mut r, dim)?;
            let running_var = read_f32s(&mut r, dim)?;
            Some(BatchNormState {
                gamma,
                beta,
                running_mean,
                running_var,
                momentum,
                epsilon,
                affine: flags & 4 != 0,
            })
        } else {
            None
        };
        Ok(ModelParameters { variant, vocab_size, dim, effect, context, bn, vocab_hash })
    }

    /// Loads and verifies the vocabulary pairing in one step.
    pub fn load_checked<R: Read>(r: R, vocab_hash: u64) -> Result<ModelParameters, NnError> {
        let m = ModelParameters::load(r)?;
        if m.vocab_hash != vocab_hash {
            return Err(NnError::VocabHashMismatch);
        }
        Ok(m)
    }
}

fn write_f32s<W: Write>(w: &mut W, vals: &[f64]) -> std::io::Result<()> {
    for &v in vals {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>, NnError> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NnError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, NnError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, NnError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
