//! Numeric primitives for the discrete models: Binary Concrete activation
//! with Logistic noise, Batch Normalization, the Back-to-Logit step,
//! the temperature schedule, and weight initialization.

mod batchnorm;
mod model;

pub use batchnorm::{BatchNormState, BnCache, BnMode};
pub use model::{ModelParameters, ModelVariant};

use crate::bits::BitVec;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("batch normalization in train mode needs a batch of at least 2, got {0}")]
    BatchTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("model file: {0}")]
    Format(String),
    #[error("model file was written for a different vocabulary (hash mismatch)")]
    VocabHashMismatch,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log u - log(1-u) for the given uniform draw, guarded away from {0,1}.
pub fn logistic_from_uniform(u: f64) -> f64 {
    let u = u.clamp(f64::EPSILON, 1.0 - f64::EPSILON);
    u.ln() - (1.0 - u).ln()
}

/// One draw from Logistic(0,1).
pub fn sample_logistic<R: Rng>(rng: &mut R) -> f64 {
    logistic_from_uniform(rng.gen::<f64>())
}

/// Binary Concrete activation: sigmoid((logit + noise) / tau). The noise is
/// always supplied by the caller so gradient checks can freeze it.
pub fn binary_concrete(logit: f64, tau: f64, noise: f64) -> f64 {
    assert!(tau > 0.0, "temperature must be positive");
    sigmoid((logit + noise) / tau)
}

/// The tau -> 0 limit of [`binary_concrete`] with zero noise.
pub fn hard_step(logit: f64) -> bool {
    logit > 0.0
}

/// One Back-to-Logit step on a batch of relaxed states:
/// bc(bn(state) + effect) elementwise, with per-element noise.
pub fn btl_apply(
    states: &[Vec<f64>],
    effects: &[Vec<f64>],
    bn: &mut BatchNormState,
    tau: f64,
    noise: &[Vec<f64>],
    mode: BnMode,
) -> Result<Vec<Vec<f64>>, NnError> {
    let normed = bn.forward(states, mode)?;
    let out = normed
        .iter()
        .zip(effects)
        .zip(noise)
        .map(|((y, e), n)| {
            y.iter()
                .zip(e)
                .zip(n)
                .map(|((&y, &e), &n)| binary_concrete(y + e, tau, n))
                .collect()
        })
        .collect();
    Ok(out)
}

/// Deterministic BTL step on a binary state: eval-mode batch norm, zero
/// noise, tau -> 0. This is the transition function the effect extraction
/// and Theorem-style properties are stated over.
pub fn btl_apply_hard(state: &BitVec, effect_row: &[f64], bn: &BatchNormState) -> BitVec {
    assert_eq!(state.len(), effect_row.len(), "state/effect width mismatch");
    let (scale, shift) = bn.eval_scale_shift();
    let mut out = BitVec::zeros(state.len());
    for j in 0..state.len() {
        let x = if state.get(j) { 1.0 } else { 0.0 };
        if hard_step(scale[j] * x + shift[j] + effect_row[j]) {
            out.set(j, true);
        }
    }
    out
}

/// Stepped exponential annealing of the Binary Concrete temperature.
#[derive(Debug, Clone)]
pub struct AnnealSchedule {
    pub tau_start: f64,
    pub tau_end: f64,
    /// Epoch at which annealing begins.
    pub anneal_start: f64,
    pub total_epochs: f64,
    /// Width of one temperature step, in epochs.
    pub step: f64,
}

impl AnnealSchedule {
    pub fn new(anneal_start: f64, total_epochs: f64) -> AnnealSchedule {
        AnnealSchedule { tau_start: 5.0, tau_end: 0.7, anneal_start, total_epochs, step: 0.2 }
    }

    /// Temperature at epoch position `t`. Flat at `tau_start` before the
    /// anneal start, then decays in `step`-wide stages so that the last stage
    /// of training reaches `tau_end`; clamped there as a floor.
    pub fn temperature(&self, t: f64) -> f64 {
        if t < self.anneal_start {
            return self.tau_start;
        }
        let denom = self.total_epochs - self.anneal_start;
        if denom <= 0.0 {
            return self.tau_end;
        }
        // The +1e-9 keeps stage boundaries stable against f64 division noise.
        let stage = ((t - self.anneal_start) / self.step + 1e-9).floor();
        let progress = stage * self.step / denom;
        let tau = self.tau_start * (progress * (self.tau_end / self.tau_start).ln()).exp();
        tau.max(self.tau_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitDist {
    /// Logistic(0,1) per entry; the default for the discrete models.
    Logistic,
    /// Standard normal per entry.
    Gaussian,
    /// U(-0.5, 0.5) / cols, the word2vec convention for input embeddings.
    Uniform,
}

/// Row-major `rows x cols` matrix with i.i.d. entries from `dist`.
pub fn init_matrix<R: Rng>(rows: usize, cols: usize, dist: InitDist, rng: &mut R) -> Vec<f64> {
    let n = rows * cols;
    match dist {
        InitDist::Logistic => (0..n).map(|_| sample_logistic(rng)).collect(),
        InitDist::Gaussian => (0..n)
            .map(|_| {
                // Box-Muller; keeps us independent of distribution crates.
                let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect(),
        InitDist::Uniform => {
            let scale = 1.0 / cols as f64;
            (0..n).map(|_| (rng.gen::<f64>() - 0.5) * scale).collect()
        }
    }
}
