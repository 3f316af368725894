//! Losses and hand-derived backward passes for the discrete variants.
//!
//! Both models run Back-to-Logit steps bc(bn(state) + W_row) over relaxed
//! states, score shifted (state - 0.5) dot products with negative sampling,
//! and regularize every posterior toward Bernoulli(0.5) with a beta-scaled
//! KL term. All randomness (the Bernoulli(0.5) initial states and the
//! Logistic noise of every Binary Concrete application) enters through
//! [`BtlNoise`] so gradient checks can freeze it.

use super::{log_sigmoid, softplus, Gradients, LossBreakdown, TrainError};
use crate::corpus::ContextSample;
use crate::nncore::{sample_logistic, sigmoid, BatchNormState, BnCache, ModelParameters, ModelVariant};
use rand::Rng;

/// Frozen randomness for one batch of BTL forward passes.
/// For DSAW: `chain` holds one tensor per context position and `negatives`
/// one per negative sample. For SG-BTL: `chain` is per context position and
/// `negatives` is indexed position-major as j * K + k; `center` is the
/// target's noise in both cases.
#[derive(Debug, Clone)]
pub struct BtlNoise {
    /// Bernoulli(0.5) initial states, one row per sample, values in {0, 1}.
    pub s0: Vec<Vec<f64>>,
    pub chain: Vec<Vec<Vec<f64>>>,
    pub center: Vec<Vec<f64>>,
    pub negatives: Vec<Vec<Vec<f64>>>,
}

impl BtlNoise {
    pub fn sample<R: Rng>(
        batch: usize,
        dim: usize,
        n_chain: usize,
        n_negative: usize,
        rng: &mut R,
    ) -> BtlNoise {
        let s0 = (0..batch)
            .map(|_| (0..dim).map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut logistic_tensor = |n: usize| -> Vec<Vec<Vec<f64>>> {
            (0..n)
                .map(|_| {
                    (0..batch)
                        .map(|_| (0..dim).map(|_| sample_logistic(rng)).collect())
                        .collect()
                })
                .collect()
        };
        let chain = logistic_tensor(n_chain);
        let center = logistic_tensor(1).pop().unwrap();
        let negatives = logistic_tensor(n_negative);
        BtlNoise { s0, chain, center, negatives }
    }
}

/// One observed batch of BatchNorm inputs, applied to the running statistics
/// by the train loop after the optimizer step.
#[derive(Debug, Clone)]
pub struct BnUpdate {
    pub mean: Vec<f64>,
    pub var_biased: Vec<f64>,
    pub batch: usize,
}

/// KL(Bernoulli(sigmoid(l)) || Bernoulli(0.5)), computed stably:
/// ln 2 - softplus(-l) - (1 - sigmoid(l)) * l.
fn kl_term(logit: f64) -> f64 {
    std::f64::consts::LN_2 - softplus(-logit) - (1.0 - sigmoid(logit)) * logit
}

/// d kl_term / d logit = l * q * (1 - q).
fn kl_term_grad(logit: f64) -> f64 {
    let q = sigmoid(logit);
    logit * q * (1.0 - q)
}

fn shifted_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - 0.5) * (y - 0.5)).sum()
}

/// logits = bn_out + W[word per sample]; out = sigmoid((logits + noise)/tau).
fn apply_effects(
    params: &ModelParameters,
    bn_out: &[Vec<f64>],
    words: &[u32],
    noise: &[Vec<f64>],
    tau: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let dim = params.dim;
    let mut logits = Vec::with_capacity(bn_out.len());
    let mut out = Vec::with_capacity(bn_out.len());
    for (b, y) in bn_out.iter().enumerate() {
        let row = params.effect_row(words[b]);
        let l: Vec<f64> = (0..dim).map(|j| y[j] + row[j]).collect();
        let o: Vec<f64> = (0..dim).map(|j| sigmoid((l[j] + noise[b][j]) / tau)).collect();
        logits.push(l);
        out.push(o);
    }
    (logits, out)
}

/// d(loss head)/d(out) -> d/d(logits), adding the KL contribution when
/// `kl_beta` is nonzero. Works on ascent gradients of the objective.
fn backprop_bc(
    d_out: &[Vec<f64>],
    out: &[Vec<f64>],
    logits: &[Vec<f64>],
    tau: f64,
    kl_beta: f64,
) -> Vec<Vec<f64>> {
    d_out
        .iter()
        .zip(out)
        .zip(logits)
        .map(|((dr, or), lr)| {
            (0..or.len())
                .map(|j| {
                    let bc = dr[j] * or[j] * (1.0 - or[j]) / tau;
                    bc - kl_beta * kl_term_grad(lr[j])
                })
                .collect()
        })
        .collect()
}

struct ChainRec {
    /// None for the first step, which shares the s0 normalization.
    cache: Option<BnCache>,
    logits: Vec<Vec<f64>>,
    out: Vec<Vec<f64>>,
}

struct DsawForward {
    cache0: BnCache,
    chain: Vec<ChainRec>,
    center_logits: Vec<Vec<f64>>,
    center_out: Vec<Vec<f64>>,
    neg_logits: Vec<Vec<Vec<f64>>>,
    neg_out: Vec<Vec<Vec<f64>>>,
    updates: Vec<BnUpdate>,
    breakdown: LossBreakdown,
}

fn dsaw_forward(
    samples: &[ContextSample],
    negatives: &[Vec<u32>],
    params: &ModelParameters,
    tau: f64,
    beta: f64,
    noise: &BtlNoise,
) -> Result<DsawForward, TrainError> {
    if params.variant != ModelVariant::Dsaw {
        return Err(TrainError::VariantMismatch { expected: "dsaw", got: params.variant });
    }
    let bn = params.bn.as_ref().expect("discrete model carries bn");
    let batch = samples.len();
    let n_ctx = samples[0].context.len();
    assert_eq!(noise.s0.len(), batch, "noise batch mismatch");
    assert_eq!(noise.chain.len(), n_ctx, "chain noise mismatch");

    let (y0, cache0, mean0, var0) = bn.normalize_batch(&noise.s0)?;
    let mut updates = vec![BnUpdate { mean: mean0, var_biased: var0, batch }];

    // Recurrent pass over the context words in order: positions i-c..i-1
    // then i+1..i+c, each continuing from the previous state.
    let mut chain: Vec<ChainRec> = Vec::with_capacity(n_ctx);
    for t in 0..n_ctx {
        let words: Vec<u32> = samples.iter().map(|s| s.context[t]).collect();
        let (bn_out, cache) = if t == 0 {
            (y0.clone(), None)
        } else {
            let prev = &chain[t - 1].out;
            let (y, c, m, v) = bn.normalize_batch(prev)?;
            updates.push(BnUpdate { mean: m, var_biased: v, batch });
            (y, Some(c))
        };
        let (logits, out) = apply_effects(params, &bn_out, &words, &noise.chain[t], tau);
        chain.push(ChainRec { cache, logits, out });
    }

    // The center and every negative are applied to the fresh s0.
    let centers: Vec<u32> = samples.iter().map(|s| s.center).collect();
    let (center_logits, center_out) = apply_effects(params, &y0, &centers, &noise.center, tau);
    let k = negatives[0].len();
    let mut neg_logits = Vec::with_capacity(k);
    let mut neg_out = Vec::with_capacity(k);
    for ki in 0..k {
        let words: Vec<u32> = negatives.iter().map(|n| n[ki]).collect();
        let (l, o) = apply_effects(params, &y0, &words, &noise.negatives[ki], tau);
        neg_logits.push(l);
        neg_out.push(o);
    }

    let final_out = &chain[n_ctx - 1].out;
    let mut positive = 0.0;
    let mut negative = 0.0;
    for b in 0..batch {
        positive += log_sigmoid(shifted_dot(&final_out[b], &center_out[b]));
        for ki in 0..k {
            negative += log_sigmoid(-shifted_dot(&final_out[b], &neg_out[ki][b]));
        }
    }
    // One KL term per Binary Concrete posterior on the path: each context
    // state plus the center; negatives carry none.
    let mut kl = 0.0;
    for rec in &chain {
        kl += rec.logits.iter().flatten().map(|&l| kl_term(l)).sum::<f64>();
    }
    kl += center_logits.iter().flatten().map(|&l| kl_term(l)).sum::<f64>();

    let n = batch as f64;
    let breakdown = LossBreakdown::new(positive / n, negative / n, kl / n, beta);
    Ok(DsawForward {
        cache0,
        chain,
        center_logits,
        center_out,
        neg_logits,
        neg_out,
        updates,
        breakdown,
    })
}

pub fn dsaw_loss(
    samples: &[ContextSample],
    negatives: &[Vec<u32>],
    params: &ModelParameters,
    tau: f64,
    beta: f64,
    noise: &BtlNoise,
) -> Result<LossBreakdown, TrainError> {
    dsaw_forward(samples, negatives, params, tau, beta, noise).map(|f| f.breakdown)
}

/// Full forward/backward. Returns the loss terms, the gradients of the
/// negated batch mean, and the BatchNorm batch statistics observed (in
/// application order) for the running-statistics update.
pub fn dsaw_loss_grad(
    samples: &[ContextSample],
    negatives: &[Vec<u32>],
    params: &ModelParameters,
    tau: f64,
    beta: f64,
    noise: &BtlNoise,
) -> Result<(LossBreakdown, Gradients, Vec<BnUpdate>), TrainError> {
    let fwd = dsaw_forward(samples, negatives, params, tau, beta, noise)?;
    let bn = params.bn.as_ref().expect("discrete model carries bn");
    let batch = samples.len();
    let dim = params.dim;
    let n_ctx = samples[0].context.len();
    let k = negatives[0].len();

    let final_out = &fwd.chain[n_ctx - 1].out;
    let mut d_final = vec![vec![0.0; dim]; batch];
    let mut d_center = vec![vec![0.0; dim]; batch];
    let mut d_neg = vec![vec![vec![0.0; dim]; batch]; k];
    for b in 0..batch {
        let a = sigmoid(-shifted_dot(&final_out[b], &fwd.center_out[b]));
        for j in 0..dim {
            d_final[b][j] += a * (fwd.center_out[b][j] - 0.5);
            d_center[b][j] += a * (final_out[b][j] - 0.5);
        }
        for ki in 0..k {
            let g = -sigmoid(shifted_dot(&final_out[b], &fwd.neg_out[ki][b]));
            for j in 0..dim {
                d_final[b][j] += g * (fwd.neg_out[ki][b][j] - 0.5);
                d_neg[ki][b][j] += g * (final_out[b][j] - 0.5);
            }
        }
    }

    let mut grads = Gradients::default();
    let mut d_gamma = vec![0.0; dim];
    let mut d_beta = vec![0.0; dim];
    let mut d_y0 = vec![vec![0.0; dim]; batch];

    // Chain backward, last step first.
    let mut d_out = d_final;
    for t in (0..n_ctx).rev() {
        let rec = &fwd.chain[t];
        let d_logits = backprop_bc(&d_out, &rec.out, &rec.logits, tau, beta);
        for (b, sample) in samples.iter().enumerate() {
            grads.add_effect_row(sample.context[t], &d_logits[b]);
        }
        match &rec.cache {
            Some(cache) => {
                let (dx, dg, db) = bn.backward(cache, &d_logits);
                accumulate(&mut d_gamma, &dg);
                accumulate(&mut d_beta, &db);
                d_out = dx;
            }
            None => {
                add_into(&mut d_y0, &d_logits);
                d_out = Vec::new();
            }
        }
    }

    // Center branch.
    let d_logits = backprop_bc(&d_center, &fwd.center_out, &fwd.center_logits, tau, beta);
    for (b, sample) in samples.iter().enumerate() {
        grads.add_effect_row(sample.center, &d_logits[b]);
    }
    add_into(&mut d_y0, &d_logits);

    // Negative branches (no KL).
    for ki in 0..k {
        let d_logits = backprop_bc(&d_neg[ki], &fwd.neg_out[ki], &fwd.neg_logits[ki], tau, 0.0);
        for (b, negs) in negatives.iter().enumerate() {
            grads.add_effect_row(negs[ki], &d_logits[b]);
        }
        add_into(&mut d_y0, &d_logits);
    }

    // Shared normalization of s0; the input gradient dies at the data.
    let (_, dg, db) = bn.backward(&fwd.cache0, &d_y0);
    accumulate(&mut d_gamma, &dg);
    accumulate(&mut d_beta, &db);

    finish_gradients(&mut grads, d_gamma, d_beta, bn, batch);
    Ok((fwd.breakdown, grads, fwd.updates))
}

struct SgBtlForward {
    cache0: BnCache,
    target_logits: Vec<Vec<f64>>,
    target_out: Vec<Vec<f64>>,
    ctx_logits: Vec<Vec<Vec<f64>>>,
    ctx_out: Vec<Vec<Vec<f64>>>,
    neg_logits: Vec<Vec<Vec<f64>>>,
    neg_out: Vec<Vec<Vec<f64>>>,
    updates: Vec<BnUpdate>,
    breakdown: LossBreakdown,
}

fn sgbtl_forward(
    samples: &[ContextSample],
    negatives: &[Vec<Vec<u32>>],
    params: &ModelParameters,
    tau: f64,
    beta: f64,
    noise: &BtlNoise,
) -> Result<SgBtlForward, TrainError> {
    if params.variant != ModelVariant::SgBtl {
        return Err(TrainError::VariantMismatch { expected: "sgbtl", got: params.variant });
    }
    let bn = params.bn.as_ref().expect("discrete model carries bn");
    let batch = samples.len();
    let n_ctx = samples[0].context.len();
    let k = negatives[0][0].len();

    // Every application starts from the shared s0, so one normalization
    // serves the target, the context words and all negatives.
    let (y0, cache0, mean0, var0) = bn.normalize_batch(&noise.s0)?;
    let updates = vec![BnUpdate { mean: mean0, var_biased: var0, batch }];

    let centers: Vec<u32> = samples.iter().map(|s| s.center).collect();
    let (target_logits, target_out) = apply_effects(params, &y0, &centers, &noise.center, tau);

    let mut ctx_logits = Vec::with_capacity(n_ctx);
    let mut ctx_out = Vec::with_capacity(n_ctx);
    let mut neg_logits = Vec::with_capacity(n_ctx * k);
    let mut neg_out = Vec::with_capacity(n_ctx * k);
    for j in 0..n_ctx {
        let words: Vec<u32> = samples.iter().map(|s| s.context[j]).collect();
        let (l, o) = apply_effects(params, &y0, &words, &noise.chain[j], tau);
        ctx_logits.push(l);
        ctx_out.push(o);
        for ki in 0..k {
            let words: Vec<u32> = negatives.iter().map(|n| n[j][ki]).collect();
            let (l, o) = apply_effects(params, &y0, &words, &noise.negatives[j * k + ki], tau);
            neg_logits.push(l);
            neg_out.push(o);
        }
    }

    let mut positive = 0.0;
    let mut negative = 0.0;
    for b in 0..batch {
        for j in 0..n_ctx {
            positive += log_sigmoid(shifted_dot(&target_out[b], &ctx_out[j][b]));
            for ki in 0..k {
                negative +=
                    log_sigmoid(-shifted_dot(&target_out[b], &neg_out[j * k + ki][b]));
            }
        }
    }
    let mut kl = target_logits.iter().flatten().map(|&l| kl_term(l)).sum::<f64>();
    for l in &ctx_logits {
        kl += l.iter().flatten().map(|&l| kl_term(l)).sum::<f64>();
    }

    let n = batch as f64;
    let breakdown = LossBreakdown::new(positive / n, negative / n, kl / n, beta);
    Ok(SgBtlForward {
        cache0,
        target_logits,
        target_out,
        ctx_logits,
        ctx_out,
        neg_logits,
        neg_out,
        updates,
        breakdown,
    })
}

pub fn sgbtl_loss(
    samples: &[ContextSample],
    negatives: &[Vec<Vec<u32>>],
    params: &ModelParameters,
    tau: f64,
    beta: f64,
    noise: &BtlNoise,
) -> Result<LossBreakdown, TrainError> {
    sgbtl_forward(samples, negatives, params, tau, beta, noise).map(|f| f.breakdown)
}

pub fn sgbtl_loss_grad(
    samples: &[ContextSample],
    negatives: &[Vec<Vec<u32>>],
    params: &ModelParameters,
    tau: f64,
    beta: f64,
    noise: &BtlNoise,
) -> Result<(LossBreakdown, Gradients, Vec<BnUpdate>), TrainError> {
    let fwd = sgbtl_forward(samples, negatives, params, tau, beta, noise)?;
    let bn = params.bn.as_ref().expect("discrete model carries bn");
    let batch = samples.len();
    let dim = params.dim;
    let n_ctx = samples[0].context.len();
    let k = negatives[0][0].len();

    let mut d_target = vec![vec![0.0; dim]; batch];
    let mut d_ctx = vec![vec![vec![0.0; dim]; batch]; n_ctx];
    let mut d_neg = vec![vec![vec![0.0; dim]; batch]; n_ctx * k];
    for b in 0..batch {
        for j in 0..n_ctx {
            let a = sigmoid(-shifted_dot(&fwd.target_out[b], &fwd.ctx_out[j][b]));
            for e in 0..dim {
                d_target[b][e] += a * (fwd.ctx_out[j][b][e] - 0.5);
                d_ctx[j][b][e] += a * (fwd.target_out[b][e] - 0.5);
            }
            for ki in 0..k {
                let idx = j * k + ki;
                let g = -sigmoid(shifted_dot(&fwd.target_out[b], &fwd.neg_out[idx][b]));
                for e in 0..dim {
                    d_target[b][e] += g * (fwd.neg_out[idx][b][e] - 0.5);
                    d_neg[idx][b][e] += g * (fwd.target_out[b][e] - 0.5);
                }
            }
        }
    }

    let mut grads = Gradients::default();
    let mut d_y0 = vec![vec![0.0; dim]; batch];

    let d_logits = backprop_bc(&d_target, &fwd.target_out, &fwd.target_logits, tau, beta);
    for (b, sample) in samples.iter().enumerate() {
        grads.add_effect_row(sample.center, &d_logits[b]);
    }
    add_into(&mut d_y0, &d_logits);

    for j in 0..n_ctx {
        let d_logits = backprop_bc(&d_ctx[j], &fwd.ctx_out[j], &fwd.ctx_logits[j], tau, beta);
        for (b, sample) in samples.iter().enumerate() {
            grads.add_effect_row(sample.context[j], &d_logits[b]);
        }
        add_into(&mut d_y0, &d_logits);
        for ki in 0..k {
            let idx = j * k + ki;
            let d_logits =
                backprop_bc(&d_neg[idx], &fwd.neg_out[idx], &fwd.neg_logits[idx], tau, 0.0);
            for (b, negs) in negatives.iter().enumerate() {
                grads.add_effect_row(negs[j][ki], &d_logits[b]);
            }
            add_into(&mut d_y0, &d_logits);
        }
    }

    let (_, d_gamma, d_beta) = bn.backward(&fwd.cache0, &d_y0);
    finish_gradients(&mut grads, d_gamma, d_beta, bn, batch);
    Ok((fwd.breakdown, grads, fwd.updates))
}

fn accumulate(acc: &mut [f64], add: &[f64]) {
    for (a, b) in acc.iter_mut().zip(add) {
        *a += b;
    }
}

fn add_into(acc: &mut [Vec<f64>], add: &[Vec<f64>]) {
    for (ar, br) in acc.iter_mut().zip(add) {
        accumulate(ar, br);
    }
}

/// Converts accumulated ascent gradients (batch sums) into the gradients of
/// the negated batch mean, attaching gamma/beta only for affine models.
fn finish_gradients(
    grads: &mut Gradients,
    d_gamma: Vec<f64>,
    d_beta: Vec<f64>,
    bn: &BatchNormState,
    batch: usize,
) {
    if bn.affine {
        grads.gamma = Some(d_gamma);
        grads.beta = Some(d_beta);
    }
    grads.scale(-1.0 / batch as f64);
}
