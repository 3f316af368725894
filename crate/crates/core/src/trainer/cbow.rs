//! Negative-sampling losses for the continuous variants. CBOW predicts the
//! center from the summed context; SkipGram scores the target against each
//! context word individually.

use super::{log_sigmoid, Gradients, LossBreakdown, TrainError};
use crate::corpus::ContextSample;
use crate::nncore::{sigmoid, ModelParameters, ModelVariant};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (r, v) in acc.iter_mut().zip(x) {
        *r += a * v;
    }
}

pub fn cbow_loss(
    samples: &[ContextSample],
    negatives: &[Vec<u32>],
    params: &ModelParameters,
) -> Result<LossBreakdown, TrainError> {
    cbow_loss_grad(samples, negatives, params).map(|(b, _)| b)
}

/// Loss log s(e.W'_x) + sum_k log s(-e.W'_r) with e the context-row sum, and
/// the gradients of its negated batch mean.
pub fn cbow_loss_grad(
    samples: &[ContextSample],
    negatives: &[Vec<u32>],
    params: &ModelParameters,
) -> Result<(LossBreakdown, Gradients), TrainError> {
    if params.variant != ModelVariant::Cbow {
        return Err(TrainError::VariantMismatch { expected: "cbow", got: params.variant });
    }
    let dim = params.dim;
    let mut grads = Gradients::default();
    let mut positive = 0.0;
    let mut negative = 0.0;

    for (sample, negs) in samples.iter().zip(negatives) {
        let mut e = vec![0.0; dim];
        for &w in &sample.context {
            axpy(&mut e, 1.0, params.effect_row(w));
        }
        let mut d_e = vec![0.0; dim];

        let w_pos = params.context_row(sample.center);
        let d_pos = dot(&e, w_pos);
        positive += log_sigmoid(d_pos);
        let a = sigmoid(-d_pos); // d log s(x) / dx
        axpy(&mut d_e, a, w_pos);
        let mut d_row = vec![0.0; dim];
        axpy(&mut d_row, a, &e);
        grads.add_context_row(sample.center, &d_row);

        for &r in negs {
            let w_neg = params.context_row(r);
            let d_neg = dot(&e, w_neg);
            negative += log_sigmoid(-d_neg);
            let b = -sigmoid(d_neg);
            axpy(&mut d_e, b, w_neg);
            let mut d_row = vec![0.0; dim];
            axpy(&mut d_row, b, &e);
            grads.add_context_row(r, &d_row);
        }

        for &w in &sample.context {
            grads.add_effect_row(w, &d_e);
        }
    }

    let n = samples.len() as f64;
    grads.scale(-1.0 / n); // minimize the negated mean objective
    Ok((LossBreakdown::new(positive / n, negative / n, 0.0, 0.0), grads))
}

pub fn sg_loss(
    samples: &[ContextSample],
    negatives: &[Vec<Vec<u32>>],
    params: &ModelParameters,
) -> Result<LossBreakdown, TrainError> {
    sg_loss_grad(samples, negatives, params).map(|(b, _)| b)
}

/// SkipGram with negative sampling: for every context position j,
/// log s(W_x . W'_wj) + sum_k log s(-W_x . W'_r). `negatives` supplies K
/// draws per context position.
pub fn sg_loss_grad(
    samples: &[ContextSample],
    negatives: &[Vec<Vec<u32>>],
    params: &ModelParameters,
) -> Result<(LossBreakdown, Gradients), TrainError> {
    if params.variant != ModelVariant::Sg {
        return Err(TrainError::VariantMismatch { expected: "sg", got: params.variant });
    }
    let dim = params.dim;
    let mut grads = Gradients::default();
    let mut positive = 0.0;
    let mut negative = 0.0;

    for (sample, negs) in samples.iter().zip(negatives) {
        let target = params.effect_row(sample.center);
        let mut d_target = vec![0.0; dim];
        for (j, &w) in sample.context.iter().enumerate() {
            let w_ctx = params.context_row(w);
            let d_pos = dot(target, w_ctx);
            positive += log_sigmoid(d_pos);
            let a = sigmoid(-d_pos);
            axpy(&mut d_target, a, w_ctx);
            let mut d_row = vec![0.0; dim];
            axpy(&mut d_row, a, target);
            grads.add_context_row(w, &d_row);

            for &r in &negs[j] {
                let w_neg = params.context_row(r);
                let d_neg = dot(target, w_neg);
                negative += log_sigmoid(-d_neg);
                let b = -sigmoid(d_neg);
                axpy(&mut d_target, b, w_neg);
                let mut d_row = vec![0.0; dim];
                axpy(&mut d_row, b, target);
                grads.add_context_row(r, &d_row);
            }
        }
        grads.add_effect_row(sample.center, &d_target);
    }

    let n = samples.len() as f64;
    grads.scale(-1.0 / n);
    Ok((LossBreakdown::new(positive / n, negative / n, 0.0, 0.0), grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::tests_support::{fd_check, perturbable_cbow, perturbable_sg};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_model(variant: ModelVariant, v: usize, dim: usize) -> ModelParameters {
        ModelParameters {
            variant,
            vocab_size: v,
            dim,
            effect: vec![0.0; v * dim],
            context: Some(vec![0.0; v * dim]),
            bn: None,
            vocab_hash: 0,
        }
    }

    #[test]
    fn cbow_zero_embeddings_give_log_half_terms() {
        let params = zero_model(ModelVariant::Cbow, 5, 3);
        let samples = vec![ContextSample { center: 0, context: vec![1, 2, 3, 4] }];
        let negatives = vec![vec![1, 2, 3, 4, 0]];
        let (b, _) = cbow_loss_grad(&samples, &negatives, &params).unwrap();
        let expect = 6.0 * 0.5f64.ln(); // (1 + K) log sigma(0), K = 5
        assert!((b.total - expect).abs() < 1e-12);
        assert_eq!(b.kl, 0.0);
    }

    #[test]
    fn cbow_orthogonal_context_rows_match_zero_case() {
        // e is orthogonal to every involved W' row: all dots are zero.
        let mut params = zero_model(ModelVariant::Cbow, 4, 2);
        params.effect = vec![1.0, 0.0, 1.0, 0.0, 0.5, 0.0, 0.25, 0.0];
        let ctx = params.context.as_mut().unwrap();
        for r in 0..4 {
            ctx[r * 2 + 1] = 0.7; // only the second coordinate is nonzero
        }
        let samples = vec![ContextSample { center: 0, context: vec![1, 2, 2, 3] }];
        let negatives = vec![vec![3, 3]];
        let (b, _) = cbow_loss_grad(&samples, &negatives, &params).unwrap();
        assert!((b.total - 3.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cbow_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..20 {
            let (params, samples, negatives) = perturbable_cbow(&mut rng);
            let (_, grads) = cbow_loss_grad(&samples, &negatives, &params).unwrap();
            let max_rel = fd_check(&params, &grads, |p| {
                -cbow_loss(&samples, &negatives, p).unwrap().total
            });
            assert!(max_rel < 1e-5, "relative error {max_rel}");
        }
    }

    #[test]
    fn cbow_rejects_wrong_variant() {
        let params = zero_model(ModelVariant::Sg, 3, 2);
        let samples = vec![ContextSample { center: 0, context: vec![1, 1] }];
        assert!(matches!(
            cbow_loss_grad(&samples, &[vec![2]], &params),
            Err(TrainError::VariantMismatch { expected: "cbow", .. })
        ));
    }

    #[test]
    fn sg_zero_embeddings_scale_with_context_size() {
        let params = zero_model(ModelVariant::Sg, 5, 3);
        let samples = vec![ContextSample { center: 0, context: vec![1, 2, 3, 4] }];
        let negatives = vec![vec![vec![1, 2]; 4]];
        let (b, _) = sg_loss_grad(&samples, &negatives, &params).unwrap();
        // (1 + K) log sigma(0) per context word, K = 2, 4 positions.
        assert!((b.total - 12.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sg_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let (params, samples, negatives) = perturbable_sg(&mut rng);
            let (_, grads) = sg_loss_grad(&samples, &negatives, &params).unwrap();
            let max_rel = fd_check(&params, &grads, |p| {
                -sg_loss(&samples, &negatives, p).unwrap().total
            });
            assert!(max_rel < 1e-5, "relative error {max_rel}");
        }
    }

    #[test]
    fn sg_learns_planted_cooccurrence() {
        // Corpus "a b a b ...": after training, sigma(W_a . W'_b) > 0.9.
        use crate::corpus::Vocabulary;
        use crate::trainer::{train, TrainConfig};
        let mut text = String::new();
        for _ in 0..200 {
            text.push_str("a b a b a b a b\n");
        }
        let lines = crate::corpus::tokenize_lines(&text, true);
        let flat: Vec<String> = lines.iter().flatten().cloned().collect();
        let mut vocab = Vocabulary::build(flat.iter(), 1).unwrap();
        vocab.subsample_threshold = 0.0;
        let config = TrainConfig {
            variant: ModelVariant::Sg,
            dim: 8,
            window: 1,
            negatives: 2,
            lr: 0.05,
            beta: 0.0,
            epochs: 5,
            batch_size: 64,
            seed: 3,
            ..TrainConfig::default()
        };
        let out = train(&lines, &vocab, &config).unwrap();
        let a = vocab.id("a").unwrap();
        let b = vocab.id("b").unwrap();
        let score = sigmoid(dot(out.model.effect_row(a), out.model.context_row(b)));
        assert!(score > 0.9, "sigma(W_a . W'_b) = {score}");
    }
}
