//! Batch Normalization over batches of E-vectors, with the train/eval split
//! and the hand-derived backward pass used by the trainer.

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

/// Per-dimension normalization state. `gamma` must stay positive whenever
/// the affine transform is enabled; the trainer re-projects it after every
/// optimizer step and the extraction step relies on it.
#[derive(Debug, Clone)]
pub struct BatchNormState {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
    pub affine: bool,
}

/// Intermediates of one train-mode forward, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct BnCache {
    pub x_hat: Vec<Vec<f64>>,
    pub inv_std: Vec<f64>,
}

impl BatchNormState {
    pub fn new(dim: usize, affine: bool) -> BatchNormState {
        BatchNormState {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: 0.1,
            epsilon: 1e-5,
            affine,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// The eval-mode map as per-dimension scale and shift:
    /// y = scale * x + shift with scale > 0 while gamma > 0.
    pub fn eval_scale_shift(&self) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim();
        let mut scale = vec![0.0; dim];
        let mut shift = vec![0.0; dim];
        for j in 0..dim {
            let inv_std = 1.0 / (self.running_var[j] + self.epsilon).sqrt();
            scale[j] = self.gamma[j] * inv_std;
            shift[j] = self.beta[j] - self.gamma[j] * self.running_mean[j] * inv_std;
        }
        (scale, shift)
    }

    pub fn forward(&mut self, x: &[Vec<f64>], mode: BnMode) -> Result<Vec<Vec<f64>>, NnError> {
        match mode {
            BnMode::Eval => Ok(self.forward_eval(x)),
            BnMode::Train => Ok(self.forward_train(x)?.0),
        }
    }

    pub fn forward_eval(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (scale, shift) = self.eval_scale_shift();
        x.iter()
            .map(|row| {
                row.iter().zip(scale.iter().zip(&shift)).map(|(&v, (&a, &b))| a * v + b).collect()
            })
            .collect()
    }

    /// Normalizes by batch statistics (biased variance) without touching the
    /// running statistics. Returns the outputs, the backward cache and the
    /// batch (mean, biased variance).
    #[allow(clippy::type_complexity)]
    pub fn normalize_batch(
        &self,
        x: &[Vec<f64>],
    ) -> Result<(Vec<Vec<f64>>, BnCache, Vec<f64>, Vec<f64>), NnError> {
        let batch = x.len();
        if batch < 2 {
            return Err(NnError::BatchTooSmall(batch));
        }
        let dim = self.dim();
        for row in x {
            if row.len() != dim {
                return Err(NnError::DimMismatch { expected: dim, got: row.len() });
            }
        }
        let n = batch as f64;
        let mut mean = vec![0.0; dim];
        for row in x {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for row in x {
            for j in 0..dim {
                let d = row[j] - mean[j];
                var[j] += d * d;
            }
        }
        for v in &mut var {
            *v /= n;
        }

        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + self.epsilon).sqrt()).collect();
        let x_hat: Vec<Vec<f64>> = x
            .iter()
            .map(|row| (0..dim).map(|j| (row[j] - mean[j]) * inv_std[j]).collect())
            .collect();
        let out = x_hat
            .iter()
            .map(|row| (0..dim).map(|j| self.gamma[j] * row[j] + self.beta[j]).collect())
            .collect();
        Ok((out, BnCache { x_hat, inv_std }, mean, var))
    }

    /// Moves the running statistics toward one observed batch; the variance
    /// estimate is unbiased by batch size as usual.
    pub fn update_running(&mut self, mean: &[f64], var_biased: &[f64], batch: usize) {
        let unbias = batch as f64 / (batch as f64 - 1.0);
        for j in 0..self.dim() {
            self.running_mean[j] =
                (1.0 - self.momentum) * self.running_mean[j] + self.momentum * mean[j];
            self.running_var[j] = (1.0 - self.momentum) * self.running_var[j]
                + self.momentum * var_biased[j] * unbias;
        }
    }

    /// Train-mode forward: batch statistics for normalization, running
    /// statistics updated as a side effect.
    pub fn forward_train(&mut self, x: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, BnCache), NnError> {
        let (out, cache, mean, var) = self.normalize_batch(x)?;
        self.update_running(&mean, &var, x.len());
        Ok((out, cache))
    }

    /// Backward through a train-mode forward. Returns the gradient w.r.t. the
    /// inputs plus (d gamma, d beta); the latter are meaningful only when the
    /// affine transform is enabled.
    pub fn backward(
        &self,
        cache: &BnCache,
        dy: &[Vec<f64>],
    ) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let batch = dy.len();
        let dim = self.dim();
        let n = batch as f64;
        let mut mean_dy = vec![0.0; dim];
        let mut mean_dy_xhat = vec![0.0; dim];
        let mut d_gamma = vec![0.0; dim];
        let mut d_beta = vec![0.0; dim];
        for (row, xh) in dy.iter().zip(&cache.x_hat) {
            for j in 0..dim {
                mean_dy[j] += row[j];
                mean_dy_xhat[j] += row[j] * xh[j];
                d_gamma[j] += row[j] * xh[j];
                d_beta[j] += row[j];
            }
        }
        for j in 0..dim {
            mean_dy[j] /= n;
            mean_dy_xhat[j] /= n;
        }
        let dx = dy
            .iter()
            .zip(&cache.x_hat)
            .map(|(row, xh)| {
                (0..dim)
                    .map(|j| {
                        self.gamma[j]
                            * cache.inv_std[j]
                            * (row[j] - mean_dy[j] - xh[j] * mean_dy_xhat[j])
                    })
                    .collect()
            })
            .collect();
        (dx, d_gamma, d_beta)
    }
}
