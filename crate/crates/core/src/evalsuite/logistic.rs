//! L2-regularized binary logistic regression fitted by full-batch gradient
//! descent with backtracking, run to a 1e-8 gradient norm. Deterministic;
//! no stochastic elements.

use crate::nncore::sigmoid;

#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        let z: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        sigmoid(z)
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        (self.score(x) > 0.5) as u8
    }

    pub fn accuracy(&self, xs: &[Vec<f64>], ys: &[u8]) -> f64 {
        let correct = xs.iter().zip(ys).filter(|(x, &y)| self.predict(x) == y).count();
        correct as f64 / ys.len() as f64
    }
}

/// Objective: mean cross-entropy + 0.5 * l2 * |w|^2 (bias unpenalized).
fn objective(w: &[f64], b: f64, xs: &[Vec<f64>], ys: &[u8], l2: f64) -> f64 {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z: f64 = w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
        // -log p(y|x), stable in both tails.
        loss += if y == 1 { softplus(-z) } else { softplus(z) };
    }
    loss / n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn fit(xs: &[Vec<f64>], ys: &[u8], l2: f64) -> LogisticModel {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let dim = xs[0].len();
    let n = xs.len() as f64;
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut step = 1.0;
    let mut value = objective(&w, b, xs, ys, l2);

    for _ in 0..200_000 {
        let mut gw = vec![0.0; dim];
        let mut gb = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let z: f64 = w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
            let r = sigmoid(z) - y as f64;
            for (g, &v) in gw.iter_mut().zip(x) {
                *g += r * v;
            }
            gb += r;
        }
        for (g, &wv) in gw.iter_mut().zip(&w) {
            *g = *g / n + l2 * wv;
        }
        gb /= n;
        let norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if norm < 1e-8 {
            break;
        }
        // Backtracking: halve until the objective decreases, then let the
        // step grow back slowly.
        loop {
            let w2: Vec<f64> = w.iter().zip(&gw).map(|(wv, g)| wv - step * g).collect();
            let b2 = b - step * gb;
            let v2 = objective(&w2, b2, xs, ys, l2);
            if v2 <= value - 0.25 * step * norm * norm {
                w = w2;
                b = b2;
                value = v2;
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                return LogisticModel { weights: w, bias: b };
            }
        }
    }
    LogisticModel { weights: w, bias: b }
}
