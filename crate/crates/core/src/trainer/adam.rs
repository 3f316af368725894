//! Adam with sparse row updates for the embedding matrices and dense
//! updates for the BatchNorm affine parameters.

use super::{Gradients, TrainError};
use crate::nncore::ModelParameters;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
/// Lower bound re-projected onto gamma after every step; the effect
/// extraction requires a positive scale.
const GAMMA_FLOOR: f64 = 1e-3;

struct TensorState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl TensorState {
    fn new(n: usize) -> TensorState {
        TensorState { m: vec![0.0; n], v: vec![0.0; n] }
    }
}

pub struct Adam {
    lr: f64,
    step: u64,
    effect: TensorState,
    context: Option<TensorState>,
    gamma: Option<TensorState>,
    beta: Option<TensorState>,
}

impl Adam {
    pub fn new(lr: f64, model: &ModelParameters) -> Adam {
        let n = model.vocab_size * model.dim;
        Adam {
            lr,
            step: 0,
            effect: TensorState::new(n),
            context: model.context.as_ref().map(|_| TensorState::new(n)),
            gamma: model
                .bn
                .as_ref()
                .filter(|bn| bn.affine)
                .map(|_| TensorState::new(model.dim)),
            beta: model
                .bn
                .as_ref()
                .filter(|bn| bn.affine)
                .map(|_| TensorState::new(model.dim)),
        }
    }

    /// One optimizer step over the touched parameters. Zero-gradient rows
    /// are left untouched (their moment estimates do not decay either,
    /// matching the usual sparse-Adam behavior).
    pub fn step(&mut self, model: &mut ModelParameters, grads: &Gradients) -> Result<(), TrainError> {
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step as i32);
        let bc2 = 1.0 - BETA2.powi(self.step as i32);
        let dim = model.dim;
        let lr = self.lr;

        for (&row, g) in &grads.effect_rows {
            check_finite(g, || format!("effect_matrix row {row}"))?;
            let off = row as usize * dim;
            update_slice(
                &mut model.effect[off..off + dim],
                &mut self.effect.m[off..off + dim],
                &mut self.effect.v[off..off + dim],
                g,
                lr,
                bc1,
                bc2,
            );
        }
        if !grads.context_rows.is_empty() {
            let ctx = model
                .context
                .as_mut()
                .expect("context gradient for a model without a context matrix");
            let state = self.context.as_mut().expect("context optimizer state");
            for (&row, g) in &grads.context_rows {
                check_finite(g, || format!("context_matrix row {row}"))?;
                let off = row as usize * dim;
                update_slice(
                    &mut ctx[off..off + dim],
                    &mut state.m[off..off + dim],
                    &mut state.v[off..off + dim],
                    g,
                    lr,
                    bc1,
                    bc2,
                );
            }
        }
        if let (Some(g), Some(state)) = (&grads.gamma, self.gamma.as_mut()) {
            check_finite(g, || "batchnorm gamma".to_string())?;
            let bn = model.bn.as_mut().expect("bn gradient for a model without bn");
            update_slice(&mut bn.gamma, &mut state.m, &mut state.v, g, lr, bc1, bc2);
        }
        if let (Some(g), Some(state)) = (&grads.beta, self.beta.as_mut()) {
            check_finite(g, || "batchnorm beta".to_string())?;
            let bn = model.bn.as_mut().expect("bn gradient for a model without bn");
            update_slice(&mut bn.beta, &mut state.m, &mut state.v, g, lr, bc1, bc2);
        }
        if let Some(bn) = model.bn.as_mut() {
            if bn.affine {
                for g in &mut bn.gamma {
                    *g = g.max(GAMMA_FLOOR);
                }
            }
        }
        Ok(())
    }
}

fn update_slice(
    theta: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    g: &[f64],
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    for j in 0..theta.len() {
        m[j] = BETA1 * m[j] + (1.0 - BETA1) * g[j];
        v[j] = BETA2 * v[j] + (1.0 - BETA2) * g[j] * g[j];
        let m_hat = m[j] / bc1;
        let v_hat = v[j] / bc2;
        theta[j] -= lr * m_hat / (v_hat.sqrt() + EPS);
    }
}

fn check_finite(g: &[f64], name: impl Fn() -> String) -> Result<(), TrainError> {
    if g.iter().any(|v| !v.is_finite()) {
        Err(TrainError::NonFiniteGradient { parameter: name() })
    } else {
        Ok(())
    }
}
