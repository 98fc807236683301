use alloc::vec::Vec;

use super::config::OptimizerKind;
use crate::linalg::DenseMatrix;
use crate::model::{Gradients, ModelParams};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First-order optimizer with per-tensor state. Weight decay is added to the
/// gradient (L2 form) for both kinds.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    momentum: f64,
    weight_decay: f64,
    steps: i32,
    first: Vec<DenseMatrix>,
    second: Vec<DenseMatrix>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, momentum: f64, weight_decay: f64, params: &ModelParams) -> Self {
        let zeros: Vec<DenseMatrix> = params
            .tensors()
            .iter()
            .map(|(_, t)| DenseMatrix::zeros(t.rows(), t.cols()))
            .collect();
        let second = match kind {
            OptimizerKind::Adam => zeros.clone(),
            OptimizerKind::SgdMomentum => Vec::new(),
        };
        Self {
            kind,
            momentum,
            weight_decay,
            steps: 0,
            first: zeros,
            second,
        }
    }

    /// Applies one update with learning rate `lr` to every tensor whose index
    /// is at least `first_trainable`.
    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients, lr: f64, first_trainable: usize) {
        self.steps = self.steps.saturating_add(1);
        let bias1 = 1.0 - libm::pow(ADAM_BETA1, f64::from(self.steps));
        let bias2 = 1.0 - libm::pow(ADAM_BETA2, f64::from(self.steps));
        for (idx, (theta, grad)) in params.tensors_mut().into_iter().zip(&grads.tensors).enumerate() {
            if idx < first_trainable {
                continue;
            }
            let theta = theta.as_mut_slice();
            let grad = grad.as_slice();
            match self.kind {
                OptimizerKind::SgdMomentum => {
                    let buf = self.first[idx].as_mut_slice();
                    for ((w, &g), b) in theta.iter_mut().zip(grad).zip(buf.iter_mut()) {
                        let g = g + self.weight_decay * *w;
                        *b = self.momentum * *b + g;
                        *w -= lr * *b;
                    }
                }
                OptimizerKind::Adam => {
                    let m = self.first[idx].as_mut_slice();
                    let v = self.second[idx].as_mut_slice();
                    for (((w, &g), mi), vi) in theta.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                        let g = g + self.weight_decay * *w;
                        *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * g;
                        *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * g * g;
                        let m_hat = *mi / bias1;
                        let v_hat = *vi / bias2;
                        *w -= lr * m_hat / (libm::sqrt(v_hat) + ADAM_EPS);
                    }
                }
            }
        }
    }
}
