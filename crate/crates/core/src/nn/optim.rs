use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam with decoupled weight decay and an optional linear schedule
/// `lr = base_lr · (1 − progress)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub base_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub lr_decay: bool,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

pub const DEFAULT_LR: f64 = 0.0005;

impl AdamW {
    pub fn new(n_params: usize, base_lr: f64) -> Self {
        Self {
            base_lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            lr_decay: true,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Self {
        self.weight_decay = wd;
        self
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn learning_rate(&self, progress: f64) -> f64 {
        if self.lr_decay {
            self.base_lr * (1.0 - progress.clamp(0.0, 1.0))
        } else {
            self.base_lr
        }
    }

    /// One update. A non-finite gradient leaves params and moments untouched.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], progress: f64) -> Result<f64> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                expected: self.m.len(),
                got: if params.len() != self.m.len() { params.len() } else { grads.len() },
            });
        }
        if !(0.0..=1.0).contains(&progress) {
            return Err(Error::InvalidInput(format!("progress {progress} outside [0, 1]")));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {i} is {}", grads[i])));
        }
        let lr = self.learning_rate(progress);
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * params[i]);
        }
        Ok(lr)
    }
}

/// Rescales `grad` in place so its L2 norm is at most `max_norm`; returns
/// the norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}
