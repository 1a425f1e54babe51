//! Momentum SGD with step learning-rate decay, shared by the neural detectors.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// Multiply the rate by `decay_factor` every `decay_every` epochs.
    pub decay_every: usize,
    pub decay_factor: f64,
    /// Rescale the whole gradient when its L2 norm exceeds this (0 disables).
    pub clip_norm: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            decay_every: 10,
            decay_factor: 0.5,
            clip_norm: 5.0,
        }
    }
}

impl SgdConfig {
    pub fn rate_at(&self, epoch: usize) -> f64 {
        let steps = if self.decay_every == 0 { 0 } else { epoch / self.decay_every };
        self.learning_rate * self.decay_factor.powi(steps as i32)
    }
}

/// Velocity state for one flat parameter vector.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub config: SgdConfig,
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(config: SgdConfig, n_params: usize) -> Self {
        Self {
            config,
            velocity: vec![0.0; n_params],
        }
    }

    /// Applies one step in place; returns the pre-clipping gradient norm.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], epoch: usize) -> f64 {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let scale = if self.config.clip_norm > 0.0 && norm > self.config.clip_norm {
            self.config.clip_norm / norm
        } else {
            1.0
        };
        let lr = self.config.rate_at(epoch);
        for ((p, v), g) in params.iter_mut().zip(self.velocity.iter_mut()).zip(grad) {
            *v = self.config.momentum * *v - lr * scale * g;
            *p += *v;
        }
        norm
    }
}

/// He-uniform initialization, `U(−√(6/fan_in), √(6/fan_in))`.
pub fn he_uniform(rng: &mut impl Rng, values: &mut [f64], fan_in: usize) {
    let a = (6.0 / fan_in.max(1) as f64).sqrt();
    for v in values {
        *v = rng.gen_range(-a..a);
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy computed from the logit for numerical stability.
pub fn bce_with_logit(logit: f64, target: f64) -> f64 {
    logit.max(0.0) - logit * target + (-logit.abs()).exp().ln_1p()
}
