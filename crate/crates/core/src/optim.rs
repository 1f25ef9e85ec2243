use serde::{Deserialize, Serialize};

use crate::nets::{Mlp, MlpGrad};

/// Adam with bias correction. One instance per parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(net: &Mlp, learning_rate: f64, beta1: f64, beta2: f64) -> Self {
        let n = net.num_params();
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Descends along `grad`.
    pub fn step(&mut self, net: &mut Mlp, grad: &MlpGrad) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let lr = self.learning_rate;
        let eps = self.epsilon;
        let mut idx = 0;
        for (p, g) in net.params_mut().zip(grad.slices()) {
            let m = &mut self.m[idx..idx + p.len()];
            let v = &mut self.v[idx..idx + p.len()];
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
            idx += p.len();
        }
    }
}

/// Rescales `grad` in place so its global norm does not exceed `ceiling`.
pub fn clip_global_norm(grad: &mut MlpGrad, ceiling: f64) {
    let norm = grad.sq_norm().sqrt();
    if norm > ceiling && norm > 0.0 {
        grad.scale(ceiling / norm);
    }
}
