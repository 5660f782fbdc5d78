use alloc::vec;
use alloc::vec::Vec;

use crate::math::{pow, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum OptimizerKind {
    Adam,
    Adamax,
}

/// Adam / Adamax with per-group moment buffers.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        Self {
            kind,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update. `grads[g]` must match `params[g]` in length.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[Vec<f64>]) {
        debug_assert_eq!(params.len(), grads.len());
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        self.step += 1;
        let t = self.step as f64;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let bias1 = 1.0 - pow(b1, t);
        match self.kind {
            OptimizerKind::Adam => {
                let bias2 = 1.0 - pow(b2, t);
                let step_size = self.learning_rate * sqrt(bias2) / bias1;
                let eps_hat = eps * sqrt(bias2);
                for (g_idx, p) in params.iter_mut().enumerate() {
                    let (m, v, g) = (&mut self.first[g_idx], &mut self.second[g_idx], &grads[g_idx]);
                    for i in 0..p.len() {
                        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                        p[i] -= step_size * m[i] / (sqrt(v[i]) + eps_hat);
                    }
                }
            }
            OptimizerKind::Adamax => {
                let step_size = self.learning_rate / bias1;
                for (g_idx, p) in params.iter_mut().enumerate() {
                    let (m, u, g) = (&mut self.first[g_idx], &mut self.second[g_idx], &grads[g_idx]);
                    for i in 0..p.len() {
                        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                        u[i] = (b2 * u[i]).max(g[i].abs());
                        p[i] -= step_size * m[i] / (u[i] + eps);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_steps_match_textbook_updates() {
        // Adam: m̂ = g, v̂ = g² on step 1, so the update is lr·g/(|g| + ε)
        let mut p = [1.0, -2.0];
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.1);
        opt.step(&mut [&mut p[..]], &[vec![0.5, -4.0]]);
        assert!((p[0] - (1.0 - 0.1 * 0.5 / (0.5 + 1e-8))).abs() < 1e-12, "{p:?}");
        assert!((p[1] - (-2.0 + 0.1 * 4.0 / (4.0 + 1e-8))).abs() < 1e-12, "{p:?}");

        let mut q = [0.0];
        let mut opt = Optimizer::new(OptimizerKind::Adamax, 0.01);
        opt.step(&mut [&mut q[..]], &[vec![2.0]]);
        assert!((q[0] + 0.01).abs() < 1e-9);
        opt.step(&mut [&mut q[..]], &[vec![2.0]]);
        // m = 0.19·2 ... bias-corrected m̂ = 2, u = 2
        assert!((q[0] + 0.02).abs() < 1e-9);
    }

    #[test]
    fn minimises_quadratic() {
        for kind in [OptimizerKind::Adam, OptimizerKind::Adamax] {
            let mut x = [3.0, -5.0];
            let mut opt = Optimizer::new(kind, 0.05);
            for _ in 0..2000 {
                let g = vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] + 2.0)];
                opt.step(&mut [&mut x[..]], &[g]);
            }
            assert!((x[0] - 1.0).abs() < 1e-3 && (x[1] + 2.0).abs() < 1e-3, "{kind:?} {x:?}");
        }
    }
}
