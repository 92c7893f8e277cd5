use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// AdamW with decoupled weight decay and bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW<S> {
    pub cfg: AdamWConfig,
    m: Vec<S>,
    v: Vec<S>,
    step: u64,
}

impl<S: Scalar> AdamW<S> {
    pub fn new(n_params: usize, cfg: AdamWConfig) -> Self {
        Self {
            cfg,
            m: vec![S::zero(); n_params],
            v: vec![S::zero(); n_params],
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One update at learning rate `lr`. A non-finite gradient aborts before
    /// touching any state.
    pub fn step(&mut self, params: &mut [S], grads: &[S], lr: S) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                what: "optimizer state",
                expected: self.m.len(),
                got: params.len().min(grads.len()),
            });
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Diverged(format!("non-finite gradient at parameter {i}")));
        }
        self.step += 1;
        let (b1, b2) = (S::of(self.cfg.beta1), S::of(self.cfg.beta2));
        let bc1 = S::one() - b1.powi(self.step as i32);
        let bc2 = S::one() - b2.powi(self.step as i32);
        let eps = S::of(self.cfg.eps);
        let wd = S::of(self.cfg.weight_decay);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (S::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (S::one() - b2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * wd * params[i];
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Free-function form of [`AdamW::step`].
pub fn adamw_step<S: Scalar>(params: &mut [S], grads: &[S], state: &mut AdamW<S>, lr: S) -> Result<()> {
    state.step(params, grads, lr)
}

/// `lr0 * (1 + cos(pi * step / total)) / 2`, reaching 0 at `step = total`.
pub fn cosine_lr(step: usize, total_steps: usize, lr0: f64) -> f64 {
    if total_steps == 0 {
        return lr0;
    }
    let x = step.min(total_steps) as f64 / total_steps as f64;
    lr0 * (1.0 + (std::f64::consts::PI * x).cos()) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_grad_is_noop() {
        let mut p = vec![1.0f64, -2.0];
        let mut opt = AdamW::new(2, AdamWConfig::default());
        opt.step(&mut p, &[0.0, 0.0], 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_is_sign_sized() {
        let mut p = vec![0.0f64, 0.0];
        let mut opt = AdamW::new(2, AdamWConfig::default());
        opt.step(&mut p, &[3.0, -0.25], 0.04).unwrap();
        // m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
        assert_relative_eq!(p[0], -0.04 * 3.0 / (3.0 + 1e-8), max_relative = 1e-12);
        assert_relative_eq!(p[1], 0.04 * 0.25 / (0.25 + 1e-8), max_relative = 1e-12);
    }

    #[test]
    fn constant_grad_descends() {
        let mut p = vec![0.5f64];
        let mut opt = AdamW::new(1, AdamWConfig::default());
        let mut prev = p[0];
        for _ in 0..5 {
            opt.step(&mut p, &[0.7], 0.01).unwrap();
            assert!(p[0] < prev);
            prev = p[0];
        }
    }

    #[test]
    fn nan_grad_is_divergence() {
        let mut p = vec![0.5f64];
        let mut opt = AdamW::new(1, AdamWConfig::default());
        assert!(matches!(opt.step(&mut p, &[f64::NAN], 0.01), Err(Error::Diverged(_))));
        assert_eq!(opt.steps_taken(), 0);
    }

    #[test]
    fn cosine_points() {
        assert_eq!(cosine_lr(0, 100, 0.04), 0.04);
        assert!(cosine_lr(100, 100, 0.04).abs() < 1e-18);
        assert_relative_eq!(cosine_lr(50, 100, 0.04), 0.02, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn cosine_non_increasing(total in 1usize..5000, lr0 in 1e-4f64..1.0) {
            let mut prev = f64::INFINITY;
            for s in 0..=total.min(600) {
                let lr = cosine_lr(s * total / total.min(600), total, lr0);
                prop_assert!(lr <= prev + 1e-15);
                prev = lr;
            }
        }
    }
}
