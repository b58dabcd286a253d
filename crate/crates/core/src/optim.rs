//! Adam with bias correction.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::nn::{Gradients, Model};
use crate::{Error, Real, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    /// β1 = 0.999 and β2 = 0.99, the settings the loss was tuned with.
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.999, beta2: 0.99, eps: 1e-8 }
    }
}

impl AdamConfig {
    /// The usual β1 = 0.9, β2 = 0.999.
    pub fn conventional() -> Self {
        Self { beta1: 0.9, beta2: 0.999, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr.is_finite()
            && self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps.is_finite()
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid Adam settings {self:?}")))
        }
    }
}

/// Optimizer state: step count and first/second moments per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T: Real = f32> {
    pub config: AdamConfig,
    t: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig, model: &Model<T>) -> Self {
        let zeros = || model.params().iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self { config, t: 0, m: zeros(), v: zeros() }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Apply one update; returns the largest absolute parameter change.
    pub fn step(&mut self, model: &mut Model<T>, grads: &Gradients<T>) -> Result<f64> {
        let gs = grads.tensors();
        let mut params = model.params_mut();
        if gs.len() != params.len() || gs.len() != self.m.len() {
            return Err(Error::ShapeMismatch { left: alloc::vec![params.len()], right: alloc::vec![gs.len()] });
        }
        for (p, g) in params.iter().zip(&gs) {
            if p.shape() != g.shape() {
                return Err(Error::ShapeMismatch { left: p.shape().to_vec(), right: g.shape().to_vec() });
            }
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - Float::powi(beta1, self.t as i32);
        let c2 = 1.0 - Float::powi(beta2, self.t as i32);
        let mut max_delta = 0.0f64;
        for (k, p) in params.iter_mut().enumerate() {
            let g = gs[k].data();
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            for (i, pv) in p.data_mut().iter_mut().enumerate() {
                let gi = g[i].as_f64();
                let mi = beta1 * m[i].as_f64() + (1.0 - beta1) * gi;
                let vi = beta2 * v[i].as_f64() + (1.0 - beta2) * gi * gi;
                m[i] = T::of(mi);
                v[i] = T::of(vi);
                let delta = lr * (mi / c1) / (Float::sqrt(vi / c2) + eps);
                let before = *pv;
                *pv = T::of(pv.as_f64() - delta);
                max_delta = max_delta.max((*pv - before).abs().as_f64());
            }
        }
        Ok(max_delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, ModelSpec};
    use crate::resample::Scale;

    fn tiny() -> Model<f64> {
        Model::new(&ModelSpec { arch: Architecture::Srcnn, scale: Scale::new(2).unwrap(), filters: (2, 2) }, 3)
    }

    fn constant_grads(model: &Model<f64>, g: f64) -> Gradients<f64> {
        let mut grads = Gradients::zeros_like(model);
        for l in &mut grads.layers {
            l.weight = l.weight.map(|_| g);
            l.bias = l.bias.map(|_| g);
        }
        grads
    }

    #[test]
    fn first_step_moves_by_lr() {
        // after one step m̂ = g and v̂ = g², so each parameter moves by ≈ lr·sign(g)
        for cfg in [AdamConfig::default(), AdamConfig::conventional()] {
            let mut model = tiny();
            let before = model.clone();
            let mut opt = Adam::new(cfg, &model);
            let grads = constant_grads(&model, 0.3);
            let d = opt.step(&mut model, &grads).unwrap();
            assert!((d - 1e-3).abs() < 1e-9);
            for (a, b) in model.params().iter().zip(before.params()) {
                for (x, y) in a.data().iter().zip(b.data()) {
                    assert!((y - x - 1e-3).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut model = tiny();
        let before = model.clone();
        let mut opt = Adam::new(AdamConfig::default(), &model);
        let grads = Gradients::zeros_like(&model);
        assert_eq!(opt.step(&mut model, &grads).unwrap(), 0.0);
        assert_eq!(model, before);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn matches_scalar_reference() {
        let cfg = AdamConfig::default();
        let mut model = tiny();
        let p0 = model.params()[0].data()[0];
        let mut opt = Adam::new(cfg, &model);
        let gseq = [0.5, -0.2, 0.1, 0.7];
        let (mut p, mut m, mut v) = (p0, 0.0f64, 0.0f64);
        for (t, &g) in gseq.iter().enumerate() {
            let grads = constant_grads(&model, g);
            opt.step(&mut model, &grads).unwrap();
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            let n = (t + 1) as i32;
            p -= cfg.lr * (m / (1.0 - cfg.beta1.powi(n))) / ((v / (1.0 - cfg.beta2.powi(n))).sqrt() + cfg.eps);
        }
        assert!((model.params()[0].data()[0] - p).abs() < 1e-15);
    }

    #[test]
    fn quadratic_descent_matches_recurrence() {
        // f(w) = w², g = 2w, starting from w = 1
        let cfg = AdamConfig::default();
        let mut model = tiny();
        model.params_mut()[0].data_mut()[0] = 1.0;
        let mut opt = Adam::new(cfg, &model);
        let (mut w, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=5 {
            let mut grads = Gradients::zeros_like(&model);
            grads.layers[0].weight.data_mut()[0] = 2.0 * model.params()[0].data()[0];
            opt.step(&mut model, &grads).unwrap();
            let g = 2.0 * w;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            w -= cfg.lr * (m / (1.0 - cfg.beta1.powi(t))) / ((v / (1.0 - cfg.beta2.powi(t))).sqrt() + cfg.eps);
        }
        assert!((model.params()[0].data()[0] - w).abs() < 1e-10);
    }

    #[test]
    fn first_step_from_zero() {
        let mut model = tiny();
        model.params_mut()[0].data_mut()[0] = 0.0;
        let mut opt = Adam::new(AdamConfig::default(), &model);
        let mut grads = Gradients::zeros_like(&model);
        grads.layers[0].weight.data_mut()[0] = 1.0;
        opt.step(&mut model, &grads).unwrap();
        assert!((model.params()[0].data()[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn first_step_ignores_gradient_scale() {
        for g in [1e-2, 0.3, 5.0] {
            let step = |k: f64| {
                let mut model = tiny();
                let before = model.params()[0].data()[0];
                let mut opt = Adam::new(AdamConfig::default(), &model);
                let grads = constant_grads(&model, g * k);
                opt.step(&mut model, &grads).unwrap();
                model.params()[0].data()[0] - before
            };
            let (a, b) = (step(1.0), step(2.0));
            assert!(((a - b) / a).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(AdamConfig { lr: -1.0, ..AdamConfig::default() }.validate().is_err());
        assert!(AdamConfig { beta1: 1.0, ..AdamConfig::default() }.validate().is_err());
        assert!(AdamConfig::conventional().validate().is_ok());
    }
}
