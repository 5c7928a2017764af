use super::model::{Gradients, Model};
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

pub const DEFAULT_LR: f64 = 1e-3;

/// Adam moments and hyper-parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T: Real = f32> {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> AdamState<T> {
    /// Zero moments mirroring the model's parameters; β1 = 0.9, β2 = 0.999, ε = 1e-7.
    pub fn new(model: &Model<T>, lr: f64) -> Self {
        let zeros: Vec<Tensor<T>> = model.tensors().map(|t| Tensor::zeros(t.shape())).collect();
        Self { step: 0, lr, beta1: 0.9, beta2: 0.999, epsilon: 1e-7, m: zeros.clone(), v: zeros }
    }

    pub fn moments(&self) -> (&[Tensor<T>], &[Tensor<T>]) {
        (&self.m, &self.v)
    }

    /// One bias-corrected Adam update of every parameter.
    pub fn apply(&mut self, model: &mut Model<T>, grads: &Gradients<T>) -> Result<()> {
        let grads: Vec<&Tensor<T>> = grads.tensors().collect();
        if grads.len() != self.m.len()
            || grads.iter().zip(&self.m).any(|(g, m)| g.shape() != m.shape())
        {
            return Err(Error::shape("adam_step", "gradients do not mirror parameters".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.epsilon);
        for (((param, g), m), v) in model.tensors_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((p, &g), m), v) in param
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                let g = g.to_f64();
                let mn = b1 * m.to_f64() + (1.0 - b1) * g;
                let vn = b2 * v.to_f64() + (1.0 - b2) * g * g;
                *m = T::from_f64(mn);
                *v = T::from_f64(vn);
                let update = lr * (mn / c1) / ((vn / c2).sqrt() + eps);
                *p = T::from_f64(p.to_f64() - update);
            }
        }
        Ok(())
    }
}

/// Applies one Adam update; see [`AdamState::apply`].
pub fn adam_step<T: Real>(model: &mut Model<T>, state: &mut AdamState<T>, grads: &Gradients<T>) -> Result<()> {
    state.apply(model, grads)
}
