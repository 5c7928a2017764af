use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Probabilities are clamped to `[CLAMP, 1 − CLAMP]` before taking logs.
pub const CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy and its exact gradient with respect to the
/// (clamped) probabilities. Outside the clamp interval the gradient is zero.
pub fn bce_loss<T: Real>(prob_map: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    if prob_map.shape() != target.shape() {
        return Err(Error::shape(
            "bce_loss",
            format!("{:?} vs {:?}", prob_map.shape(), target.shape()),
        ));
    }
    let n = prob_map.len() as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(prob_map.len());
    for (&p, &y) in prob_map.data().iter().zip(target.data()) {
        let (p, y) = (p.to_f64(), y.to_f64());
        let pc = p.clamp(CLAMP, 1.0 - CLAMP);
        total -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
        let g = if (CLAMP..=1.0 - CLAMP).contains(&p) { -(y / pc - (1.0 - y) / (1.0 - pc)) / n } else { 0.0 };
        grad.push(T::from_f64(g));
    }
    Ok((total / n, Tensor::new(prob_map.shape(), grad)?))
}
