//! Test-only helpers: seeded random tensors and a central-difference oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{Real, Tensor};

/// Uniform values in [-1, 1).
pub fn random_tensor<T: Real>(shape: &[usize], seed: u64) -> Tensor<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| T::from_f64(rng.gen_range(-1.0..1.0)))
}

/// Central differences of `f` with respect to every element of `at`.
pub fn central_diff(
    at: &Tensor<f64>,
    h: f64,
    mut f: impl FnMut(&Tensor<f64>) -> f64,
) -> Tensor<f64> {
    let mut probe = at.clone();
    let mut grad = Vec::with_capacity(at.len());
    for i in 0..at.len() {
        let x0 = at.data()[i];
        probe.data_mut()[i] = x0 + h;
        let up = f(&probe);
        probe.data_mut()[i] = x0 - h;
        let down = f(&probe);
        probe.data_mut()[i] = x0;
        grad.push((up - down) / (2.0 * h));
    }
    Tensor::new(at.shape(), grad).unwrap()
}

/// Largest per-component relative error, with a 1e-8 floor on the denominator.
pub fn max_rel_err<T: Real>(analytic: &Tensor<T>, numeric: &Tensor<f64>) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape());
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| {
            let a = a.to_f64();
            (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
        })
        .fold(0.0, f64::max)
}
