use super::{Real, Tensor};
use crate::error::{Error, Result};

fn map<T: Real>(t: &Tensor<T>, f: impl Fn(f64) -> f64) -> Tensor<T> {
    Tensor::new(t.shape(), t.data().iter().map(|&v| T::from_f64(f(v.to_f64()))).collect())
        .expect("shape preserved")
}

fn zip_map<T: Real>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    op: &'static str,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Tensor<T>> {
    if a.shape() != b.shape() {
        return Err(Error::shape(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let data = a.data().iter().zip(b.data()).map(|(&x, &g)| T::from_f64(f(x.to_f64(), g.to_f64())));
    Tensor::new(a.shape(), data.collect())
}

pub fn relu<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    map(input, |x| x.max(0.0))
}

/// Passes `d_output` where the forward input was strictly positive; the
/// subgradient at 0 is 0.
pub fn relu_grad<T: Real>(input: &Tensor<T>, d_output: &Tensor<T>) -> Result<Tensor<T>> {
    zip_map(input, d_output, "relu_grad", |x, g| if x > 0.0 { g } else { 0.0 })
}

/// Logistic function. Results that would round to exactly 0 or 1 in the
/// element type are pulled to the nearest interior value, so the output is
/// always inside (0, 1).
pub fn sigmoid<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    map(input, |x| {
        let y = 1.0 / (1.0 + (-x).exp());
        y.clamp(T::MIN_POSITIVE, T::BELOW_ONE)
    })
}

/// `d_output · y·(1 − y)` from the saved forward output `y`.
pub fn sigmoid_grad<T: Real>(output: &Tensor<T>, d_output: &Tensor<T>) -> Result<Tensor<T>> {
    zip_map(output, d_output, "sigmoid_grad", |y, g| g * y * (1.0 - y))
}
