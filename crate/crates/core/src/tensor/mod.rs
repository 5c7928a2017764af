//! Dense row-major tensors and the forward/backward kernels the network is
//! assembled from.
//!
//! Rank-4 tensors use batch × height × width × channels layout with channels
//! innermost. Every kernel accumulates in `f64` and stores results in the
//! tensor's element type, so the same code runs in `f32` for training and in
//! `f64` for gradient checking.

mod activation;
mod concat;
mod conv;
mod dense;
mod tconv;

pub use activation::{relu, relu_grad, sigmoid, sigmoid_grad};
pub use concat::{broadcast_spatial, broadcast_spatial_backward, concat_channels, concat_split_grad};
pub use conv::{conv2d_backward, conv2d_forward};
pub use dense::{dense_backward, dense_forward};
pub use tconv::{tconv2d_backward, tconv2d_forward};

use std::fmt::Debug;

use crate::error::{Error, Result};

/// Element type of a [`Tensor`].
pub trait Real: Copy + Default + PartialOrd + Debug + Send + Sync + 'static {
    /// Largest value strictly below 1.
    const BELOW_ONE: f64;
    /// Smallest positive normal value.
    const MIN_POSITIVE: f64;
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    const BELOW_ONE: f64 = 1.0 - f32::EPSILON as f64 / 2.0;
    const MIN_POSITIVE: f64 = f32::MIN_POSITIVE as f64;
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;
    const MIN_POSITIVE: f64 = f64::MIN_POSITIVE;
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }
}

/// Dense tensor of rank 1 to 4.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T: Real = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

/// Gradients returned by a parametric kernel's backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelGrads<T: Real = f32> {
    pub d_input: Tensor<T>,
    pub d_weights: Tensor<T>,
    pub d_bias: Tensor<T>,
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.len() > 4 {
        return Err(Error::shape("tensor", format!("rank {} not in 1..=4", shape.len())));
    }
    if shape.contains(&0) {
        return Err(Error::shape("tensor", format!("zero dimension in {shape:?}")));
    }
    Ok(())
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        check_shape(shape)?;
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::shape(
                "tensor",
                format!("shape {shape:?} needs {len} elements, got {}", data.len()),
            ));
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    /// # Panics
    /// On a zero dimension or a rank outside 1..=4.
    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, T::default())
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        check_shape(shape).expect("invalid tensor shape");
        let len = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![value; len] }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> T) -> Self {
        check_shape(shape).expect("invalid tensor shape");
        let len = shape.iter().product();
        Self { shape: shape.to_vec(), data: (0..len).map(&mut f).collect() }
    }

    /// Builds a tensor from `f64` values, rounding into the element type.
    pub fn from_f64_slice(shape: &[usize], values: &[f64]) -> Result<Self> {
        Self::new(shape, values.iter().map(|&v| T::from_f64(v)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.to_f64()).collect()
    }

    /// Converts every element to another real type.
    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        Self::new(shape, self.data)
    }

    /// `(batch, height, width, channels)` of a rank-4 tensor.
    pub fn dims4(&self, op: &'static str) -> Result<(usize, usize, usize, usize)> {
        match *self.shape.as_slice() {
            [n, h, w, c] => Ok((n, h, w, c)),
            _ => Err(Error::shape(op, format!("expected rank 4, got shape {:?}", self.shape))),
        }
    }

    pub fn dims2(&self, op: &'static str) -> Result<(usize, usize)> {
        match *self.shape.as_slice() {
            [r, c] => Ok((r, c)),
            _ => Err(Error::shape(op, format!("expected rank 2, got shape {:?}", self.shape))),
        }
    }

    pub fn dims1(&self, op: &'static str) -> Result<usize> {
        match *self.shape.as_slice() {
            [n] => Ok(n),
            _ => Err(Error::shape(op, format!("expected rank 1, got shape {:?}", self.shape))),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.to_f64().is_finite())
    }

    /// Fails with [`Error::NonFinite`] if any element is NaN or infinite.
    pub fn ensure_finite(self, op: &'static str) -> Result<Self> {
        if self.all_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite(op))
        }
    }

    /// Inner product accumulated in `f64`.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::shape(
                "dot",
                format!("{:?} vs {:?}", self.shape, other.shape),
            ));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.to_f64() * b.to_f64()).sum())
    }

    /// Elementwise `self * factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| T::from_f64(v.to_f64() * factor)).collect(),
        }
    }

    /// Number of items along the leading (batch) axis.
    pub fn batch_len(&self) -> usize {
        self.shape[0]
    }

    /// Copies out item `index` of the leading axis, keeping it as a batch of one.
    pub fn batch_item(&self, index: usize) -> Result<Self> {
        let n = self.shape[0];
        if index >= n {
            return Err(Error::shape("batch_item", format!("index {index} out of {n}")));
        }
        let stride = self.data.len() / n;
        let mut shape = self.shape.clone();
        shape[0] = 1;
        Ok(Self { shape, data: self.data[index * stride..(index + 1) * stride].to_vec() })
    }

    /// Concatenates tensors along the leading axis.
    pub fn stack(items: &[Self]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::shape("stack", "no tensors to stack".into()))?;
        let tail = &first.shape[1..];
        let mut data = Vec::with_capacity(items.iter().map(|t| t.len()).sum());
        let mut n = 0;
        for t in items {
            if &t.shape[1..] != tail {
                return Err(Error::shape(
                    "stack",
                    format!("{:?} vs {:?}", t.shape, first.shape),
                ));
            }
            n += t.shape[0];
            data.extend_from_slice(&t.data);
        }
        let mut shape = first.shape.clone();
        shape[0] = n;
        Ok(Self { shape, data })
    }
}

pub(crate) fn to_f64_buf<T: Real>(t: &Tensor<T>) -> Vec<f64> {
    t.data.iter().map(|v| v.to_f64()).collect()
}

pub(crate) fn from_f64_buf<T: Real>(shape: &[usize], buf: &[f64], op: &'static str) -> Result<Tensor<T>> {
    Tensor::new(shape, buf.iter().map(|&v| T::from_f64(v)).collect())?.ensure_finite(op)
}
