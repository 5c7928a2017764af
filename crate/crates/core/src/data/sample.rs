use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::image::{load_image, resize_bilinear};
use super::manifest::DatasetRecord;
use crate::error::{Error, Result};
use crate::geometry::{fill_polygon, Quad};
use crate::tensor::Tensor;

/// Side of the square network input.
pub const NET_SIZE: usize = 128;

/// A network-ready training example.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// `NET_SIZE × NET_SIZE × 3`, values in [0, 1].
    pub image: Tensor,
    /// `NET_SIZE × NET_SIZE × 1` of {0, 1}; the rasterization of `quad_scaled`.
    pub mask: Tensor,
    pub quad_scaled: Quad,
    pub record: DatasetRecord,
}

/// `(x, y) → (x·sx, y·sy)`, vertex order preserved.
pub fn scale_quad(quad: &Quad, sx: f64, sy: f64) -> Quad {
    quad.scale(sx, sy)
}

/// `h × w × 1` mask of pixels whose centers lie inside or on `quad`.
pub fn rasterize_quad(quad: &Quad, h: usize, w: usize) -> Tensor {
    let bits = fill_polygon(quad.vertices(), h, w);
    Tensor::new(&[h, w, 1], bits.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect()).expect("mask shape")
}

/// Loads, resizes to the network input size and rasterizes the ground truth.
pub fn make_sample(record: &DatasetRecord, data_root: impl AsRef<Path>) -> Result<Sample> {
    make_sample_sized(record, data_root, NET_SIZE)
}

pub fn make_sample_sized(record: &DatasetRecord, data_root: impl AsRef<Path>, size: usize) -> Result<Sample> {
    let path = data_root.as_ref().join(&record.path);
    let full = load_image(&path)?;
    let (h, w) = (full.shape()[0], full.shape()[1]);
    let image = resize_bilinear(&full, size, size)?;
    let quad_scaled = scale_quad(&record.quad, size as f64 / w as f64, size as f64 / h as f64);
    let mask = rasterize_quad(&quad_scaled, size, size);
    Ok(Sample { image, mask, quad_scaled, record: record.clone() })
}

impl Sample {
    /// A two-tone image with the document region bright on a dark background.
    #[cfg(test)]
    pub(crate) fn synthetic_flat(quad: Quad, h: usize, w: usize) -> Self {
        let mask = rasterize_quad(&quad, h, w);
        let image = Tensor::from_fn(&[h, w, 3], |i| if mask.data()[i / 3] > 0.5 { 0.9 } else { 0.1 });
        let record = DatasetRecord { path: "<memory>".into(), quad, part: 1, group: String::new() };
        Self { image, mask, quad_scaled: quad, record }
    }
}

/// Mini-batches of stacked images and masks.
pub struct Batches<'a> {
    samples: &'a [Sample],
    order: Vec<usize>,
    batch_size: usize,
    next: usize,
}

/// Splits `samples` into batches of `batch_size` (the last may be short),
/// in a seeded random order when `shuffle` is set.
pub fn batches(samples: &[Sample], batch_size: usize, seed: u64, shuffle: bool) -> Result<Batches<'_>> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    if shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok(Batches { samples, order, batch_size, next: 0 })
}

impl Batches<'_> {
    /// Sample indices in iteration order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

fn stack_items<'a>(items: impl Iterator<Item = &'a Tensor> + Clone) -> Result<Tensor> {
    let first = items.clone().next().expect("non-empty batch");
    let mut shape = vec![0];
    shape.extend_from_slice(first.shape());
    let mut data = Vec::new();
    for t in items {
        if t.shape() != first.shape() {
            return Err(Error::shape("batches", format!("{:?} vs {:?}", t.shape(), first.shape())));
        }
        data.extend_from_slice(t.data());
        shape[0] += 1;
    }
    Tensor::new(&shape, data)
}

impl Iterator for Batches<'_> {
    type Item = Result<(Tensor, Tensor)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.order.len() {
            return None;
        }
        let end = (self.next + self.batch_size).min(self.order.len());
        let idx = &self.order[self.next..end];
        self.next = end;
        let picked = idx.iter().map(|&i| &self.samples[i]);
        Some(
            stack_items(picked.clone().map(|s| &s.image))
                .and_then(|x| Ok((x, stack_items(picked.map(|s| &s.mask))?))),
        )
    }
}
