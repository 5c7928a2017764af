use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Row-major boolean grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    h: usize,
    w: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(h: usize, w: usize, bits: Vec<bool>) -> Result<Self> {
        if h == 0 || w == 0 || bits.len() != h * w {
            return Err(Error::shape("BinaryMask", format!("{h}x{w} with {} bits", bits.len())));
        }
        Ok(Self { h, w, bits })
    }

    pub fn empty(h: usize, w: usize) -> Self {
        assert!(h > 0 && w > 0, "mask dimensions must be positive");
        Self { h, w, bits: vec![false; h * w] }
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.w + c]
    }

    /// Out-of-range coordinates read as background.
    pub fn get_signed(&self, r: i64, c: i64) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.h && (c as usize) < self.w && self.get(r as usize, c as usize)
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits[r * self.w + c] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// `h × w × 1` tensor of 0/1 values.
    pub fn to_tensor<T: Real>(&self) -> Tensor<T> {
        let data = self.bits.iter().map(|&b| T::from_f64(if b { 1.0 } else { 0.0 })).collect();
        Tensor::new(&[self.h, self.w, 1], data).expect("mask shape")
    }
}

/// Binarizes a single-channel probability map (`h×w×1` or `1×h×w×1`);
/// a bit is set iff `p ≥ tau`.
pub fn threshold_map<T: Real>(prob_map: &Tensor<T>, tau: f64) -> Result<BinaryMask> {
    let (h, w) = match *prob_map.shape() {
        [h, w, 1] | [1, h, w, 1] => (h, w),
        _ => {
            return Err(Error::shape(
                "threshold_map",
                format!("expected h×w×1, got {:?}", prob_map.shape()),
            ))
        }
    };
    let bits = prob_map.data().iter().map(|&p| p.to_f64() >= tau).collect();
    BinaryMask::new(h, w, bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_inclusive() {
        let p = Tensor::<f32>::new(&[2, 2, 1], vec![0.4, 0.6, 0.5, 0.7]).unwrap();
        let m = threshold_map(&p, 0.5).unwrap();
        assert_eq!(m.bits(), &[false, true, true, true]);
        assert_eq!(threshold_map(&p, 0.9).unwrap().count(), 0);
        assert_eq!(threshold_map(&p, 0.0).unwrap().count(), 4);
    }

    #[test]
    fn threshold_rejects_multichannel() {
        assert!(threshold_map(&Tensor::<f32>::zeros(&[2, 2, 3]), 0.5).is_err());
    }
}
