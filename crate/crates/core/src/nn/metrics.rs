use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// 2×2 pixel confusion matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

impl Confusion {
    /// Counts predictions `p ≥ threshold` against a {0, 1} target.
    pub fn from_maps<T: Real>(prob_map: &Tensor<T>, target: &Tensor<T>, threshold: f64) -> Result<Self> {
        if prob_map.shape() != target.shape() {
            return Err(Error::shape(
                "pixel_metrics",
                format!("{:?} vs {:?}", prob_map.shape(), target.shape()),
            ));
        }
        let mut c = Confusion::default();
        for (&p, &y) in prob_map.data().iter().zip(target.data()) {
            match (p.to_f64() >= threshold, y.to_f64() >= 0.5) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Precision and recall are 1.0 when their denominator is zero.
    pub fn metrics(&self) -> PixelMetrics {
        let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        PixelMetrics {
            accuracy: ratio(self.tp + self.tn, self.total()),
            precision: ratio(self.tp, self.tp + self.fp),
            recall: ratio(self.tp, self.tp + self.fn_),
        }
    }
}

pub fn pixel_metrics<T: Real>(prob_map: &Tensor<T>, target: &Tensor<T>, threshold: f64) -> Result<PixelMetrics> {
    Ok(Confusion::from_maps(prob_map, target, threshold)?.metrics())
}
