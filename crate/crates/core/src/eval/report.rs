use std::path::Path;

use serde::Serialize;

use super::detect::{timed_detect, Segmenter};
use crate::data::{load_image, rasterize_quad, DatasetRecord};
use crate::error::{Error, Result};
use crate::geometry::{quad_iou, Quad, SelectParams};
use crate::nn::{Confusion, PixelMetrics, METRIC_THRESHOLD};

/// Outcome for one evaluated record.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub record: DatasetRecord,
    /// In original-image coordinates.
    pub predicted: Option<Quad>,
    /// 0 when nothing was predicted.
    pub iou: f64,
    pub latency_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

impl Timing {
    /// Mean and nearest-rank percentiles.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = |p: f64| sorted[((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
        Some(Self {
            mean_ms: samples.iter().sum::<f64>() / samples.len() as f64,
            p50_ms: rank(0.5),
            p95_ms: rank(0.95),
        })
    }
}

/// A record that could not be evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub path: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub detections: Vec<Detection>,
    pub failures: Vec<Failure>,
    /// `(threshold, accuracy)` rows.
    pub curve: Vec<(f64, f64)>,
    pub pixel: PixelMetrics,
    pub confusion: Confusion,
    pub timing: Timing,
}

impl EvalReport {
    /// Accuracy at the grid point closest to `threshold`.
    pub fn accuracy_at(&self, threshold: f64) -> Option<f64> {
        self.curve
            .iter()
            .min_by(|a, b| (a.0 - threshold).abs().total_cmp(&(b.0 - threshold).abs()))
            .map(|&(_, acc)| acc)
    }

    pub fn write_curve_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        write_curve_csv(&self.curve, out)
    }
}

pub const CURVE_HEADER: [&str; 2] = ["threshold", "accuracy"];

pub fn write_curve_csv<W: std::io::Write>(curve: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(CURVE_HEADER).map_err(io)?;
    for &(t, a) in curve {
        w.write_record([format!("{t:.2}"), a.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// `0, step, 2·step, …` strictly below 1.
pub fn threshold_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument(format!("IoU step {step} not in (0, 1]")));
    }
    let mut out = Vec::new();
    for k in 0.. {
        let t = (k as f64 * step * 1e9).round() / 1e9;
        if t >= 1.0 - 1e-9 {
            break;
        }
        out.push(t);
    }
    Ok(out)
}

/// Fraction of detections with `iou ≥ τ` for each threshold; misses count
/// as IoU 0, so τ = 0 always gives 1.0.
pub fn accuracy_vs_iou_curve(ious: &[f64], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if ious.is_empty() {
        return Err(Error::EmptyDataset("detections"));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) || thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidArgument("thresholds must be strictly increasing within [0, 1]".into()));
    }
    let n = ious.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| (t, ious.iter().filter(|&&iou| iou >= t).count() as f64 / n))
        .collect())
}

/// Runs the detection pipeline on every record and aggregates the IoU curve,
/// pixel metrics at network resolution, and per-image latency.
///
/// Records whose image cannot be loaded are listed in `failures` and left out
/// of every aggregate.
pub fn evaluate(
    segmenter: &impl Segmenter,
    records: &[DatasetRecord],
    data_root: impl AsRef<Path>,
    thresholds: &[f64],
    params: SelectParams,
) -> Result<EvalReport> {
    let (nh, nw) = segmenter.input_size();
    let mut detections = Vec::with_capacity(records.len());
    let mut failures = Vec::new();
    let mut confusion = Confusion::default();
    for record in records {
        let image = match load_image(data_root.as_ref().join(&record.path)) {
            Ok(img) => img,
            Err(e) => {
                failures.push(Failure { path: record.path.clone(), message: e.to_string() });
                continue;
            }
        };
        let (h, w) = (image.shape()[0], image.shape()[1]);
        let (det, latency_ms) = timed_detect(segmenter, &image, params)?;
        let truth_small = record.quad.scale(nw as f64 / w as f64, nh as f64 / h as f64);
        let target = rasterize_quad(&truth_small, nh, nw);
        confusion.add(&Confusion::from_maps(&det.prob_map, &target, METRIC_THRESHOLD)?);
        let iou = det.quad.as_ref().map_or(0.0, |q| quad_iou(q, &record.quad));
        detections.push(Detection { record: record.clone(), predicted: det.quad, iou, latency_ms });
    }
    let ious: Vec<f64> = detections.iter().map(|d| d.iou).collect();
    let curve = accuracy_vs_iou_curve(&ious, thresholds)?;
    let latencies: Vec<f64> = detections.iter().map(|d| d.latency_ms).collect();
    Ok(EvalReport {
        curve,
        pixel: confusion.metrics(),
        confusion,
        timing: Timing::from_samples(&latencies).expect("non-empty"),
        detections,
        failures,
    })
}
