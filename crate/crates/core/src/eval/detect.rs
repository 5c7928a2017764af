use std::time::Instant;

use serde::Serialize;

use crate::data::resize_bilinear;
use crate::error::{Error, Result};
use crate::geometry::{extract_contours, select_document_quad, threshold_map, Quad, SelectParams};
use crate::nn::Model;
use crate::tensor::Tensor;

/// Probability used to binarize the network output.
pub const MAP_THRESHOLD: f64 = 0.5;

/// Anything that maps a network-sized `h × w × 3` image to an `h × w × 1`
/// probability map.
pub trait Segmenter {
    /// `(height, width)` of the expected input.
    fn input_size(&self) -> (usize, usize);
    fn predict(&self, image: &Tensor) -> Result<Tensor>;
}

impl Segmenter for Model {
    fn input_size(&self) -> (usize, usize) {
        Model::input_size(self)
    }

    fn predict(&self, image: &Tensor) -> Result<Tensor> {
        let shape = image.shape().to_vec();
        let batch = image.clone().reshape(&[1, shape[0], shape[1], shape[2]])?;
        let (prob, _) = self.forward(&batch, false)?;
        prob.reshape(&[shape[0], shape[1], 1])
    }
}

/// Result of running the pipeline on one image.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleDetection {
    /// Document corners in the input image's pixel coordinates.
    pub quad: Option<Quad>,
    /// Network-resolution probability map.
    pub prob_map: Tensor,
}

/// Resize → predict → threshold → contours → quad selection → rescale.
pub fn detect_single(
    segmenter: &impl Segmenter,
    image: &Tensor,
    params: SelectParams,
) -> Result<SingleDetection> {
    let (h, w) = match *image.shape() {
        [h, w, 3] => (h, w),
        _ => return Err(Error::shape("detect_single", format!("expected h×w×3, got {:?}", image.shape()))),
    };
    let (nh, nw) = segmenter.input_size();
    let small = resize_bilinear(image, nh, nw)?;
    let prob_map = segmenter.predict(&small)?;
    let quad = quad_from_map(&prob_map, params)?.map(|q| q.scale(w as f64 / nw as f64, h as f64 / nh as f64));
    Ok(SingleDetection { quad, prob_map })
}

/// Quad selection on an `h × w × 1` probability map, in map coordinates.
pub fn quad_from_map(prob_map: &Tensor, params: SelectParams) -> Result<Option<Quad>> {
    let mask = threshold_map(prob_map, MAP_THRESHOLD)?;
    let contours = extract_contours(&mask);
    Ok(select_document_quad(&contours, mask.height(), mask.width(), params))
}

/// `{"found", "quad", "latency_ms"}` report of a single detection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionJson {
    pub found: bool,
    pub quad: Option<[[f64; 2]; 4]>,
    pub latency_ms: f64,
}

impl DetectionJson {
    pub fn new(quad: Option<&Quad>, latency_ms: f64) -> Self {
        Self {
            found: quad.is_some(),
            quad: quad.map(|q| q.vertices().map(|p| [p.x, p.y])),
            latency_ms,
        }
    }
}

/// Runs [`detect_single`] and measures its wall-clock time in milliseconds.
pub fn timed_detect(
    segmenter: &impl Segmenter,
    image: &Tensor,
    params: SelectParams,
) -> Result<(SingleDetection, f64)> {
    let start = Instant::now();
    let det = detect_single(segmenter, image, params)?;
    Ok((det, start.elapsed().as_secs_f64() * 1e3))
}
