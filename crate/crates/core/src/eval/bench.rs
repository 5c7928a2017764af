use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::detect::{detect_single, Segmenter};
use super::report::Timing;
use crate::error::{Error, Result};
use crate::geometry::SelectParams;
use crate::tensor::Tensor;

pub const MIN_BENCH_ITERATIONS: usize = 10;

/// Wall-clock latency of the full detection pipeline (resize, forward,
/// post-processing) on a fixed random image of the segmenter's input size.
/// One warm-up run is discarded.
pub fn bench_inference(segmenter: &impl Segmenter, iterations: usize) -> Result<Timing> {
    if iterations < MIN_BENCH_ITERATIONS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_BENCH_ITERATIONS} iterations, got {iterations}"
        )));
    }
    let (h, w) = segmenter.input_size();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let image = Tensor::from_fn(&[h, w, 3], |_| rng.gen_range(0.0f32..1.0));
    detect_single(segmenter, &image, SelectParams::default())?;
    let mut samples = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let start = Instant::now();
        std::hint::black_box(detect_single(segmenter, &image, SelectParams::default())?);
        samples.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(Timing::from_samples(&samples).expect("iterations ≥ 10"))
}
