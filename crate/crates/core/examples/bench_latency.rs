//! Single-image inference latency of the reference network.
//!
//! ```text
//! cargo run --release --example bench_latency -- [iterations]
//! ```

use idseg::eval::bench_inference;
use idseg::nn::{Model, ModelConfig};

fn main() -> anyhow::Result<()> {
    let iters = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50);
    let model = Model::init(ModelConfig::reference(), 42)?;
    let t = bench_inference(&model, iters)?;
    println!("{iters} runs: mean {:.2} ms, p50 {:.2} ms, p95 {:.2} ms", t.mean_ms, t.p50_ms, t.p95_ms);

    // half the input side, roughly a quarter of the work
    let small = ModelConfig::encoder_decoder((64, 64, 3), &[16, 24, 32, 48], &[48, 16], &[32, 24, 16, 8])?;
    let t = bench_inference(&Model::init(small, 42)?, iters)?;
    println!("64x64 input: mean {:.2} ms", t.mean_ms);
    Ok(())
}
