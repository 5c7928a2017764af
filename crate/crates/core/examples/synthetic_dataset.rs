//! Generates a small synthetic dataset and prints what ended up in the manifest.
//!
//! ```text
//! cargo run --example synthetic_dataset -- /tmp/idseg-synth
//! ```

use idseg::data::{generate_synthetic, make_sample, read_manifest, SynthParams};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/example-synth".into());
    let params = SynthParams { count_train: 16, count_test: 4, image_size: 160, ..SynthParams::default() };
    let manifest = generate_synthetic(&params, &out)?;
    let records = read_manifest(&manifest)?;
    println!("{} records in {}", records.len(), manifest.display());

    for r in records.iter().take(5) {
        let c = r.quad.coords();
        println!(
            "part {} {:<24} ({:6.1},{:6.1}) ({:6.1},{:6.1}) ({:6.1},{:6.1}) ({:6.1},{:6.1})",
            r.part, r.path, c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]
        );
    }

    // what the network actually sees: a 128x128 image and the rasterized quad
    let sample = make_sample(&records[0], &out)?;
    let covered = sample.mask.data().iter().filter(|&&v| v > 0.5).count();
    println!(
        "sample 0: image {:?}, mask covers {covered} px, scaled quad area {:.1}",
        sample.image.shape(),
        sample.quad_scaled.area()
    );
    Ok(())
}
