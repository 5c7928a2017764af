//! Manifests, image I/O, ground-truth masks, batching and synthetic scenes.

mod image;
mod manifest;
mod sample;
mod synth;

pub use self::image::{load_image, resize_bilinear, save_png};
pub use manifest::{manifest_to_string, parse_manifest, read_manifest, write_manifest, DatasetRecord, MANIFEST_COLUMNS};
pub use sample::{batches, make_sample, make_sample_sized, rasterize_quad, scale_quad, Batches, Sample, NET_SIZE};
pub use synth::{generate_synthetic, SynthParams, MANIFEST_NAME};
