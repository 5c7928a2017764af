//! Runs the quad extraction pipeline on one image.
//!
//! With a model file and an image it runs the network; without arguments it
//! feeds a known-good probability map (the rasterized ground truth of a
//! generated scene) straight into contour tracing and simplification, which
//! shows the geometric half of the pipeline on its own.
//!
//! ```text
//! cargo run --example detect_quad -- model.idsg photo.png
//! cargo run --example detect_quad
//! ```

use idseg::data::{generate_synthetic, load_image, make_sample, read_manifest, SynthParams};
use idseg::eval::{detect_single, draw_quad_overlay, quad_from_map, OVERLAY_COLOR};
use idseg::geometry::{quad_iou, SelectParams};
use idseg::nn::load_model;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [model, image] = args.as_slice() {
        let model = load_model(model)?;
        let image = load_image(image)?;
        let det = detect_single(&model, &image, SelectParams::default())?;
        match det.quad {
            Some(q) => println!("corners: {:?}", q.coords()),
            None => println!("no document found"),
        }
        return Ok(());
    }

    let dir = tempfile::tempdir()?;
    let params = SynthParams { count_train: 4, count_test: 0, image_size: 200, seed: 3, ..SynthParams::default() };
    let records = read_manifest(generate_synthetic(&params, dir.path())?)?;
    for record in &records {
        let sample = make_sample(record, dir.path())?;
        let quad = quad_from_map(&sample.mask, SelectParams::default())?;
        match quad {
            Some(q) => println!(
                "{}: IoU {:.4}, max corner error {:.2} px",
                record.path,
                quad_iou(&q, &sample.quad_scaled),
                q.max_vertex_error(&sample.quad_scaled)
            ),
            None => println!("{}: no quad", record.path),
        }
    }

    let first = make_sample(&records[0], dir.path())?;
    if let Some(q) = quad_from_map(&first.mask, SelectParams::default())? {
        let out = std::env::temp_dir().join("idseg_detect_overlay.png");
        idseg::data::save_png(&draw_quad_overlay(&first.image, &q, OVERLAY_COLOR)?, &out)?;
        println!("overlay written to {}", out.display());
    }
    Ok(())
}
