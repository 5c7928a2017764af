//! Exact polygon IoU against a sampled estimate, and how per-image IoUs turn
//! into an accuracy-vs-threshold curve.

use idseg::eval::{accuracy_vs_iou_curve, threshold_grid};
use idseg::geometry::{quad_iou, quad_iou_raster, Quad};

fn main() -> anyhow::Result<()> {
    let truth = Quad::from_coords([20.0, 30.0, 100.0, 25.0, 105.0, 80.0, 18.0, 85.0]);
    let mut ious = Vec::new();
    for shift in [0.0, 2.0, 5.0, 10.0, 20.0, 40.0, 90.0] {
        let pred = truth.translate(shift, shift / 2.0);
        let exact = quad_iou(&truth, &pred);
        println!("shift {shift:>4}: exact {exact:.4}  raster {:.4}", quad_iou_raster(&truth, &pred));
        ious.push(exact);
    }
    // an image with no detection counts as IoU 0
    ious.push(0.0);

    println!("threshold,accuracy");
    for (t, acc) in accuracy_vs_iou_curve(&ious, &threshold_grid(0.1)?)? {
        println!("{t:.1},{acc:.3}");
    }
    Ok(())
}
