//! Detection pipeline, IoU accuracy curves, pixel metrics and latency.

mod bench;
mod detect;
mod overlay;
mod report;

pub use bench::{bench_inference, MIN_BENCH_ITERATIONS};
pub use detect::{detect_single, quad_from_map, timed_detect, DetectionJson, Segmenter, SingleDetection, MAP_THRESHOLD};
pub use overlay::{draw_quad_overlay, OVERLAY_COLOR};
pub use report::{
    accuracy_vs_iou_curve, evaluate, threshold_grid, write_curve_csv, Detection, EvalReport, Failure, Timing,
    CURVE_HEADER,
};
