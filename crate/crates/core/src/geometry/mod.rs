//! Quadrilateral extraction from probability maps and exact polygon
//! area/intersection/IoU.
//!
//! Coordinates are `x` = column, `y` = row, origin at the top-left corner of
//! the image. Pixel `(r, c)` covers `[c, c+1) × [r, r+1)` and its center is
//! `(c + 0.5, r + 0.5)`.

mod contour;
mod mask;
mod polygon;
mod quad;
mod raster;
mod select;
mod simplify;

pub use contour::{extract_contours, Contour};
pub use mask::{threshold_map, BinaryMask};
pub use polygon::{
    convex_clip, is_convex, polygon_area, polygon_perimeter, quad_iou, quad_iou_raster,
    signed_area, RASTER_IOU_GRID,
};
pub use quad::{Point, Quad};
pub use raster::{fill_polygon, point_in_polygon};
pub use select::{select_document_quad, SelectParams};
pub use simplify::simplify_polygon;
