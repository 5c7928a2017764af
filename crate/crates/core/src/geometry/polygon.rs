use super::quad::{Point, Quad};
use super::raster::fill_polygon;
use crate::error::{Error, Result};

/// Side of the grid used by [`quad_iou_raster`].
pub const RASTER_IOU_GRID: usize = 1024;

/// Shoelace sum `Σ (x_i·y_{i+1} − x_{i+1}·y_i) / 2`.
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let (p, q) = (points[i], points[(i + 1) % n]);
        s += p.x * q.y - q.x * p.y;
    }
    s / 2.0
}

pub fn polygon_area(points: &[Point]) -> f64 {
    signed_area(points).abs()
}

/// Length of the closed polyline through `points`.
pub fn polygon_perimeter(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    (0..n).map(|i| points[i].dist(points[(i + 1) % n])).sum()
}

#[inline]
fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// True iff every nonzero turn between consecutive edges has the same sign.
/// Collinear and repeated points are tolerated.
pub fn is_convex(points: &[Point]) -> bool {
    let n = points.len();
    let mut sign = 0.0f64;
    for i in 0..n {
        let c = cross(points[i], points[(i + 1) % n], points[(i + 2) % n]);
        if c != 0.0 {
            if sign != 0.0 && c.signum() != sign {
                return false;
            }
            sign = c.signum();
        }
    }
    true
}

fn oriented(points: &[Point]) -> Vec<Point> {
    let mut v = points.to_vec();
    if signed_area(&v) < 0.0 {
        v.reverse();
    }
    v
}

/// Sutherland–Hodgman intersection of two convex polygons.
///
/// The result has positive orientation and is empty when the polygons do not
/// overlap. Either input may be given in either winding.
pub fn convex_clip(subject: &[Point], clip: &[Point]) -> Result<Vec<Point>> {
    if !is_convex(subject) || !is_convex(clip) {
        return Err(Error::InvalidArgument("convex_clip needs convex polygons".into()));
    }
    let clip = oriented(clip);
    let mut out = oriented(subject);
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % m]);
        let input = std::mem::take(&mut out);
        let n = input.len();
        for j in 0..n {
            let (p, q) = (input[j], input[(j + 1) % n]);
            let (dp, dq) = (cross(a, b, p), cross(a, b, q));
            if dp >= 0.0 {
                out.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                out.push(Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
            }
        }
    }
    if polygon_area(&out) == 0.0 {
        out.clear();
    }
    Ok(out)
}

fn iou_from_areas(inter: f64, a: f64, b: f64) -> f64 {
    let union = a + b - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Intersection over union. Exact for convex quads; otherwise counted on a
/// [`RASTER_IOU_GRID`]² grid over the joint bounding box. Two degenerate
/// quads give 0.
pub fn quad_iou(a: &Quad, b: &Quad) -> f64 {
    let (pa, pb) = (a.vertices(), b.vertices());
    if !(is_convex(pa) && is_convex(pb)) {
        return quad_iou_raster(a, b);
    }
    let (area_a, area_b) = (a.area(), b.area());
    if area_a == 0.0 || area_b == 0.0 {
        return 0.0;
    }
    let inter = convex_clip(pa, pb).map(|p| polygon_area(&p)).unwrap_or(0.0);
    iou_from_areas(inter, area_a, area_b)
}

/// IoU by pixel counting on a square grid fitted to the joint bounding box.
pub fn quad_iou_raster(a: &Quad, b: &Quad) -> f64 {
    let all = a.vertices().iter().chain(b.vertices());
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in all {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    if !(x1 > x0 && y1 > y0) {
        return 0.0;
    }
    let n = RASTER_IOU_GRID;
    let (sx, sy) = (n as f64 / (x1 - x0), n as f64 / (y1 - y0));
    let to_grid = |q: &Quad| q.vertices().map(|p| Point::new((p.x - x0) * sx, (p.y - y0) * sy));
    let ma = fill_polygon(&to_grid(a), n, n);
    let mb = fill_polygon(&to_grid(b), n, n);
    let (mut ca, mut cb, mut ci) = (0usize, 0usize, 0usize);
    for (&u, &v) in ma.iter().zip(&mb) {
        ca += u as usize;
        cb += v as usize;
        ci += (u && v) as usize;
    }
    iou_from_areas(ci as f64, ca as f64, cb as f64)
}
