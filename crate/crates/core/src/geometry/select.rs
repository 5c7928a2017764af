use super::contour::Contour;
use super::polygon::{is_convex, polygon_area, polygon_perimeter};
use super::quad::{Point, Quad};
use super::simplify::simplify_polygon;

/// Filters applied to candidate contours.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectParams {
    /// Minimum quad area as a fraction of the mask area.
    pub min_area_frac: f64,
    /// Simplification tolerance as a fraction of the contour perimeter.
    pub epsilon_frac: f64,
    /// Outward shift of every edge of the selected quad, in pixels. Contours
    /// run through boundary pixel centers, half a pixel inside the region.
    pub edge_offset: f64,
}

impl Default for SelectParams {
    fn default() -> Self {
        Self { min_area_frac: 0.01, epsilon_frac: 0.02, edge_offset: 0.5 }
    }
}

/// Picks the document quad among the contours of a thresholded mask.
///
/// Each contour (as pixel centers) is simplified with a tolerance of
/// `epsilon_frac × perimeter`. Candidates must have exactly four vertices,
/// be convex and cover at least `min_area_frac × h × w`; the largest one is
/// returned in canonical order, in mask pixel coordinates, after moving its
/// edges outward by `edge_offset`.
pub fn select_document_quad(
    contours: &[Contour],
    mask_h: usize,
    mask_w: usize,
    params: SelectParams,
) -> Option<Quad> {
    let min_area = params.min_area_frac * (mask_h * mask_w) as f64;
    let mut best: Option<(f64, Quad)> = None;
    for contour in contours {
        if contour.points.len() < 4 {
            continue;
        }
        let centers = contour.centers();
        let eps = params.epsilon_frac * polygon_perimeter(&centers);
        if eps <= 0.0 {
            continue;
        }
        let simplified = simplify_polygon(&centers, eps);
        if simplified.len() != 4 || !is_convex(&simplified) {
            continue;
        }
        let area = polygon_area(&simplified);
        if area < min_area || area <= 0.0 {
            continue;
        }
        if best.as_ref().is_none_or(|(a, _)| area > *a) {
            let q = Quad::new([simplified[0], simplified[1], simplified[2], simplified[3]]);
            best = Some((area, q.canonical()));
        }
    }
    best.map(|(_, q)| offset_edges(&q, params.edge_offset).unwrap_or(q))
}

/// Moves every edge of a positively oriented convex quad outward by `d` and
/// intersects neighbouring edges. `None` when two neighbours are parallel.
fn offset_edges(q: &Quad, d: f64) -> Option<Quad> {
    if d == 0.0 {
        return Some(*q);
    }
    let v = q.vertices();
    let lines: Vec<(Point, Point)> = (0..4)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % 4]);
            let len = a.dist(b);
            let n = Point::new((b.y - a.y) / len * d, -(b.x - a.x) / len * d);
            (Point::new(a.x + n.x, a.y + n.y), Point::new(b.x - a.x, b.y - a.y))
        })
        .collect();
    let mut out = [Point::default(); 4];
    for i in 0..4 {
        let (p, r) = lines[(i + 3) % 4];
        let (s, t) = lines[i];
        let denom = r.x * t.y - r.y * t.x;
        if denom.abs() < 1e-9 * (r.x.hypot(r.y) * t.x.hypot(t.y)) {
            return None;
        }
        let k = ((s.x - p.x) * t.y - (s.y - p.y) * t.x) / denom;
        out[i] = Point::new(p.x + k * r.x, p.y + k * r.y);
    }
    Some(Quad::new(out))
}
