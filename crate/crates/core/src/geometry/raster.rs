use super::quad::Point;

/// Even-odd point-in-polygon test; points on an edge count as inside.
pub fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let on_line = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) == 0.0;
        let in_box = p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y);
        if on_line && in_box {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
    }
    inside
}

/// Fills `[lo, hi]` (in pixel-center x coordinates) into one mask row.
fn fill_span(row: &mut [bool], lo: f64, hi: f64) {
    let w = row.len() as i64;
    let first = ((lo - 0.5).ceil() as i64).max(0);
    let last = ((hi - 0.5).floor() as i64).min(w - 1);
    if first > last {
        // the rounded bounds can still be off by one around exact hits
        for c in (first - 1).max(0)..=(last + 1).min(w - 1) {
            let cx = c as f64 + 0.5;
            if cx >= lo && cx <= hi {
                row[c as usize] = true;
            }
        }
        return;
    }
    let mut first = first;
    while first > 0 && (first - 1) as f64 + 0.5 >= lo {
        first -= 1;
    }
    while first <= last && (first as f64 + 0.5) < lo {
        first += 1;
    }
    let mut last = last;
    while last < w - 1 && (last + 1) as f64 + 0.5 <= hi {
        last += 1;
    }
    while last >= first && (last as f64 + 0.5) > hi {
        last -= 1;
    }
    for c in first..=last {
        row[c as usize] = true;
    }
}

/// Scanline rasterization of a polygon on an `h × w` pixel grid.
///
/// A pixel is set iff its center lies inside the polygon under the even-odd
/// rule, or exactly on one of its edges. Row-major output.
pub fn fill_polygon(poly: &[Point], h: usize, w: usize) -> Vec<bool> {
    let mut mask = vec![false; h * w];
    let n = poly.len();
    if n == 0 || h == 0 || w == 0 {
        return mask;
    }
    let ymin = poly.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let ymax = poly.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    if !ymin.is_finite() || !ymax.is_finite() {
        return mask;
    }
    let r0 = ((ymin - 0.5).floor().max(0.0) as usize).min(h);
    let r1 = ((ymax - 0.5).ceil().max(-1.0) + 1.0).min(h as f64) as usize;
    let mut xs = Vec::with_capacity(n);
    for r in r0..r1 {
        let py = r as f64 + 0.5;
        let row = &mut mask[r * w..(r + 1) * w];
        xs.clear();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a.y > py) != (b.y > py) {
                xs.push((b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x);
            }
            // points exactly on an edge
            if py >= a.y.min(b.y) && py <= a.y.max(b.y) {
                if a.y == b.y {
                    fill_span(row, a.x.min(b.x), a.x.max(b.x));
                } else {
                    let x = (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x;
                    fill_span(row, x, x);
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            fill_span(row, pair[0], pair[1]);
        }
    }
    mask
}
