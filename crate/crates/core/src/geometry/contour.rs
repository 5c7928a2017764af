use super::mask::BinaryMask;
use super::quad::Point;

/// Outer border of one 8-connected foreground component, as `(x, y)` pixel
/// indices in tracing order. The polyline is closed: the last point is
/// 8-adjacent to the first. Components of one or two pixels yield one or two
/// points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<(i64, i64)>,
}

impl Contour {
    /// Pixel centers in continuous image coordinates.
    pub fn centers(&self) -> Vec<Point> {
        self.points.iter().map(|&(x, y)| Point::new(x as f64 + 0.5, y as f64 + 0.5)).collect()
    }
}

/// Neighbor offsets `(dx, dy)` in clockwise order (y pointing down), from east.
const DIRS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn dir_of(from: (i64, i64), to: (i64, i64)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    DIRS.iter().position(|&o| o == d).expect("pixels must be 8-adjacent")
}

fn step(p: (i64, i64), dir: usize) -> (i64, i64) {
    (p.0 + DIRS[dir].0, p.1 + DIRS[dir].1)
}

/// Outer-border following from a component's topmost-leftmost pixel.
fn trace(mask: &BinaryMask, start: (i64, i64)) -> Vec<(i64, i64)> {
    let fg = |p: (i64, i64)| mask.get_signed(p.1, p.0);
    // West of the start pixel is background: search clockwise from there.
    let west = 4;
    let Some(first) = (0..8).map(|k| (west + k) % 8).find(|&d| fg(step(start, d))) else {
        return vec![start];
    };
    let last = step(start, first);
    let mut points = Vec::new();
    let (mut prev, mut cur) = (last, start);
    loop {
        // counterclockwise around `cur`, starting just after `prev`
        let back = dir_of(cur, prev);
        let next = (1..=8)
            .map(|k| step(cur, (back + 8 - k) % 8))
            .find(|&q| fg(q))
            .expect("traced pixel has a foreground neighbor");
        points.push(cur);
        if next == start && cur == last {
            return points;
        }
        prev = cur;
        cur = next;
    }
}

/// One outer contour per 8-connected foreground component, ordered by the
/// component's topmost-then-leftmost pixel. Holes are ignored.
pub fn extract_contours(mask: &BinaryMask) -> Vec<Contour> {
    let (h, w) = (mask.height(), mask.width());
    let mut seen = vec![false; h * w];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) || seen[r * w + c] {
                continue;
            }
            out.push(Contour { points: trace(mask, (c as i64, r as i64)) });
            // label the whole component so it is traced once
            seen[r * w + c] = true;
            stack.push((r, c));
            while let Some((pr, pc)) = stack.pop() {
                for (dx, dy) in DIRS {
                    let (nr, nc) = (pr as i64 + dy, pc as i64 + dx);
                    if mask.get_signed(nr, nc) {
                        let idx = nr as usize * w + nc as usize;
                        if !seen[idx] {
                            seen[idx] = true;
                            stack.push((nr as usize, nc as usize));
                        }
                    }
                }
            }
        }
    }
    out
}
