use super::quad::Point;

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

/// Douglas–Peucker on an open polyline; both endpoints are kept.
pub(crate) fn simplify_open(points: &[Point], epsilon: f64) -> Vec<Point> {
    let n = points.len();
    if n <= 2 {
        return points.to_vec();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (a, b) = (points[lo], points[hi]);
        let (mut worst, mut at) = (-1.0, lo);
        for (i, &p) in points.iter().enumerate().take(hi).skip(lo + 1) {
            let d = seg_dist(p, a, b);
            if d > worst {
                worst = d;
                at = i;
            }
        }
        if worst > epsilon {
            keep[at] = true;
            stack.push((lo, at));
            stack.push((at, hi));
        }
    }
    points.iter().zip(&keep).filter(|(_, &k)| k).map(|(&p, _)| p).collect()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Indices of the two points furthest apart. The diameter is attained on the
/// convex hull, so only hull vertices are compared pairwise.
fn farthest_pair(points: &[Point]) -> (usize, usize) {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        let (p, q) = (points[i], points[j]);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)).then(i.cmp(&j))
    });
    let mut hull: Vec<usize> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let order: Box<dyn Iterator<Item = &usize>> =
            if pass == 0 { Box::new(idx.iter()) } else { Box::new(idx.iter().rev()) };
        for &i in order {
            while hull.len() >= start + 2
                && cross(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() < 2 {
        hull = vec![idx[0], *idx.last().unwrap()];
    }
    let (mut best, mut pair) = (-1.0, (0, 0));
    for (k, &i) in hull.iter().enumerate() {
        for &j in &hull[k + 1..] {
            let d = points[i].dist(points[j]);
            let cand = (i.min(j), i.max(j));
            if d > best || (d == best && cand < pair) {
                best = d;
                pair = cand;
            }
        }
    }
    pair
}

/// Douglas–Peucker on a closed polyline: split at the two farthest-apart
/// points, simplify both arcs, and rejoin.
///
/// The split points are kept unconditionally by the arc passes, so a final
/// sweep drops any vertex lying within `epsilon` of the segment joining its
/// neighbours.
pub fn simplify_polygon(points: &[Point], epsilon: f64) -> Vec<Point> {
    let n = points.len();
    if n <= 3 {
        return points.to_vec();
    }
    let (i, j) = farthest_pair(points);
    let arc1: Vec<Point> = points[i..=j].to_vec();
    let arc2: Vec<Point> = points[j..].iter().chain(&points[..=i]).copied().collect();
    let mut out = simplify_open(&arc1, epsilon);
    out.pop();
    let mut tail = simplify_open(&arc2, epsilon);
    tail.pop();
    out.extend(tail);
    while out.len() > 3 {
        let m = out.len();
        let (k, d) = (0..m)
            .map(|k| (k, seg_dist(out[k], out[(k + m - 1) % m], out[(k + 1) % m])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if d >= epsilon {
            break;
        }
        out.remove(k);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_point_near_a_corner_is_dropped() {
        // rectangle whose top-right corner carries a one-pixel notch
        let mut border = Vec::new();
        for x in 0..=30 {
            border.push(Point::new(x as f64, 0.0));
        }
        border.push(Point::new(31.0, 1.0));
        for y in 2..=15 {
            border.push(Point::new(31.0, y as f64));
        }
        for x in (0..31).rev() {
            border.push(Point::new(x as f64, 15.0));
        }
        for y in (1..15).rev() {
            border.push(Point::new(0.0, y as f64));
        }
        let out = simplify_polygon(&border, 1.8);
        assert_eq!(out.len(), 4, "{out:?}");
    }

    fn pts(c: &[(f64, f64)]) -> Vec<Point> {
        c.iter().map(|&p| p.into()).collect()
    }

    /// Border of an axis-aligned square with `n` points per side.
    fn square_border(n: usize) -> Vec<Point> {
        let s = n as f64;
        let mut v = Vec::new();
        for k in 0..n {
            v.push(Point::new(k as f64, 0.0));
        }
        for k in 0..n {
            v.push(Point::new(s, k as f64));
        }
        for k in 0..n {
            v.push(Point::new(s - k as f64, s));
        }
        for k in 0..n {
            v.push(Point::new(0.0, s - k as f64));
        }
        v
    }

    #[test]
    fn collinear_arc_keeps_endpoints() {
        let line = pts(&[(0., 0.), (1., 0.), (2., 0.), (3., 0.)]);
        assert_eq!(simplify_open(&line, 0.1), pts(&[(0., 0.), (3., 0.)]));
    }

    #[test]
    fn square_border_reduces_to_corners() {
        for n in [3, 5, 20] {
            let border = square_border(n);
            let out = simplify_polygon(&border, 1.5);
            assert_eq!(out.len(), 4, "n = {n}: {out:?}");
            let s = n as f64;
            for corner in pts(&[(0., 0.), (s, 0.), (s, s), (0., s)]) {
                assert!(out.contains(&corner));
            }
            // brute force: every dropped point is within epsilon of the chain
            for p in &border {
                let d = (0..4)
                    .map(|k| seg_dist(*p, out[k], out[(k + 1) % 4]))
                    .fold(f64::INFINITY, f64::min);
                assert!(d <= 1.5);
            }
        }
    }

    #[test]
    fn huge_epsilon_degenerates() {
        let out = simplify_polygon(&square_border(6), 1e6);
        assert!(out.len() <= 3);
    }

    #[test]
    fn farthest_pair_is_true_diameter() {
        let p = pts(&[(0., 0.), (5., 1.), (2., 7.), (-1., 3.), (4., 4.), (1., 1.)]);
        let (i, j) = farthest_pair(&p);
        let best = (0..p.len())
            .flat_map(|a| (0..p.len()).map(move |b| (a, b)))
            .map(|(a, b)| p[a].dist(p[b]))
            .fold(0.0, f64::max);
        assert_eq!(p[i].dist(p[j]), best);
    }
}
