use serde::{Deserialize, Serialize};

use super::polygon::signed_area;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Four vertices in pixel coordinates, stored with non-negative signed
/// shoelace area (the standard formula evaluated in x-right/y-down axes).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    vertices: [Point; 4],
}

impl Quad {
    /// Keeps the first vertex and reverses the winding if the signed area is
    /// negative.
    pub fn new(vertices: [Point; 4]) -> Self {
        let [a, b, c, d] = vertices;
        if signed_area(&vertices) < 0.0 {
            Self { vertices: [a, d, c, b] }
        } else {
            Self { vertices }
        }
    }

    pub fn from_coords(coords: [f64; 8]) -> Self {
        let p = |i: usize| Point::new(coords[2 * i], coords[2 * i + 1]);
        Self::new([p(0), p(1), p(2), p(3)])
    }

    pub fn vertices(&self) -> &[Point; 4] {
        &self.vertices
    }

    pub fn coords(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (i, p) in self.vertices.iter().enumerate() {
            out[2 * i] = p.x;
            out[2 * i + 1] = p.y;
        }
        out
    }

    /// Same polygon rotated to start at the vertex with the smallest `x + y`
    /// (the visual top-left corner for document-like shapes).
    pub fn canonical(&self) -> Self {
        let start = (0..4)
            .min_by(|&i, &j| {
                let (p, q) = (self.vertices[i], self.vertices[j]);
                (p.x + p.y).total_cmp(&(q.x + q.y))
            })
            .unwrap_or(0);
        let mut vertices = self.vertices;
        vertices.rotate_left(start);
        Self { vertices }
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    /// `(x, y) → (x·sx, y·sy)` for every vertex; the order is preserved.
    pub fn scale(&self, sx: f64, sy: f64) -> Self {
        Self::new(self.vertices.map(|p| Point::new(p.x * sx, p.y * sy)))
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.vertices.map(|p| Point::new(p.x + dx, p.y + dy)))
    }

    /// Largest distance between corresponding vertices, minimized over the
    /// four cyclic alignments.
    pub fn max_vertex_error(&self, other: &Quad) -> f64 {
        (0..4)
            .map(|shift| {
                (0..4)
                    .map(|i| self.vertices[i].dist(other.vertices[(i + shift) % 4]))
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    }
}
