use crate::error::{Error, Result};
use crate::geometry::Quad;
use crate::tensor::Tensor;

pub const OVERLAY_COLOR: [f32; 3] = [0.0, 1.0, 0.0];

/// Copy of an `h × w × 3` image with the quad outlined by a 2-pixel
/// Bresenham polyline.
pub fn draw_quad_overlay(image: &Tensor, quad: &Quad, color: [f32; 3]) -> Result<Tensor> {
    let (h, w) = match *image.shape() {
        [h, w, 3] => (h as i64, w as i64),
        _ => return Err(Error::shape("draw_quad_overlay", format!("expected h×w×3, got {:?}", image.shape()))),
    };
    let mut out = image.clone();
    let data = out.data_mut();
    let mut plot = |x: i64, y: i64| {
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let (px, py) = (x + dx, y + dy);
            if (0..w).contains(&px) && (0..h).contains(&py) {
                let i = ((py * w + px) * 3) as usize;
                data[i..i + 3].copy_from_slice(&color);
            }
        }
    };
    let v = quad.vertices();
    for i in 0..4 {
        let (a, b) = (v[i], v[(i + 1) % 4]);
        let clampi = |f: f64| f.round().clamp(-1e6, 1e6) as i64;
        let (mut x0, mut y0, x1, y1) = (clampi(a.x), clampi(a.y), clampi(b.x), clampi(b.y));
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let mut err = dx + dy;
        loop {
            plot(x0, y0);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outline_hits_corners_only_on_border() {
        let img = Tensor::zeros(&[20, 20, 3]);
        let q = Quad::from_coords([2.0, 2.0, 15.0, 2.0, 15.0, 12.0, 2.0, 12.0]);
        let out = draw_quad_overlay(&img, &q, OVERLAY_COLOR).unwrap();
        let green = |x: usize, y: usize| out.data()[(y * 20 + x) * 3 + 1] == 1.0;
        assert!(green(2, 2) && green(15, 12) && green(8, 2) && green(8, 3));
        assert!(!green(8, 7));
        assert!(!green(0, 0));
    }

    #[test]
    fn clipped_quad_does_not_panic() {
        let img = Tensor::zeros(&[10, 10, 3]);
        let q = Quad::from_coords([-50.0, -50.0, 50.0, -50.0, 50.0, 50.0, -50.0, 50.0]);
        assert!(draw_quad_overlay(&img, &q, OVERLAY_COLOR).unwrap().data().iter().all(|&v| v == 0.0));
    }
}
