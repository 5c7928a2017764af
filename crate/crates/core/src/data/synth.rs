use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::image::save_png;
use super::manifest::{write_manifest, DatasetRecord};
use crate::error::{Error, Result};
use crate::geometry::{fill_polygon, is_convex, Point, Quad};
use crate::tensor::Tensor;

pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    pub count_train: usize,
    pub count_test: usize,
    pub image_size: usize,
    pub seed: u64,
    /// 0..1: number of distractor rectangles and noise amplitude.
    pub clutter_level: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self { count_train: 512, count_test: 128, image_size: 128, seed: 42, clutter_level: 0.3 }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        if self.image_size < 32 {
            return Err(Error::InvalidArgument(format!("image size {} is below 32", self.image_size)));
        }
        if !(0.0..=1.0).contains(&self.clutter_level) {
            return Err(Error::InvalidArgument(format!("clutter level {} not in [0, 1]", self.clutter_level)));
        }
        Ok(())
    }
}

type Rgb = [f32; 3];

struct Canvas {
    size: usize,
    px: Vec<f32>,
}

impl Canvas {
    fn fill(&mut self, poly: &[Point], color: Rgb) {
        let bits = fill_polygon(poly, self.size, self.size);
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            self.px[3 * i..3 * i + 3].copy_from_slice(&color);
        }
    }
}

fn tinted(rng: &mut ChaCha8Rng, lum: f64) -> Rgb {
    [0, 1, 2].map(|_| (lum + rng.gen_range(-0.08..0.08)).clamp(0.0, 1.0) as f32)
}

/// Bilinear map of unit-square coordinates onto the quad.
fn warp(q: &[Point; 4], u: f64, v: f64) -> Point {
    let top = (q[0].x + (q[1].x - q[0].x) * u, q[0].y + (q[1].y - q[0].y) * u);
    let bot = (q[3].x + (q[2].x - q[3].x) * u, q[3].y + (q[2].y - q[3].y) * u);
    Point::new(top.0 + (bot.0 - top.0) * v, top.1 + (bot.1 - top.1) * v)
}

fn document_quad(rng: &mut ChaCha8Rng, size: f64) -> Quad {
    loop {
        let w = rng.gen_range(0.25..0.70) * size;
        let h = (w * rng.gen_range(0.55..0.9)).min(0.9 * size);
        let (jx, jy) = (0.1 * w, 0.1 * h);
        let x0 = rng.gen_range(jx..(size - w - jx).max(jx + 1e-9));
        let y0 = rng.gen_range(jy..(size - h - jy).max(jy + 1e-9));
        let corners = [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)]
            .map(|(x, y)| Point::new(x + rng.gen_range(-jx..=jx), y + rng.gen_range(-jy..=jy)));
        let q = Quad::new(corners);
        if is_convex(q.vertices()) && q.area() >= 0.05 * size * size {
            return q;
        }
    }
}

/// Renders one scene and returns the image and the document corners.
fn render_scene(rng: &mut ChaCha8Rng, size: usize, clutter: f64) -> (Tensor, Quad) {
    let s = size as f64;
    let doc_lum: f64 = rng.gen_range(0.55..0.95);
    let bg_lum = if doc_lum - 0.35 > 0.0 && (doc_lum + 0.35 > 1.0 || rng.gen_bool(0.7)) {
        rng.gen_range(0.0..doc_lum - 0.35)
    } else {
        rng.gen_range((doc_lum + 0.35).min(1.0)..=1.0)
    };
    let bg = tinted(rng, bg_lum);
    let mut canvas = Canvas { size, px: bg.repeat(size * size) };

    let distractors = (clutter * 6.0).round() as usize;
    for _ in 0..distractors {
        let (w, h) = (rng.gen_range(0.08..0.25) * s, rng.gen_range(0.08..0.25) * s);
        let (x, y) = (rng.gen_range(-0.1 * s..s), rng.gen_range(-0.1 * s..s));
        let color = [0, 1, 2].map(|_| rng.gen_range(0.0f32..1.0));
        canvas.fill(&[Point::new(x, y), Point::new(x + w, y), Point::new(x + w, y + h), Point::new(x, y + h)], color);
    }

    let quad = document_quad(rng, s);
    canvas.fill(quad.vertices(), tinted(rng, doc_lum));
    let ink_lum = rng.gen_range(0.0..0.2);
    let ink = tinted(rng, ink_lum);
    let v = quad.vertices();
    let lines = rng.gen_range(3..7);
    for k in 0..lines {
        let v0 = 0.15 + 0.7 * k as f64 / lines as f64;
        let thick = rng.gen_range(0.03..0.06);
        let u0 = rng.gen_range(0.08..0.4);
        let u1 = rng.gen_range(u0 + 0.15..0.92);
        canvas.fill(&[warp(v, u0, v0), warp(v, u1, v0), warp(v, u1, v0 + thick), warp(v, u0, v0 + thick)], ink);
    }

    let amp = 0.02 + 0.1 * clutter;
    for p in canvas.px.iter_mut() {
        *p = (*p as f64 + rng.gen_range(-amp..=amp)).clamp(0.0, 1.0) as f32;
    }
    (Tensor::new(&[size, size, 3], canvas.px).expect("canvas shape"), quad)
}

/// Writes `count_train + count_test` seeded scenes under `out_dir/images`
/// and a manifest (part 1 = train, 2 = test) at `out_dir/manifest.csv`.
pub fn generate_synthetic(params: &SynthParams, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    params.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir.join("images"))?;
    let total = params.count_train + params.count_test;
    let mut records = Vec::with_capacity(total);
    for i in 0..total {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(i as u64);
        let (image, quad) = render_scene(&mut rng, params.image_size, params.clutter_level);
        let (split, part) = if i < params.count_train { ("train", 1) } else { ("test", 2) };
        let rel = format!("images/{split}_{i:05}.png");
        save_png(&image, out_dir.join(&rel))?;
        records.push(DatasetRecord { path: rel, quad, part, group: "synthetic".into() });
    }
    let manifest = out_dir.join(MANIFEST_NAME);
    write_manifest(&records, fs::File::create(&manifest)?)?;
    Ok(manifest)
}
