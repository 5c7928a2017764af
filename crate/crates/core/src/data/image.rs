use std::path::Path;

use image::{ImageBuffer, ImageReader, Luma, Rgb};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn image_err(path: &Path, msg: impl ToString) -> Error {
    Error::Image { path: path.to_path_buf(), msg: msg.to_string() }
}

/// Loads a PNG or PNM file as an `h × w × 3` tensor in [0, 1].
/// Grayscale images are replicated to three channels.
pub fn load_image(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let img = ImageReader::open(path)
        .map_err(|e| image_err(path, e))?
        .with_guessed_format()
        .map_err(|e| image_err(path, e))?
        .decode()
        .map_err(|e| image_err(path, e))?
        .into_rgb8();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|v| v as f32 / 255.0).collect();
    Tensor::new(&[h as usize, w as usize, 3], data)
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an `h × w × 3` or `h × w × 1` tensor in [0, 1] as 8-bit PNG.
pub fn save_png(image: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (h, w, c) = match *image.shape() {
        [h, w, c] if c == 1 || c == 3 => (h as u32, w as u32, c),
        _ => return Err(Error::shape("save_png", format!("expected h×w×1 or h×w×3, got {:?}", image.shape()))),
    };
    let raw: Vec<u8> = image.data().iter().map(|&v| to_u8(v)).collect();
    let res = if c == 3 {
        ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, raw).expect("buffer size").save(path)
    } else {
        ImageBuffer::<Luma<u8>, _>::from_raw(w, h, raw).expect("buffer size").save(path)
    };
    res.map_err(|e| image_err(path, e))
}

/// Bilinear resize with pixel-center alignment: output `(r, c)` samples the
/// source at `((r + ½)·h/out_h − ½, (c + ½)·w/out_w − ½)`, clamped to the image.
pub fn resize_bilinear(image: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let (h, w, ch) = match *image.shape() {
        [h, w, c] => (h, w, c),
        _ => return Err(Error::shape("resize_bilinear", format!("expected h×w×c, got {:?}", image.shape()))),
    };
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument(format!("resize target {out_h}x{out_w}")));
    }
    if (out_h, out_w) == (h, w) {
        return Ok(image.clone());
    }
    let taps = |out: usize, src: usize| -> Vec<(usize, usize, f64)> {
        (0..out)
            .map(|i| {
                let s = ((i as f64 + 0.5) * src as f64 / out as f64 - 0.5).clamp(0.0, (src - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(src - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let rows = taps(out_h, h);
    let cols = taps(out_w, w);
    let src = image.data();
    let px = |r: usize, c: usize, k: usize| src[(r * w + c) * ch + k] as f64;
    let mut out = Vec::with_capacity(out_h * out_w * ch);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            for k in 0..ch {
                let top = px(r0, c0, k) * (1.0 - fx) + px(r0, c1, k) * fx;
                let bottom = px(r1, c0, k) * (1.0 - fx) + px(r1, c1, k) * fx;
                out.push((top * (1.0 - fy) + bottom * fy) as f32);
            }
        }
    }
    Tensor::new(&[out_h, out_w, ch], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ppm_red_and_pgm_gray() {
        let dir = tempfile::tempdir().unwrap();
        let ppm = dir.path().join("red.ppm");
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend([255u8, 0, 0].repeat(4));
        std::fs::write(&ppm, bytes).unwrap();
        let t = load_image(&ppm).unwrap();
        assert_eq!(t.shape(), &[2, 2, 3]);
        assert_eq!(t.data(), [1.0, 0.0, 0.0].repeat(4).as_slice());

        let pgm = dir.path().join("gray.pgm");
        let mut bytes = b"P5\n3 1\n255\n".to_vec();
        bytes.extend([128u8; 3]);
        std::fs::write(&pgm, bytes).unwrap();
        let t = load_image(&pgm).unwrap();
        assert!(t.data().iter().all(|&v| v == 128.0 / 255.0));
    }

    #[test]
    fn png_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = Tensor::from_fn(&[5, 7, 3], |_| rng.gen_range(0..=255u8) as f32 / 255.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.png");
        save_png(&img, &p).unwrap();
        assert_eq!(load_image(&p).unwrap(), img);
    }

    #[test]
    fn bad_files_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.png");
        std::fs::write(&p, b"not an image").unwrap();
        assert!(matches!(load_image(&p), Err(Error::Image { .. })));
        let p = dir.path().join("short.ppm");
        std::fs::write(&p, b"P6\n4 4\n255\n\x01\x02").unwrap();
        assert!(matches!(load_image(&p), Err(Error::Image { .. })));
        assert!(load_image(dir.path().join("missing.png")).is_err());
    }

    #[test]
    fn resize_examples() {
        let col = Tensor::new(&[2, 1, 1], vec![0.0, 1.0]).unwrap();
        let up = resize_bilinear(&col, 4, 1).unwrap();
        assert_eq!(up.data(), &[0.0, 0.25, 0.75, 1.0]);

        let c = Tensor::filled(&[3, 5, 2], 0.3);
        let r = resize_bilinear(&c, 7, 2).unwrap();
        assert!(r.data().iter().all(|&v| (v - 0.3).abs() < 1e-7));

        let x = Tensor::from_fn(&[4, 4, 3], |i| i as f32 / 48.0);
        assert_eq!(resize_bilinear(&x, 4, 4).unwrap(), x);
        assert!(resize_bilinear(&x, 0, 4).is_err());
    }
}
