//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.
//!
//! Criterion 6 trains the full-size network for 30 epochs through the
//! `idseg` binary and takes several minutes. Criterion 10 needs an external
//! dataset and is not part of this suite.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use idseg::data::rasterize_quad;
use idseg::eval::quad_from_map;
use idseg::geometry::{quad_iou, quad_iou_raster, Point, Quad, SelectParams};
use idseg::nn::{
    bce_loss, decode_model, encode_model, load_model, save_model, Activation, Model, ModelConfig,
};
use idseg::tensor::{
    broadcast_spatial, broadcast_spatial_backward, conv2d_backward, conv2d_forward, dense_backward,
    dense_forward, sigmoid, sigmoid_grad, tconv2d_backward, tconv2d_forward,
};
use idseg::{ModelFileError, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

// ---- finite differences ----

fn central_diff(at: &Tensor<f64>, h: f64, mut f: impl FnMut(&Tensor<f64>) -> f64) -> Vec<f64> {
    let mut probe = at.clone();
    (0..at.len())
        .map(|i| {
            let x0 = at.data()[i];
            probe.data_mut()[i] = x0 + h;
            let up = f(&probe);
            probe.data_mut()[i] = x0 - h;
            let down = f(&probe);
            probe.data_mut()[i] = x0;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

const H: f64 = 1e-3;

fn kernel_errors() -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();

    for stride in [1, 2] {
        let x = random(&[1, 8, 8, 2], &mut rng);
        let w = random(&[3, 3, 2, 3], &mut rng);
        let b = random(&[3], &mut rng);
        let oh = 8usize.div_ceil(stride);
        let r = random(&[1, oh, oh, 3], &mut rng);
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
            conv2d_forward(x, w, b, stride).unwrap().dot(&r).unwrap()
        };
        let g = conv2d_backward(&x, &w, stride, &r).unwrap();
        let e = rel_err(&g.d_input.to_f64_vec(), &central_diff(&x, H, |t| loss(t, &w, &b)))
            .max(rel_err(&g.d_weights.to_f64_vec(), &central_diff(&w, H, |t| loss(&x, t, &b))))
            .max(rel_err(&g.d_bias.to_f64_vec(), &central_diff(&b, H, |t| loss(&x, &w, t))));
        out.push((if stride == 1 { "conv s1" } else { "conv s2" }, e));
    }

    {
        let x = random(&[1, 8, 8, 2], &mut rng);
        let w = random(&[1, 1, 2, 1], &mut rng);
        let b = random(&[1], &mut rng);
        let r = random(&[1, 8, 8, 1], &mut rng);
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>| conv2d_forward(x, w, &b, 1).unwrap().dot(&r).unwrap();
        let g = conv2d_backward(&x, &w, 1, &r).unwrap();
        let e = rel_err(&g.d_input.to_f64_vec(), &central_diff(&x, H, |t| loss(t, &w)))
            .max(rel_err(&g.d_weights.to_f64_vec(), &central_diff(&w, H, |t| loss(&x, t))));
        out.push(("conv 1x1", e));
    }

    {
        let x = random(&[1, 4, 4, 2], &mut rng);
        let w = random(&[3, 3, 2, 3], &mut rng);
        let b = random(&[3], &mut rng);
        let r = random(&[1, 8, 8, 3], &mut rng);
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
            tconv2d_forward(x, w, b).unwrap().dot(&r).unwrap()
        };
        let g = tconv2d_backward(&x, &w, &r).unwrap();
        let e = rel_err(&g.d_input.to_f64_vec(), &central_diff(&x, H, |t| loss(t, &w, &b)))
            .max(rel_err(&g.d_weights.to_f64_vec(), &central_diff(&w, H, |t| loss(&x, t, &b))))
            .max(rel_err(&g.d_bias.to_f64_vec(), &central_diff(&b, H, |t| loss(&x, &w, t))));
        out.push(("tconv", e));
    }

    {
        let x = random(&[3, 7], &mut rng);
        let w = random(&[7, 4], &mut rng);
        let b = random(&[4], &mut rng);
        let r = random(&[3, 4], &mut rng);
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
            dense_forward(x, w, b).unwrap().dot(&r).unwrap()
        };
        let g = dense_backward(&x, &w, &r).unwrap();
        let e = rel_err(&g.d_input.to_f64_vec(), &central_diff(&x, H, |t| loss(t, &w, &b)))
            .max(rel_err(&g.d_weights.to_f64_vec(), &central_diff(&w, H, |t| loss(&x, t, &b))))
            .max(rel_err(&g.d_bias.to_f64_vec(), &central_diff(&b, H, |t| loss(&x, &w, t))));
        out.push(("dense", e));
    }

    {
        let x = random(&[1, 4, 4, 3], &mut rng).scaled(3.0);
        let r = random(&[1, 4, 4, 3], &mut rng);
        let g = sigmoid_grad(&sigmoid(&x), &r).unwrap();
        let num = central_diff(&x, H, |t| sigmoid(t).dot(&r).unwrap());
        out.push(("sigmoid", rel_err(&g.to_f64_vec(), &num)));
    }

    {
        let v = random(&[2, 5], &mut rng);
        let r = random(&[2, 4, 3, 5], &mut rng);
        let g = broadcast_spatial_backward(&r).unwrap();
        let num = central_diff(&v, H, |t| broadcast_spatial(t, 4, 3).unwrap().dot(&r).unwrap());
        out.push(("broadcast", rel_err(&g.to_f64_vec(), &num)));
    }

    {
        let y = Tensor::from_fn(&[1, 8, 8, 1], |i| ((i * 7) % 3 == 0) as u8 as f64);
        let logits = random(&[1, 8, 8, 1], &mut rng).scaled(2.0);
        let p = sigmoid(&logits);
        let (_, g) = bce_loss(&p, &y).unwrap();
        let num = central_diff(&p, H, |t| bce_loss(t, &y).unwrap().0);
        out.push(("bce", rel_err(&g.to_f64_vec(), &num)));
    }
    out
}

fn relu_pattern(model: &Model<f64>, x: &Tensor<f64>) -> Vec<bool> {
    let (_, cache) = model.forward(x, true).unwrap();
    let cache = cache.unwrap();
    model
        .config()
        .layers
        .iter()
        .zip(cache.outputs())
        .filter(|(l, _)| l.activation() == Activation::Relu)
        .flat_map(|(_, o)| o.data().iter().map(|&v| v > 0.0))
        .collect()
}

/// Returns (max relative error, components compared, components skipped
/// because the ±h stencil crosses a ReLU kink).
fn whole_model_error() -> (f64, usize, usize) {
    let config = ModelConfig::encoder_decoder((16, 16, 3), &[4, 6], &[8, 4], &[6, 4]).unwrap();
    let model: Model<f64> = Model::init(config, 9).unwrap().cast();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let x = Tensor::<f64>::from_fn(&[1, 16, 16, 3], |_| rng.gen_range(0.0..1.0));
    let y = Tensor::<f64>::from_fn(&[1, 16, 16, 1], |i| ((i % 16) > 3 && (i % 16) < 12 && i / 16 > 4) as u8 as f64);
    let loss = |m: &Model<f64>| bce_loss(&m.forward(&x, false).unwrap().0, &y).unwrap().0;

    let (prob, cache) = model.forward(&x, true).unwrap();
    let grads = model.backward(&cache.unwrap(), &bce_loss(&prob, &y).unwrap().1).unwrap();
    let base = relu_pattern(&model, &x);

    let (mut worst, mut compared, mut skipped) = (0.0f64, 0, 0);
    for (layer, g) in grads.layers.iter().enumerate() {
        let Some(g) = g else { continue };
        for (is_bias, analytic) in [(false, &g.weights), (true, &g.bias)] {
            for k in 0..analytic.len() {
                let nudged = |d: f64| {
                    let mut m = model.clone();
                    let p = m.layers_mut()[layer].as_mut().unwrap();
                    let t = if is_bias { &mut p.bias } else { &mut p.weights };
                    t.data_mut()[k] += d;
                    m
                };
                let (up, down) = (nudged(H), nudged(-H));
                if relu_pattern(&up, &x) != base || relu_pattern(&down, &x) != base {
                    skipped += 1;
                    continue;
                }
                let num = (loss(&up) - loss(&down)) / (2.0 * H);
                worst = worst.max(rel_err(&[analytic.data()[k]], &[num]));
                compared += 1;
            }
        }
    }
    (worst, compared, skipped)
}

fn criterion_1() -> Outcome {
    let kernels = kernel_errors();
    let kernel_worst = kernels.iter().map(|k| k.1).fold(0.0, f64::max);
    let (model_worst, compared, skipped) = whole_model_error();
    let detail = format!(
        "kernels max rel. error {kernel_worst:.1e} ({}); whole model {model_worst:.1e} over {compared} components, {skipped} skipped at ReLU kinks",
        kernels.iter().map(|(n, e)| format!("{n} {e:.0e}")).collect::<Vec<_>>().join(", ")
    );
    check(kernel_worst < 1e-4 && model_worst < 1e-3 && skipped * 10 < compared, detail)
}

// ---- geometry ----

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn strictly_convex(v: &[Point; 4]) -> bool {
    let s: Vec<f64> = (0..4).map(|i| cross(v[i], v[(i + 1) % 4], v[(i + 2) % 4])).collect();
    s.iter().all(|&c| c > 1e-6) || s.iter().all(|&c| c < -1e-6)
}

/// Convex quad around a random center inside `[0, side]²`.
fn random_convex_quad(rng: &mut ChaCha8Rng, side: f64, min_frac: f64, max_frac: f64) -> Quad {
    loop {
        let half_w = side * rng.gen_range(min_frac..max_frac) / 2.0;
        let half_h = side * rng.gen_range(min_frac..max_frac) / 2.0;
        let cx = rng.gen_range(half_w..side - half_w);
        let cy = rng.gen_range(half_h..side - half_h);
        let j = 0.2 * half_w.min(half_h);
        let mut jit = || rng.gen_range(-j..j);
        let v = [
            Point::new(cx - half_w + jit(), cy - half_h + jit()),
            Point::new(cx + half_w + jit(), cy - half_h + jit()),
            Point::new(cx + half_w + jit(), cy + half_h + jit()),
            Point::new(cx - half_w + jit(), cy + half_h + jit()),
        ];
        if strictly_convex(&v) && v.iter().all(|p| (0.0..=side).contains(&p.x) && (0.0..=side).contains(&p.y)) {
            return Quad::new(v);
        }
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    let mut overlapping = 0;
    for _ in 0..200 {
        let a = random_convex_quad(&mut rng, 100.0, 0.3, 0.8);
        let b = random_convex_quad(&mut rng, 100.0, 0.3, 0.8);
        let exact = quad_iou(&a, &b);
        overlapping += (exact > 0.0) as usize;
        worst = worst.max((exact - quad_iou_raster(&a, &b)).abs());
    }
    let mut identical_ok = true;
    let mut disjoint_ok = true;
    for _ in 0..20 {
        let a = random_convex_quad(&mut rng, 100.0, 0.3, 0.8);
        identical_ok &= (quad_iou(&a, &a) - 1.0).abs() < 1e-12;
        disjoint_ok &= quad_iou(&a, &a.translate(150.0, 0.0)) == 0.0;
    }
    check(
        worst <= 0.005 && identical_ok && disjoint_ok,
        format!(
            "200 pairs ({overlapping} overlapping): max |exact - raster| {worst:.4}; identical -> 1: {identical_ok}; disjoint -> 0: {disjoint_ok}"
        ),
    )
}

/// Pixel `(r, c)` is inside iff its center is on the inner side of (or on)
/// every edge of the convex quad.
fn center_inside(q: &Quad, r: usize, c: usize) -> bool {
    let p = Point::new(c as f64 + 0.5, r as f64 + 0.5);
    let v = q.vertices();
    let s: Vec<f64> = (0..4).map(|i| cross(v[i], v[(i + 1) % 4], p)).collect();
    s.iter().all(|&x| x >= 0.0) || s.iter().all(|&x| x <= 0.0)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut mismatches = 0;
    let mut covered = 0;
    for _ in 0..100 {
        let q = random_convex_quad(&mut rng, 64.0, 0.1, 0.9);
        let mask = rasterize_quad(&q, 64, 64);
        for r in 0..64 {
            for c in 0..64 {
                let got = mask.data()[r * 64 + c] > 0.5;
                covered += got as usize;
                mismatches += (got != center_inside(&q, r, c)) as usize;
            }
        }
    }
    check(mismatches == 0, format!("100 quads at 64x64, {covered} covered pixels, {mismatches} mismatches"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut worst_err, mut worst_iou, mut missing) = (0.0f64, 1.0f64, 0);
    for _ in 0..50 {
        let q = random_convex_quad(&mut rng, 128.0, 0.3, 0.9);
        let mask = rasterize_quad(&q, 128, 128);
        match quad_from_map(&mask, SelectParams::default()).unwrap() {
            Some(found) => {
                worst_err = worst_err.max(found.max_vertex_error(&q));
                worst_iou = worst_iou.min(quad_iou(&found, &q));
            }
            None => missing += 1,
        }
    }
    check(
        missing == 0 && worst_err <= 2.0 && worst_iou >= 0.95,
        format!("50 quads: {missing} not recovered, max vertex error {worst_err:.2} px, min IoU {worst_iou:.4}"),
    )
}

// ---- binary-driven criteria ----

fn idseg(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_idseg"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run idseg: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "idseg {} exited with {}: {}",
            args.first().unwrap_or(&""),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn read_losses(log: &Path) -> Vec<f64> {
    let mut reader = csv::Reader::from_path(log).unwrap();
    let col = reader.headers().unwrap().iter().position(|h| h == "loss").unwrap();
    reader.records().map(|r| r.unwrap()[col].parse().unwrap()).collect()
}

fn read_curve(curve: &Path) -> Vec<(f64, f64)> {
    let mut reader = csv::Reader::from_path(curve).unwrap();
    reader.records().map(|r| {
        let r = r.unwrap();
        (r[0].parse().unwrap(), r[1].parse().unwrap())
    })
    .collect()
}

fn value_after(text: &str, key: &str) -> Option<f64> {
    let rest = &text[text.find(key)? + key.len()..];
    rest.split_whitespace().next()?.parse().ok()
}

struct EndToEnd {
    outcome: Outcome,
    model: Option<std::path::PathBuf>,
    curve: Option<std::path::PathBuf>,
}

fn criterion_6(dir: &Path) -> EndToEnd {
    let fail = |e: String| EndToEnd { outcome: Err(e), model: None, curve: None };
    let data = dir.join("synth");
    let (model, log, curve) = (dir.join("model.idsg"), dir.join("train.csv"), dir.join("curve.csv"));
    let manifest = data.join("manifest.csv");
    let start = Instant::now();
    let steps: [Vec<&str>; 3] = [
        vec!["synth", "--out", path(&data), "--train", "512", "--test", "128", "--size", "128", "--seed", "42"],
        vec![
            "train", "--manifest", path(&manifest), "--epochs", "30", "--batch", "32",
            "--lr", "0.001", "--seed", "42", "--out", path(&model), "--log", path(&log),
        ],
        vec!["eval", "--model", path(&model), "--manifest", path(&manifest), "--curve", path(&curve)],
    ];
    let mut eval_out = String::new();
    for step in &steps {
        match idseg(step) {
            Ok(out) => eval_out = out,
            Err(e) => return fail(e),
        }
    }
    let losses = read_losses(&log);
    let accuracy = read_curve(&curve).iter().find(|(t, _)| (t - 0.5).abs() < 1e-9).map(|c| c.1);
    let recall = value_after(&eval_out, "recall:");
    let minutes = start.elapsed().as_secs_f64() / 60.0;
    let (Some(accuracy), Some(recall), true) = (accuracy, recall, losses.len() == 30) else {
        return fail(format!("unexpected output: {eval_out}"));
    };
    let outcome = check(
        accuracy >= 0.70 && recall >= 0.80 && losses[9] < losses[0],
        format!(
            "accuracy@0.5 {accuracy:.3}, pixel recall {recall:.3}, loss epoch 1 {:.4} -> epoch 10 {:.4} -> epoch 30 {:.4}, {minutes:.1} min",
            losses[0], losses[9], losses[29]
        ),
    );
    EndToEnd { outcome, model: Some(model), curve: Some(curve) }
}

fn criterion_7(curve: Option<&Path>) -> Outcome {
    let curve = read_curve(curve.ok_or("no curve: the end-to-end run failed")?);
    let monotone = curve.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 > w[0].0);
    let at_zero = curve.first().map(|c| (c.0, c.1));
    let fmt: Vec<String> = curve.iter().step_by(4).map(|(t, a)| format!("{t:.2}:{a:.2}")).collect();
    check(
        monotone && at_zero == Some((0.0, 1.0)),
        format!("{} rows, non-increasing {monotone}, first row {at_zero:?}; {}", curve.len(), fmt.join(" ")),
    )
}

fn criterion_8(model: &Path) -> Outcome {
    let out = idseg(&["bench", "--model", path(model), "--iters", "30"])?;
    let mean = value_after(&out, "mean_ms").ok_or(format!("no mean_ms in {out}"))?;
    let p95 = value_after(&out, "p95_ms").unwrap_or(f64::NAN);
    check(mean <= 100.0, format!("mean {mean:.2} ms, p95 {p95:.2} ms per 128x128 image"))
}

fn criterion_9(dir: &Path) -> Outcome {
    let data = dir.join("small");
    idseg(&["synth", "--out", path(&data), "--train", "48", "--test", "16", "--seed", "9"])?;
    let manifest = format!("{}/manifest.csv", path(&data));
    let run = |tag: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let (m, l) = (dir.join(format!("{tag}.idsg")), dir.join(format!("{tag}.csv")));
        idseg(&[
            "train", "--manifest", &manifest, "--epochs", "2", "--batch", "16", "--seed", "5", "--out", path(&m),
            "--log", path(&l),
        ])?;
        Ok((std::fs::read(&m).map_err(|e| e.to_string())?, std::fs::read(&l).map_err(|e| e.to_string())?))
    };
    let (first, second) = (run("a")?, run("b")?);
    let identical = first == second;

    let model = decode_model(&first.0).map_err(|e| e.to_string())?;
    let copy = dir.join("copy.idsg");
    save_model(&model, &copy).map_err(|e| e.to_string())?;
    let reloaded = load_model(&copy).map_err(|e| e.to_string())?;
    let bit_exact = encode_model(&reloaded) == first.0
        && reloaded.tensors().zip(model.tensors()).all(|(a, b)| {
            a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits())
        });
    let mut corrupt = first.0.clone();
    let mid = corrupt.len() / 2;
    corrupt[mid] ^= 1;
    let rejected = matches!(decode_model(&corrupt), Err(idseg::Error::ModelFile(ModelFileError::Checksum { .. })));
    check(
        identical && bit_exact && rejected,
        format!(
            "two identical train runs: model and CSV byte-identical {identical}; roundtrip bit-exact {bit_exact}; flipped payload bit rejected by checksum {rejected}"
        ),
    )
}

fn criterion_2(dir: &Path) -> Outcome {
    let model = Model::init(ModelConfig::reference(), 1).map_err(|e| e.to_string())?;
    let file = dir.join("reference.idsg");
    save_model(&model, &file).map_err(|e| e.to_string())?;
    let out = idseg(&["inspect", "--model", path(&file)])?;
    let count = value_after(&out, "total parameters:").ok_or(format!("no total in {out}"))? as usize;
    let size = std::fs::metadata(&file).map_err(|e| e.to_string())?.len();
    let published = 198_273.0;
    let within = ((count as f64 - published) / published).abs() <= 0.2;
    check(
        count == 214_593 && within && size <= 1_048_576,
        format!(
            "{count} parameters ({:+.1}% vs 198,273), file {size} bytes ({:.1} KiB)",
            100.0 * (count as f64 - published) / published,
            size as f64 / 1024.0
        ),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, outcome: Outcome| {
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {n:>2} {tag}  {name}: {detail}");
        results.push((n, name, outcome));
    };

    report(1, "gradient correctness", criterion_1());
    report(2, "parameter budget", criterion_2(dir.path()));
    report(3, "IoU oracle equivalence", criterion_3());
    report(4, "rasterizer equivalence", criterion_4());
    report(5, "geometry pipeline recovery", criterion_5());
    let e2e = criterion_6(dir.path());
    report(6, "end-to-end synthetic training", e2e.outcome);
    report(7, "curve shape", criterion_7(e2e.curve.as_deref()));
    let bench = match &e2e.model {
        Some(m) => criterion_8(m),
        None => Err("no trained model: the end-to-end run failed".into()),
    };
    report(8, "latency", bench);
    report(9, "determinism", criterion_9(dir.path()));

    let failed: Vec<u32> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("all {} criteria passed", results.len());
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
