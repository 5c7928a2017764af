//! Compares backpropagated gradients of a small network with central
//! differences, in double precision.
//!
//! A perturbation of ±h can push a ReLU input across zero. The difference
//! quotient then measures a kink rather than a slope, so such components are
//! counted and left out.

use idseg::nn::{bce_loss, Activation, Model, ModelConfig};
use idseg::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loss(model: &Model<f64>, x: &Tensor<f64>, y: &Tensor<f64>) -> f64 {
    let (prob, _) = model.forward(x, false).unwrap();
    bce_loss(&prob, y).unwrap().0
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

fn nudged(model: &Model<f64>, layer: usize, bias: bool, k: usize, delta: f64) -> Model<f64> {
    let mut m = model.clone();
    let p = m.layers_mut()[layer].as_mut().expect("parametric");
    let t = if bias { &mut p.bias } else { &mut p.weights };
    t.data_mut()[k] += delta;
    m
}

fn main() -> anyhow::Result<()> {
    let config = ModelConfig::encoder_decoder((16, 16, 3), &[4, 6], &[8, 4], &[6, 4])?;
    let model: Model<f64> = Model::init(config, 5)?.cast();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = Tensor::<f64>::from_fn(&[1, 16, 16, 3], |_| rng.gen_range(0.0..1.0));
    let y = Tensor::<f64>::from_fn(&[1, 16, 16, 1], |_| if rng.gen_bool(0.4) { 1.0 } else { 0.0 });

    let (prob, cache) = model.forward(&x, true)?;
    let (_, d_prob) = bce_loss(&prob, &y)?;
    let grads = model.backward(&cache.expect("requested"), &d_prob)?;
    let base = relu_pattern(&model, &x);

    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for (layer, g) in grads.layers.iter().enumerate() {
        let Some(g) = g else { continue };
        let (mut checked, mut kinks, mut layer_worst) = (0, 0, 0.0f64);
        for (bias, analytic) in [(false, &g.weights), (true, &g.bias)] {
            for k in 0..analytic.len() {
                let up = nudged(&model, layer, bias, k, h);
                let down = nudged(&model, layer, bias, k, -h);
                if relu_pattern(&up, &x) != base || relu_pattern(&down, &x) != base {
                    kinks += 1;
                    continue;
                }
                let numeric = (loss(&up, &x, &y) - loss(&down, &x, &y)) / (2.0 * h);
                let a = analytic.data()[k];
                layer_worst = layer_worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8));
                checked += 1;
            }
        }
        println!(
            "layer {layer:>2} {:<12} {checked:>4} checked, {kinks:>3} across a kink, max rel. error {layer_worst:.2e}",
            model.config().layers[layer].kind_name()
        );
        worst = worst.max(layer_worst);
    }
    println!("max relative error {worst:.2e}");
    Ok(())
}
