use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Activation, ActShape, LayerSpec, ModelConfig};
use crate::error::{Error, Result};
use crate::tensor::{
    broadcast_spatial, broadcast_spatial_backward, concat_channels, concat_split_grad,
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, relu, relu_grad, sigmoid,
    sigmoid_grad, tconv2d_backward, tconv2d_forward, Real, Tensor,
};

/// Weights and bias of one parametric layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T: Real = f32> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Gradients for every trainable tensor, aligned with [`Model::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T: Real = f32> {
    pub layers: Vec<Option<LayerParams<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Weight and bias tensors in declaration order.
    pub fn tensors(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.layers.iter().flatten().flat_map(|p| [&p.weights, &p.bias])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| {
                    l.as_ref().map(|p| LayerParams {
                        weights: p.weights.scaled(factor),
                        bias: p.bias.scaled(factor),
                    })
                })
                .collect(),
        }
    }
}

/// A configured network with materialized parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T: Real = f32> {
    config: ModelConfig,
    shapes: Vec<ActShape>,
    params: Vec<Option<LayerParams<T>>>,
    /// Bumped on every parameter update; caches from older versions are stale.
    version: u64,
}

/// Activations saved by [`Model::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T: Real = f32> {
    version: u64,
    input: Tensor<T>,
    outputs: Vec<Tensor<T>>,
}

impl<T: Real> ForwardCache<T> {
    /// Post-activation output of every layer, in layer order.
    pub fn outputs(&self) -> &[Tensor<T>] {
        &self.outputs
    }
}

fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl Model<f32> {
    /// Glorot-uniform weights, zero biases; deterministic in `seed`.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(config.layers.len());
        for shape in config.param_shapes()? {
            params.push(shape.map(|(wshape, nbias)| {
                let (fan_in, fan_out) = match wshape.as_slice() {
                    [kh, kw, cin, cout] => (kh * kw * cin, kh * kw * cout),
                    [din, dout] => (*din, *dout),
                    _ => unreachable!("weights are rank 2 or 4"),
                };
                let limit = glorot_limit(fan_in, fan_out);
                LayerParams {
                    weights: Tensor::from_fn(&wshape, |_| rng.gen_range(-limit..limit) as f32),
                    bias: Tensor::zeros(&[nbias]),
                }
            }));
        }
        Self::from_params(config, params)
    }
}

impl<T: Real> Model<T> {
    /// Assembles a model, checking every tensor against the config.
    pub fn from_params(config: ModelConfig, params: Vec<Option<LayerParams<T>>>) -> Result<Self> {
        let expected = config.param_shapes()?;
        if expected.len() != params.len() {
            return Err(Error::Config(format!(
                "{} parameter slots for {} layers",
                params.len(),
                expected.len()
            )));
        }
        for (i, (want, got)) in expected.iter().zip(&params).enumerate() {
            let ok = match (want, got) {
                (None, None) => true,
                (Some((w, b)), Some(p)) => p.weights.shape() == w.as_slice() && p.bias.shape() == [*b],
                _ => false,
            };
            if !ok {
                return Err(Error::Config(format!("layer {i}: parameter shapes do not match config")));
            }
        }
        let shapes = config.shapes()?;
        Ok(Self { config, shapes, params, version: 0 })
    }

    /// Same weights with every parameter set to zero.
    pub fn zeroed(&self) -> Self {
        self.map_params(|t| Tensor::zeros(t.shape()))
    }

    fn map_params(&self, mut f: impl FnMut(&Tensor<T>) -> Tensor<T>) -> Self {
        let params = self
            .params
            .iter()
            .map(|p| p.as_ref().map(|p| LayerParams { weights: f(&p.weights), bias: f(&p.bias) }))
            .collect();
        Self { config: self.config.clone(), shapes: self.shapes.clone(), params, version: 0 }
    }

    /// Copy of the model with parameters converted to another real type.
    pub fn cast<U: Real>(&self) -> Model<U> {
        let params = self
            .params
            .iter()
            .map(|p| p.as_ref().map(|p| LayerParams { weights: p.weights.cast(), bias: p.bias.cast() }))
            .collect();
        Model { config: self.config.clone(), shapes: self.shapes.clone(), params, version: 0 }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Option<LayerParams<T>>] {
        &self.params
    }

    pub fn layers_mut(&mut self) -> &mut [Option<LayerParams<T>>] {
        self.version += 1;
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().flatten().map(|p| p.weights.len() + p.bias.len()).sum()
    }

    /// Weight and bias tensors in declaration order.
    pub fn tensors(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.params.iter().flatten().flat_map(|p| [&p.weights, &p.bias])
    }

    pub(crate) fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.version += 1;
        self.params.iter_mut().flatten().flat_map(|p| [&mut p.weights, &mut p.bias])
    }

    /// `(height, width)` of the images the network accepts.
    pub fn input_size(&self) -> (usize, usize) {
        (self.config.input.0, self.config.input.1)
    }

    fn activate(act: Activation, t: Tensor<T>) -> Tensor<T> {
        match act {
            Activation::Identity => t,
            Activation::Relu => relu(&t),
            Activation::Sigmoid => sigmoid(&t),
        }
    }

    fn activation_grad(act: Activation, out: &Tensor<T>, d: Tensor<T>) -> Result<Tensor<T>> {
        match act {
            Activation::Identity => Ok(d),
            Activation::Relu => relu_grad(out, &d),
            Activation::Sigmoid => sigmoid_grad(out, &d),
        }
    }

    /// Runs the network on an `n × H × W × C` batch and returns the `n × H × W × 1`
    /// probability map, plus the activations needed by [`Model::backward`]
    /// when `keep_cache` is set.
    pub fn forward(&self, batch: &Tensor<T>, keep_cache: bool) -> Result<(Tensor<T>, Option<ForwardCache<T>>)> {
        let (n, h, w, c) = batch.dims4("forward")?;
        if (h, w, c) != self.config.input {
            return Err(Error::shape(
                "forward",
                format!("input {h}x{w}x{c}, network expects {:?}", self.config.input),
            ));
        }
        let mut outputs: Vec<Tensor<T>> = Vec::with_capacity(self.config.layers.len());
        for (i, layer) in self.config.layers.iter().enumerate() {
            let x = if i == 0 { batch } else { &outputs[i - 1] };
            let p = self.params[i].as_ref();
            let y = match *layer {
                LayerSpec::Conv { stride, .. } => {
                    let p = p.expect("conv has params");
                    conv2d_forward(x, &p.weights, &p.bias, stride)?
                }
                LayerSpec::OutputConv => {
                    let p = p.expect("output conv has params");
                    conv2d_forward(x, &p.weights, &p.bias, 1)?
                }
                LayerSpec::TConv { .. } => {
                    let p = p.expect("tconv has params");
                    tconv2d_forward(x, &p.weights, &p.bias)?
                }
                LayerSpec::Dense { .. } => {
                    let p = p.expect("dense has params");
                    dense_forward(x, &p.weights, &p.bias)?
                }
                LayerSpec::Flatten => x.clone().reshape(&self.shapes[i].batched(n))?,
                LayerSpec::Broadcast { height, width } => broadcast_spatial(x, height, width)?,
                LayerSpec::Concat { skip } => concat_channels(&outputs[skip], x)?,
            };
            outputs.push(Self::activate(layer.activation(), y));
        }
        let prob = outputs.last().expect("non-empty network").clone();
        let cache = keep_cache.then(|| ForwardCache { version: self.version, input: batch.clone(), outputs });
        Ok((prob, cache))
    }

    /// Gradients of a scalar loss given its gradient with respect to the
    /// probability map produced by the matching [`Model::forward`].
    pub fn backward(&self, cache: &ForwardCache<T>, d_prob: &Tensor<T>) -> Result<Gradients<T>> {
        let layers = &self.config.layers;
        if cache.version != self.version || cache.outputs.len() != layers.len() {
            return Err(Error::Cache("parameters changed since the forward pass".into()));
        }
        let prob = cache.outputs.last().expect("non-empty network");
        if d_prob.shape() != prob.shape() {
            return Err(Error::shape(
                "backward",
                format!("d_prob {:?}, forward output {:?}", d_prob.shape(), prob.shape()),
            ));
        }
        let mut grads: Vec<Option<LayerParams<T>>> = vec![None; layers.len()];
        // gradient flowing into layer outputs through skip connections
        let mut pending: Vec<Option<Tensor<T>>> = vec![None; layers.len()];
        let mut d = d_prob.clone();
        for i in (0..layers.len()).rev() {
            if let Some(extra) = pending[i].take() {
                add_into(&mut d, &extra)?;
            }
            let out = &cache.outputs[i];
            let x = if i == 0 { &cache.input } else { &cache.outputs[i - 1] };
            let d_pre = Self::activation_grad(layers[i].activation(), out, d)?;
            d = match layers[i] {
                LayerSpec::Conv { stride, .. } => {
                    let p = self.params[i].as_ref().expect("conv has params");
                    let g = conv2d_backward(x, &p.weights, stride, &d_pre)?;
                    grads[i] = Some(LayerParams { weights: g.d_weights, bias: g.d_bias });
                    g.d_input
                }
                LayerSpec::OutputConv => {
                    let p = self.params[i].as_ref().expect("output conv has params");
                    let g = conv2d_backward(x, &p.weights, 1, &d_pre)?;
                    grads[i] = Some(LayerParams { weights: g.d_weights, bias: g.d_bias });
                    g.d_input
                }
                LayerSpec::TConv { .. } => {
                    let p = self.params[i].as_ref().expect("tconv has params");
                    let g = tconv2d_backward(x, &p.weights, &d_pre)?;
                    grads[i] = Some(LayerParams { weights: g.d_weights, bias: g.d_bias });
                    g.d_input
                }
                LayerSpec::Dense { .. } => {
                    let p = self.params[i].as_ref().expect("dense has params");
                    let g = dense_backward(x, &p.weights, &d_pre)?;
                    grads[i] = Some(LayerParams { weights: g.d_weights, bias: g.d_bias });
                    g.d_input
                }
                LayerSpec::Flatten => d_pre.reshape(x.shape())?,
                LayerSpec::Broadcast { .. } => broadcast_spatial_backward(&d_pre)?,
                LayerSpec::Concat { skip } => {
                    let cs = *cache.outputs[skip].shape().last().expect("rank 4");
                    let cx = *x.shape().last().expect("rank 4");
                    let (d_skip, d_x) = concat_split_grad(&d_pre, cs, cx)?;
                    match &mut pending[skip] {
                        Some(acc) => add_into(acc, &d_skip)?,
                        slot => *slot = Some(d_skip),
                    }
                    d_x
                }
            };
        }
        Ok(Gradients { layers: grads })
    }
}

fn add_into<T: Real>(acc: &mut Tensor<T>, other: &Tensor<T>) -> Result<()> {
    if acc.shape() != other.shape() {
        return Err(Error::shape("add", format!("{:?} vs {:?}", acc.shape(), other.shape())));
    }
    for (a, &b) in acc.data_mut().iter_mut().zip(other.data()) {
        *a = T::from_f64(a.to_f64() + b.to_f64());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tensor;

    fn small_config() -> ModelConfig {
        ModelConfig::encoder_decoder((16, 16, 3), &[4, 6], &[8, 4], &[6, 4]).unwrap()
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let a = Model::init(ModelConfig::reference(), 7).unwrap();
        let b = Model::init(ModelConfig::reference(), 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, Model::init(ModelConfig::reference(), 8).unwrap());
        assert!(a.layers().iter().flatten().all(|p| p.bias.data().iter().all(|&v| v == 0.0)));
        assert_eq!(a.param_count(), 214_593);
    }

    #[test]
    fn glorot_sample_mean_is_centered() {
        let m = Model::init(ModelConfig::reference(), 1).unwrap();
        let dense = m.layers()[5].as_ref().unwrap();
        assert_eq!(dense.weights.shape(), &[3072, 48]);
        let limit = glorot_limit(3072, 48);
        let n = dense.weights.len() as f64;
        let mean = dense.weights.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        // uniform(-a, a) has standard deviation a / sqrt(3)
        let std_err = limit / 3f64.sqrt() / n.sqrt();
        assert!(mean.abs() < 3.0 * std_err, "mean {mean}, se {std_err}");
        assert!(dense.weights.data().iter().all(|&v| (v as f64).abs() <= limit));
    }

    #[test]
    fn forward_shapes_and_range() {
        let m = Model::init(ModelConfig::reference(), 3).unwrap();
        let x = random_tensor::<f32>(&[2, 128, 128, 3], 1).scaled(0.5);
        let (p, cache) = m.forward(&x, false).unwrap();
        assert_eq!(p.shape(), &[2, 128, 128, 1]);
        assert!(cache.is_none());
        assert!(p.data().iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(m.forward(&Tensor::zeros(&[1, 64, 64, 3]), false).is_err());
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = Model::init(small_config(), 3).unwrap().zeroed();
        let x = random_tensor::<f32>(&[1, 16, 16, 3], 2);
        let (p, _) = m.forward(&x, false).unwrap();
        assert!(p.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn batch_equals_stacked_singles() {
        let m = Model::init(small_config(), 4).unwrap();
        let x = random_tensor::<f32>(&[2, 16, 16, 3], 5);
        let (both, _) = m.forward(&x, false).unwrap();
        let (a, _) = m.forward(&x.batch_item(0).unwrap(), false).unwrap();
        let (b, _) = m.forward(&x.batch_item(1).unwrap(), false).unwrap();
        let stacked = Tensor::stack(&[a, b]).unwrap();
        for (u, v) in both.data().iter().zip(stacked.data()) {
            assert!((u - v).abs() <= 1e-5);
        }
    }

    #[test]
    fn backward_zero_and_linearity() {
        let m = Model::init(small_config(), 6).unwrap();
        let x = random_tensor::<f32>(&[2, 16, 16, 3], 7);
        let (p, cache) = m.forward(&x, true).unwrap();
        let cache = cache.unwrap();
        let g0 = m.backward(&cache, &Tensor::zeros(p.shape())).unwrap();
        assert!(g0.tensors().all(|t| t.data().iter().all(|&v| v == 0.0)));
        let d = random_tensor::<f32>(p.shape(), 8);
        let g1 = m.backward(&cache, &d).unwrap();
        let g2 = m.backward(&cache, &d.scaled(2.0)).unwrap();
        assert_eq!(g1.scaled(2.0), g2);
        assert_eq!(g1.tensors().count(), 2 * 7);
    }

    fn relu_pattern(model: &Model<f64>, x: &Tensor<f64>) -> Vec<bool> {
        let (_, cache) = model.forward(x, true).unwrap();
        let cache = cache.unwrap();
        model
            .config
            .layers
            .iter()
            .zip(cache.outputs())
            .filter(|(l, _)| l.activation() == Activation::Relu)
            .flat_map(|(_, o)| o.data().iter().map(|&v| v > 0.0))
            .collect()
    }

    #[test]
    fn whole_model_gradient_matches_finite_differences() {
        let model = Model::init(small_config(), 9).unwrap();
        let model64: Model<f64> = model.cast();
        let x = random_tensor::<f64>(&[1, 16, 16, 3], 10).scaled(0.5);
        let y = Tensor::from_fn(&[1, 16, 16, 1], |i| if (i / 16 + i % 16) % 3 == 0 { 1.0 } else { 0.0 });
        let loss = |m: &Model<f64>| crate::nn::bce_loss(&m.forward(&x, false).unwrap().0, &y).unwrap().0;

        let (p, cache) = model64.forward(&x, true).unwrap();
        let g64 = model64.backward(&cache.unwrap(), &crate::nn::bce_loss(&p, &y).unwrap().1).unwrap();
        let (x32, y32) = (x.cast::<f32>(), y.cast::<f32>());
        let (p, cache) = model.forward(&x32, true).unwrap();
        let g32 = model.backward(&cache.unwrap(), &crate::nn::bce_loss(&p, &y32).unwrap().1).unwrap();

        let base = relu_pattern(&model64, &x);
        let h = 1e-3;
        let (mut worst64, mut worst32, mut straddling, mut total) = (0.0f64, 0.0f64, 0, 0);
        let analytic64: Vec<f64> = g64.tensors().flat_map(|t| t.to_f64_vec()).collect();
        let analytic32: Vec<f64> = g32.tensors().flat_map(|t| t.to_f64_vec()).collect();
        for k in 0..analytic64.len() {
            let nudged = |d: f64| {
                let mut m = model64.clone();
                let mut i = k;
                for t in m.tensors_mut() {
                    if i < t.len() {
                        t.data_mut()[i] += d;
                        break;
                    }
                    i -= t.len();
                }
                m
            };
            let (up, down) = (nudged(h), nudged(-h));
            total += 1;
            // the difference quotient is no oracle across a ReLU kink
            if relu_pattern(&up, &x) != base || relu_pattern(&down, &x) != base {
                straddling += 1;
                continue;
            }
            let num = (loss(&up) - loss(&down)) / (2.0 * h);
            let rel = |a: f64| (a - num).abs() / a.abs().max(num.abs()).max(1e-8);
            worst64 = worst64.max(rel(analytic64[k]));
            worst32 = worst32.max(rel(analytic32[k]));
        }
        assert_eq!(total, model.param_count());
        assert!(straddling * 20 < total, "{straddling} of {total} straddle a kink");
        assert!(worst64 < 1e-5, "64-bit {worst64:e}");
        assert!(worst32 < 1e-3, "32-bit {worst32:e}");
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut m = Model::init(small_config(), 6).unwrap();
        let x = random_tensor::<f32>(&[1, 16, 16, 3], 7);
        let (p, cache) = m.forward(&x, true).unwrap();
        m.tensors_mut().next().unwrap().data_mut()[0] += 1.0;
        assert!(matches!(m.backward(&cache.unwrap(), &p), Err(Error::Cache(_))));
    }
}
