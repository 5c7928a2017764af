use crate::error::{Error, Result};

/// Weight dims and bias length of one parametric layer.
pub type ParamShape = (Vec<usize>, usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

/// One step of the network. Layers are evaluated in order; each consumes the
/// previous layer's output (or the network input for the first layer).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    /// Zero-padded convolution with a square `kernel` (1 or 3).
    Conv { kernel: usize, stride: usize, filters: usize, activation: Activation },
    /// 3×3 stride-2 transposed convolution.
    TConv { filters: usize, activation: Activation },
    Dense { units: usize, activation: Activation },
    Flatten,
    /// Tiles a flat vector over a `height × width` grid.
    Broadcast { height: usize, width: usize },
    /// Prepends the output of layer `skip` along the channel axis.
    Concat { skip: usize },
    /// 1×1 convolution to a single channel followed by a sigmoid.
    OutputConv,
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::TConv { .. } => "tconv",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Broadcast { .. } => "broadcast",
            LayerSpec::Concat { .. } => "concat",
            LayerSpec::OutputConv => "output_conv",
        }
    }

    pub fn activation(&self) -> Activation {
        match *self {
            LayerSpec::Conv { activation, .. }
            | LayerSpec::TConv { activation, .. }
            | LayerSpec::Dense { activation, .. } => activation,
            LayerSpec::OutputConv => Activation::Sigmoid,
            _ => Activation::Identity,
        }
    }
}

/// Per-sample activation shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActShape {
    Spatial { h: usize, w: usize, c: usize },
    Flat(usize),
}

impl ActShape {
    pub fn numel(&self) -> usize {
        match *self {
            ActShape::Spatial { h, w, c } => h * w * c,
            ActShape::Flat(d) => d,
        }
    }

    /// Tensor shape for a batch of `n`.
    pub fn batched(&self, n: usize) -> Vec<usize> {
        match *self {
            ActShape::Spatial { h, w, c } => vec![n, h, w, c],
            ActShape::Flat(d) => vec![n, d],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    /// `(height, width, channels)` of the network input.
    pub input: (usize, usize, usize),
    pub layers: Vec<LayerSpec>,
}

/// Spatial side of the encoder bottleneck in the reference network.
pub const BOTTLENECK_SIDE: usize = 8;

impl ModelConfig {
    /// The pinned 128×128×3 reference network (214,593 parameters).
    ///
    /// Encoder: four 3×3 stride-2 convolutions (16, 24, 32, 48 filters) down to
    /// 8×8×48. Decision head: flatten → dense 48 → dense 16, tiled back to 8×8
    /// and concatenated with the last encoder map. Decoder: four transposed
    /// convolutions (32, 24, 16, 8) each followed by a skip concatenation with
    /// the encoder map of the same resolution, then a 1×1 sigmoid output.
    pub fn reference() -> Self {
        Self::encoder_decoder((128, 128, 3), &[16, 24, 32, 48], &[48, 16], &[32, 24, 16, 8])
            .expect("reference config is valid")
    }

    /// Builds the encoder / dense head / decoder family the reference network
    /// belongs to. `decoder` must have as many stages as `encoder`.
    pub fn encoder_decoder(
        input: (usize, usize, usize),
        encoder: &[usize],
        dense: &[usize],
        decoder: &[usize],
    ) -> Result<Self> {
        if encoder.is_empty() || dense.is_empty() || decoder.len() != encoder.len() {
            return Err(Error::Config(format!(
                "need matching non-empty encoder/decoder stages and a dense head, got {} / {} / {}",
                encoder.len(),
                dense.len(),
                decoder.len()
            )));
        }
        let n = encoder.len();
        let scale = 1usize << n;
        if !input.0.is_multiple_of(scale) || !input.1.is_multiple_of(scale) {
            return Err(Error::Config(format!(
                "input {}x{} is not divisible by 2^{n}",
                input.0, input.1
            )));
        }
        let (bh, bw) = (input.0 / scale, input.1 / scale);
        let relu = Activation::Relu;
        let mut layers = Vec::new();
        for &filters in encoder {
            layers.push(LayerSpec::Conv { kernel: 3, stride: 2, filters, activation: relu });
        }
        layers.push(LayerSpec::Flatten);
        for &units in dense {
            layers.push(LayerSpec::Dense { units, activation: relu });
        }
        layers.push(LayerSpec::Broadcast { height: bh, width: bw });
        layers.push(LayerSpec::Concat { skip: n - 1 });
        for (k, &filters) in decoder.iter().enumerate() {
            layers.push(LayerSpec::TConv { filters, activation: relu });
            if k + 1 < n {
                layers.push(LayerSpec::Concat { skip: n - 2 - k });
            }
        }
        layers.push(LayerSpec::OutputConv);
        let config = Self { input, layers };
        config.validate()?;
        Ok(config)
    }

    /// Output shape of every layer; fails on any wiring inconsistency.
    pub fn shapes(&self) -> Result<Vec<ActShape>> {
        let (h, w, c) = self.input;
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::Config("input dimensions must be positive".into()));
        }
        let mut cur = ActShape::Spatial { h, w, c };
        let mut out: Vec<ActShape> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let bad = |msg: String| Error::Config(format!("layer {i} ({}): {msg}", layer.kind_name()));
            cur = match (*layer, cur) {
                (LayerSpec::Conv { kernel, stride, filters, .. }, ActShape::Spatial { h, w, .. }) => {
                    if !(kernel == 1 || kernel == 3) || !(stride == 1 || stride == 2) || filters == 0 {
                        return Err(bad(format!("kernel {kernel}, stride {stride}, filters {filters}")));
                    }
                    ActShape::Spatial { h: h.div_ceil(stride), w: w.div_ceil(stride), c: filters }
                }
                (LayerSpec::TConv { filters, .. }, ActShape::Spatial { h, w, .. }) if filters > 0 => {
                    ActShape::Spatial { h: 2 * h, w: 2 * w, c: filters }
                }
                (LayerSpec::Dense { units, .. }, ActShape::Flat(_)) if units > 0 => ActShape::Flat(units),
                (LayerSpec::Flatten, s @ ActShape::Spatial { .. }) => ActShape::Flat(s.numel()),
                (LayerSpec::Broadcast { height, width }, ActShape::Flat(d)) if height > 0 && width > 0 => {
                    ActShape::Spatial { h: height, w: width, c: d }
                }
                (LayerSpec::Concat { skip }, ActShape::Spatial { h, w, c }) => match out.get(skip) {
                    Some(&ActShape::Spatial { h: sh, w: sw, c: sc }) if skip < i && (sh, sw) == (h, w) => {
                        ActShape::Spatial { h, w, c: sc + c }
                    }
                    other => return Err(bad(format!("cannot concatenate layer {skip} ({other:?}) with {h}x{w}"))),
                },
                (LayerSpec::OutputConv, ActShape::Spatial { h, w, .. }) => ActShape::Spatial { h, w, c: 1 },
                (_, shape) => return Err(bad(format!("does not accept input {shape:?}"))),
            };
            out.push(cur);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let shapes = self.shapes()?;
        match (self.layers.last(), shapes.last()) {
            (Some(LayerSpec::OutputConv), Some(&ActShape::Spatial { h, w, c: 1 }))
                if (h, w) == (self.input.0, self.input.1) =>
            {
                Ok(())
            }
            _ => Err(Error::Config(
                "network must end in a single-channel sigmoid map at input resolution".into(),
            )),
        }
    }

    /// Spatial size of the map fed to the first flatten layer.
    pub fn bottleneck(&self) -> Option<(usize, usize)> {
        let shapes = self.shapes().ok()?;
        let i = self.layers.iter().position(|l| *l == LayerSpec::Flatten)?;
        match if i == 0 { None } else { shapes.get(i - 1) } {
            Some(&ActShape::Spatial { h, w, .. }) => Some((h, w)),
            _ => None,
        }
    }

    /// Weight and bias shapes of every layer; `None` for parameter-free layers.
    pub fn param_shapes(&self) -> Result<Vec<Option<ParamShape>>> {
        let shapes = self.shapes()?;
        let (h, w, c) = self.input;
        let mut prev = ActShape::Spatial { h, w, c };
        let mut out = Vec::with_capacity(self.layers.len());
        for (layer, &shape) in self.layers.iter().zip(&shapes) {
            let cin = match prev {
                ActShape::Spatial { c, .. } => c,
                ActShape::Flat(d) => d,
            };
            out.push(match *layer {
                LayerSpec::Conv { kernel, filters, .. } => Some((vec![kernel, kernel, cin, filters], filters)),
                LayerSpec::TConv { filters, .. } => Some((vec![3, 3, cin, filters], filters)),
                LayerSpec::Dense { units, .. } => Some((vec![cin, units], units)),
                LayerSpec::OutputConv => Some((vec![1, 1, cin, 1], 1)),
                _ => None,
            });
            prev = shape;
        }
        Ok(out)
    }

    /// Closed-form trainable parameter count.
    pub fn param_count(&self) -> Result<usize> {
        Ok(self
            .param_shapes()?
            .iter()
            .flatten()
            .map(|(w, b)| w.iter().product::<usize>() + b)
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parameter_count() {
        let cfg = ModelConfig::reference();
        let per_layer: Vec<usize> = cfg
            .param_shapes()
            .unwrap()
            .iter()
            .flatten()
            .map(|(w, b)| w.iter().product::<usize>() + b)
            .collect();
        assert_eq!(
            per_layer,
            vec![448, 3_480, 6_944, 13_872, 147_504, 784, 18_464, 13_848, 6_928, 2_312, 9]
        );
        assert_eq!(cfg.param_count().unwrap(), 214_593);
        let paper = 198_273.0;
        assert!((214_593.0 - paper) / paper < 0.2);
    }

    #[test]
    fn reference_wiring() {
        let cfg = ModelConfig::reference();
        assert_eq!(cfg.bottleneck(), Some((BOTTLENECK_SIDE, BOTTLENECK_SIDE)));
        let shapes = cfg.shapes().unwrap();
        assert_eq!(shapes[4], ActShape::Flat(3072));
        // broadcast 16 + C4 48
        assert_eq!(shapes[8], ActShape::Spatial { h: 8, w: 8, c: 64 });
        assert_eq!(*shapes.last().unwrap(), ActShape::Spatial { h: 128, w: 128, c: 1 });
    }

    #[test]
    fn rejects_bad_wiring() {
        let mut cfg = ModelConfig::reference();
        // concat with a layer of a different resolution
        cfg.layers[8] = LayerSpec::Concat { skip: 0 };
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::reference();
        cfg.layers.pop();
        assert!(cfg.validate().is_err());
        assert!(ModelConfig::encoder_decoder((20, 20, 3), &[4, 4, 4], &[4], &[4, 4, 4]).is_err());
    }
}
