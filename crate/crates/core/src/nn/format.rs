//! Binary model file.
//!
//! Little-endian layout: `"IDSG"`, `u16` version, `u32` record count, one
//! header record per layer preceded by an input record, the raw `f32`
//! parameter payload (weights then bias, in layer order), and a trailing
//! CRC32 of everything before it.
//!
//! A header record is `u8` tag, `u16` rank, `rank × u32` dims. The tag's low
//! nibble is the layer kind, bits 4–5 the activation and bit 6 marks stride 2.

use std::fmt::Write as _;
use std::path::Path;

use super::config::{Activation, LayerSpec, ModelConfig};
use super::model::{LayerParams, Model};
use crate::error::{ModelFileError, Result};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"IDSG";
pub const FORMAT_VERSION: u16 = 1;

const KIND_INPUT: u8 = 0;
const KIND_CONV: u8 = 1;
const KIND_TCONV: u8 = 2;
const KIND_DENSE: u8 = 3;
const KIND_FLATTEN: u8 = 4;
const KIND_BROADCAST: u8 = 5;
const KIND_CONCAT: u8 = 6;
const KIND_OUTPUT: u8 = 7;
const STRIDE2: u8 = 1 << 6;

fn act_bits(a: Activation) -> u8 {
    match a {
        Activation::Identity => 0,
        Activation::Relu => 1 << 4,
        Activation::Sigmoid => 2 << 4,
    }
}

fn header_record(tag: u8, dims: &[usize], out: &mut Vec<u8>) {
    out.push(tag);
    out.extend_from_slice(&(dims.len() as u16).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
}

/// Serializes a model into the file layout described in the module docs.
pub fn encode_model(model: &Model) -> Vec<u8> {
    let config = model.config();
    let mut out = Vec::with_capacity(64 + 4 * model.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&((config.layers.len() + 1) as u32).to_le_bytes());
    let (h, w, c) = config.input;
    header_record(KIND_INPUT, &[h, w, c], &mut out);
    for (layer, params) in config.layers.iter().zip(model.layers()) {
        let wdims = || params.as_ref().expect("parametric layer").weights.shape().to_vec();
        let act = act_bits(layer.activation());
        match *layer {
            LayerSpec::Conv { stride, .. } => {
                let s = if stride == 2 { STRIDE2 } else { 0 };
                header_record(KIND_CONV | act | s, &wdims(), &mut out)
            }
            LayerSpec::TConv { .. } => header_record(KIND_TCONV | act | STRIDE2, &wdims(), &mut out),
            LayerSpec::Dense { .. } => header_record(KIND_DENSE | act, &wdims(), &mut out),
            LayerSpec::Flatten => header_record(KIND_FLATTEN, &[], &mut out),
            LayerSpec::Broadcast { height, width } => header_record(KIND_BROADCAST, &[height, width], &mut out),
            LayerSpec::Concat { skip } => header_record(KIND_CONCAT, &[skip], &mut out),
            LayerSpec::OutputConv => header_record(KIND_OUTPUT | act, &wdims(), &mut out),
        }
    }
    for t in model.tensors() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelFileError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(ModelFileError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, ModelFileError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, ModelFileError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32, ModelFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

fn malformed(msg: impl Into<String>) -> ModelFileError {
    ModelFileError::Malformed(msg.into())
}

fn activation_of(tag: u8) -> Result<Activation, ModelFileError> {
    match (tag >> 4) & 0b11 {
        0 => Ok(Activation::Identity),
        1 => Ok(Activation::Relu),
        2 => Ok(Activation::Sigmoid),
        _ => Err(malformed(format!("bad activation bits in tag {tag:#04x}"))),
    }
}

/// Reads the header records into a config.
fn parse_headers(r: &mut Reader) -> Result<ModelConfig, ModelFileError> {
    let count = r.u32()? as usize;
    if count < 2 {
        return Err(malformed(format!("{count} records")));
    }
    let mut input = None;
    let mut layers = Vec::with_capacity(count - 1);
    let mut weight_dims = Vec::with_capacity(count - 1);
    for i in 0..count {
        let tag = r.u8()?;
        let rank = r.u16()? as usize;
        if rank > 4 {
            return Err(malformed(format!("record {i}: rank {rank}")));
        }
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let kind = tag & 0x0f;
        if tag & 0x80 != 0 {
            return Err(malformed(format!("record {i}: reserved tag bit set")));
        }
        let act = activation_of(tag)?;
        let stride = if tag & STRIDE2 != 0 { 2 } else { 1 };
        let bad = || malformed(format!("record {i}: kind {kind} with dims {dims:?}"));
        if (i == 0) != (kind == KIND_INPUT) {
            return Err(malformed(format!("record {i}: input record must come first and only once")));
        }
        let spec = match (kind, dims.as_slice()) {
            (KIND_INPUT, &[h, w, c]) => {
                input = Some((h, w, c));
                continue;
            }
            (KIND_CONV, &[k, k2, _, filters]) if k == k2 => {
                LayerSpec::Conv { kernel: k, stride, filters, activation: act }
            }
            (KIND_TCONV, &[3, 3, _, filters]) if stride == 2 => LayerSpec::TConv { filters, activation: act },
            (KIND_DENSE, &[_, units]) => LayerSpec::Dense { units, activation: act },
            (KIND_FLATTEN, &[]) => LayerSpec::Flatten,
            (KIND_BROADCAST, &[height, width]) => LayerSpec::Broadcast { height, width },
            (KIND_CONCAT, &[skip]) => LayerSpec::Concat { skip },
            (KIND_OUTPUT, &[1, 1, _, 1]) if act == Activation::Sigmoid => LayerSpec::OutputConv,
            _ => return Err(bad()),
        };
        if spec.activation() != act || (stride == 2 && !matches!(spec, LayerSpec::Conv { .. } | LayerSpec::TConv { .. })) {
            return Err(bad());
        }
        layers.push(spec);
        weight_dims.push(dims);
    }
    let config = ModelConfig { input: input.ok_or_else(|| malformed("no input record"))?, layers };
    let shapes = config.param_shapes().map_err(|e| malformed(e.to_string()))?;
    config.validate().map_err(|e| malformed(e.to_string()))?;
    for (i, (want, got)) in shapes.iter().zip(&weight_dims).enumerate() {
        if let Some((w, _)) = want {
            if w != got {
                return Err(malformed(format!("layer {i}: weights {got:?}, wiring implies {w:?}")));
            }
        }
    }
    Ok(config)
}

fn check_crc(bytes: &[u8]) -> Result<(), ModelFileError> {
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(ModelFileError::Checksum { stored, computed });
    }
    Ok(())
}

/// Parses a model file, distinguishing bad magic, version, checksum and
/// truncation failures.
pub fn decode_model(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        let prefix = &bytes[..bytes.len().min(4)];
        return Err(if MAGIC.starts_with(prefix) { ModelFileError::Truncated } else { ModelFileError::BadMagic }.into());
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(ModelFileError::Version(version).into());
    }
    let config = match parse_headers(&mut r) {
        Ok(c) => c,
        Err(e) => {
            // a corrupted header byte is reported as a checksum failure
            if bytes.len() >= 10 && check_crc(bytes).is_err() && e != ModelFileError::Truncated {
                return Err(check_crc(bytes).unwrap_err().into());
            }
            return Err(e.into());
        }
    };
    let shapes = config.param_shapes()?;
    let payload: usize = shapes.iter().flatten().map(|(w, b)| w.iter().product::<usize>() + b).sum();
    let expected = r.pos + 4 * payload + 4;
    if bytes.len() < expected {
        return Err(ModelFileError::Truncated.into());
    }
    check_crc(&bytes[..expected])?;
    if bytes.len() > expected {
        return Err(ModelFileError::Malformed(format!("{} trailing bytes", bytes.len() - expected)).into());
    }
    let mut read_tensor = |shape: &[usize]| -> Result<Tensor> {
        let n: usize = shape.iter().product();
        let raw = r.take(4 * n)?;
        let data = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))).collect();
        Tensor::new(shape, data)
    };
    let mut params = Vec::with_capacity(shapes.len());
    for s in &shapes {
        params.push(match s {
            Some((w, b)) => Some(LayerParams { weights: read_tensor(w)?, bias: read_tensor(&[*b])? }),
            None => None,
        });
    }
    Model::from_params(config, params)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    decode_model(&std::fs::read(path)?)
}

/// Size in bytes of the encoded model.
pub fn encoded_size(model: &Model) -> usize {
    encode_model(model).len()
}

/// Human-readable per-layer table with totals.
pub fn summary_table(model: &Model) -> Result<String> {
    let config = model.config();
    let shapes = config.shapes()?;
    let mut s = String::new();
    let (h, w, c) = config.input;
    writeln!(s, "{:>3}  {:<12} {:<14} {:>10}", "#", "layer", "output", "params").unwrap();
    writeln!(s, "{:>3}  {:<12} {:<14} {:>10}", "-", "input", format!("{h}x{w}x{c}"), 0).unwrap();
    for (i, ((layer, shape), p)) in config.layers.iter().zip(&shapes).zip(model.layers()).enumerate() {
        let out = shape.batched(1)[1..].iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
        let n = p.as_ref().map_or(0, |p| p.weights.len() + p.bias.len());
        let name = match layer {
            LayerSpec::Concat { skip } => format!("concat<{skip}"),
            other => other.kind_name().to_string(),
        };
        writeln!(s, "{i:>3}  {name:<12} {out:<14} {n:>10}").unwrap();
    }
    writeln!(s, "total parameters: {}", model.param_count()).unwrap();
    let bytes = encoded_size(model);
    writeln!(s, "file size: {bytes} bytes ({:.1} KiB)", bytes as f64 / 1024.0).unwrap();
    Ok(s)
}
