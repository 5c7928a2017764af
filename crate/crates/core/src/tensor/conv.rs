use super::{from_f64_buf, to_f64_buf, KernelGrads, Real, Tensor};
use crate::error::{Error, Result};

struct ConvGeom {
    n: usize,
    h: usize,
    w: usize,
    cin: usize,
    k: usize,
    cout: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
}

fn conv_geometry<T: Real>(input: &Tensor<T>, weights: &Tensor<T>, stride: usize) -> Result<ConvGeom> {
    const OP: &str = "conv2d";
    let (n, h, w, cin) = input.dims4(OP)?;
    let (kh, kw, wcin, cout) = weights.dims4(OP)?;
    if kh != kw || !(kh == 1 || kh == 3) {
        return Err(Error::Unsupported(format!("conv2d kernel {kh}x{kw} (only 1x1 and 3x3)")));
    }
    if !(stride == 1 || stride == 2) {
        return Err(Error::Unsupported(format!("conv2d stride {stride} (only 1 and 2)")));
    }
    if wcin != cin {
        return Err(Error::shape(OP, format!("input has {cin} channels, weights expect {wcin}")));
    }
    Ok(ConvGeom {
        n,
        h,
        w,
        cin,
        k: kh,
        cout,
        stride,
        pad: (kh - 1) / 2,
        oh: h.div_ceil(stride),
        ow: w.div_ceil(stride),
    })
}

impl ConvGeom {
    /// Input coordinate read by output coordinate `o` at kernel offset `k`.
    #[inline(always)]
    fn source(&self, o: usize, k: usize, limit: usize) -> Option<usize> {
        (self.stride * o + k).checked_sub(self.pad).filter(|&i| i < limit)
    }
}

/// Zero-padded ("same") 2-D convolution.
///
/// Output `(r, c)` reads input `(stride·r + kr − pad, stride·c + kc − pad)`
/// with `pad = (k − 1) / 2`; reads outside the image contribute zero.
pub fn conv2d_forward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
) -> Result<Tensor<T>> {
    let g = conv_geometry(input, weights, stride)?;
    if bias.dims1("conv2d")? != g.cout {
        return Err(Error::shape("conv2d", format!("bias length {} != {}", bias.len(), g.cout)));
    }
    let x = input.data();
    let wt = to_f64_buf(weights);
    let b = to_f64_buf(bias);
    let (cin, cout) = (g.cin, g.cout);

    let mut out = Vec::with_capacity(g.n * g.oh * g.ow * cout);
    let mut acc = vec![0.0f64; cout];
    for n in 0..g.n {
        for or in 0..g.oh {
            for oc in 0..g.ow {
                acc.copy_from_slice(&b);
                for kr in 0..g.k {
                    let Some(ir) = g.source(or, kr, g.h) else { continue };
                    for kc in 0..g.k {
                        let Some(ic) = g.source(oc, kc, g.w) else { continue };
                        let ibase = ((n * g.h + ir) * g.w + ic) * cin;
                        let wbase = (kr * g.k + kc) * cin * cout;
                        for (c, xv) in x[ibase..ibase + cin].iter().enumerate() {
                            let xv = xv.to_f64();
                            if xv == 0.0 {
                                continue;
                            }
                            let wrow = &wt[wbase + c * cout..wbase + (c + 1) * cout];
                            for (a, &wv) in acc.iter_mut().zip(wrow) {
                                *a += xv * wv;
                            }
                        }
                    }
                }
                out.extend(acc.iter().map(|&v| T::from_f64(v)));
            }
        }
    }
    Tensor::new(&[g.n, g.oh, g.ow, cout], out)?.ensure_finite("conv2d_forward")
}

/// Exact gradients of [`conv2d_forward`] given the upstream gradient.
pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    stride: usize,
    d_output: &Tensor<T>,
) -> Result<KernelGrads<T>> {
    let g = conv_geometry(input, weights, stride)?;
    let expected = [g.n, g.oh, g.ow, g.cout];
    if d_output.shape() != expected {
        return Err(Error::shape(
            "conv2d_backward",
            format!("d_output {:?}, forward output {expected:?}", d_output.shape()),
        ));
    }
    let x = input.data();
    let wt = to_f64_buf(weights);
    let dy = d_output.data();
    let (cin, cout) = (g.cin, g.cout);

    // per-sample input gradient, flushed into `dx` after each sample
    let sample_len = g.h * g.w * cin;
    let mut dx_sample = vec![0.0f64; sample_len];
    let mut dx = Vec::with_capacity(input.len());
    let mut dw = vec![0.0f64; wt.len()];
    let mut db = vec![0.0f64; cout];
    let mut gy = vec![0.0f64; cout];
    for n in 0..g.n {
        dx_sample.fill(0.0);
        for or in 0..g.oh {
            for oc in 0..g.ow {
                let obase = ((n * g.oh + or) * g.ow + oc) * cout;
                for (d, v) in gy.iter_mut().zip(&dy[obase..obase + cout]) {
                    *d = v.to_f64();
                }
                if gy.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for (d, &v) in db.iter_mut().zip(&gy) {
                    *d += v;
                }
                for kr in 0..g.k {
                    let Some(ir) = g.source(or, kr, g.h) else { continue };
                    for kc in 0..g.k {
                        let Some(ic) = g.source(oc, kc, g.w) else { continue };
                        let local = (ir * g.w + ic) * cin;
                        let ibase = n * sample_len + local;
                        let wbase = (kr * g.k + kc) * cin * cout;
                        for c in 0..cin {
                            let xv = x[ibase + c].to_f64();
                            let span = wbase + c * cout..wbase + (c + 1) * cout;
                            let wrow = &wt[span.clone()];
                            let dwrow = &mut dw[span];
                            let mut s = 0.0;
                            for ((dwv, &wv), &gv) in dwrow.iter_mut().zip(wrow).zip(&gy) {
                                s += wv * gv;
                                *dwv += xv * gv;
                            }
                            dx_sample[local + c] += s;
                        }
                    }
                }
            }
        }
        dx.extend(dx_sample.iter().map(|&v| T::from_f64(v)));
    }
    Ok(KernelGrads {
        d_input: Tensor::new(input.shape(), dx)?.ensure_finite("conv2d_backward")?,
        d_weights: from_f64_buf(weights.shape(), &dw, "conv2d_backward")?,
        d_bias: from_f64_buf(&[cout], &db, "conv2d_backward")?,
    })
}
