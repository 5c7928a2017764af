use super::{from_f64_buf, to_f64_buf, KernelGrads, Real, Tensor};
use crate::error::{Error, Result};

const K: usize = 3;

fn tconv_dims<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
) -> Result<(usize, usize, usize, usize, usize)> {
    const OP: &str = "tconv2d";
    let (n, h, w, cin) = input.dims4(OP)?;
    let (kh, kw, wcin, cout) = weights.dims4(OP)?;
    if kh != K || kw != K {
        return Err(Error::Unsupported(format!("tconv2d kernel {kh}x{kw} (only 3x3)")));
    }
    if wcin != cin {
        return Err(Error::shape(OP, format!("input has {cin} channels, weights expect {wcin}")));
    }
    Ok((n, h, w, cin, cout))
}

/// Output coordinate hit by input coordinate `i` at kernel offset `k`: `2i + k − 1`.
#[inline(always)]
fn target(i: usize, k: usize, limit: usize) -> Option<usize> {
    (2 * i + k).checked_sub(1).filter(|&o| o < limit)
}

/// Stride-2 transposed convolution with a 3×3 kernel; doubles height and width.
///
/// Scatter form: input `i` with kernel offset `k` adds `in[i]·w[k]` to output
/// `2i + k − 1`. Contributions landing outside the doubled extent are dropped.
pub fn tconv2d_forward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (n, h, w, cin, cout) = tconv_dims(input, weights)?;
    if bias.dims1("tconv2d")? != cout {
        return Err(Error::shape("tconv2d", format!("bias length {} != {cout}", bias.len())));
    }
    let (oh, ow) = (2 * h, 2 * w);
    let x = input.data();
    let wt = to_f64_buf(weights);
    let b = to_f64_buf(bias);

    // scatter one sample at a time into an f64 scratch map
    let out_len = oh * ow * cout;
    let mut acc = vec![0.0f64; out_len];
    let mut out = Vec::with_capacity(n * out_len);
    for bn in 0..n {
        for px in acc.chunks_exact_mut(cout) {
            px.copy_from_slice(&b);
        }
        for ir in 0..h {
            for ic in 0..w {
                let ibase = ((bn * h + ir) * w + ic) * cin;
                let xs = &x[ibase..ibase + cin];
                for kr in 0..K {
                    let Some(or) = target(ir, kr, oh) else { continue };
                    for kc in 0..K {
                        let Some(oc) = target(ic, kc, ow) else { continue };
                        let obase = (or * ow + oc) * cout;
                        let wbase = (kr * K + kc) * cin * cout;
                        let acc = &mut acc[obase..obase + cout];
                        for (c, xv) in xs.iter().enumerate() {
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
            }
        }
        out.extend(acc.iter().map(|&v| T::from_f64(v)));
    }
    Tensor::new(&[n, oh, ow, cout], out)?.ensure_finite("tconv2d_forward")
}

/// Gradients of [`tconv2d_forward`]; the input gradient gathers what the
/// forward pass scattered.
pub fn tconv2d_backward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    d_output: &Tensor<T>,
) -> Result<KernelGrads<T>> {
    let (n, h, w, cin, cout) = tconv_dims(input, weights)?;
    let (oh, ow) = (2 * h, 2 * w);
    if d_output.shape() != [n, oh, ow, cout] {
        return Err(Error::shape(
            "tconv2d_backward",
            format!("d_output {:?}, forward output {:?}", d_output.shape(), [n, oh, ow, cout]),
        ));
    }
    let x = input.data();
    let wt = to_f64_buf(weights);
    let dy = d_output.data();

    let mut dx = Vec::with_capacity(input.len());
    let mut dx_px = vec![0.0f64; cin];
    let mut dw = vec![0.0f64; wt.len()];
    let mut db = vec![0.0f64; cout];
    for gy in dy.chunks_exact(cout) {
        for (d, v) in db.iter_mut().zip(gy) {
            *d += v.to_f64();
        }
    }
    let mut gy = vec![0.0f64; cout];
    for bn in 0..n {
        for ir in 0..h {
            for ic in 0..w {
                let ibase = ((bn * h + ir) * w + ic) * cin;
                dx_px.fill(0.0);
                for kr in 0..K {
                    let Some(or) = target(ir, kr, oh) else { continue };
                    for kc in 0..K {
                        let Some(oc) = target(ic, kc, ow) else { continue };
                        let obase = ((bn * oh + or) * ow + oc) * cout;
                        for (d, v) in gy.iter_mut().zip(&dy[obase..obase + cout]) {
                            *d = v.to_f64();
                        }
                        let wbase = (kr * K + kc) * cin * cout;
                        for (c, dxv) in dx_px.iter_mut().enumerate() {
                            let xv = x[ibase + c].to_f64();
                            let span = wbase + c * cout..wbase + (c + 1) * cout;
                            let wrow = &wt[span.clone()];
                            let dwrow = &mut dw[span];
                            let mut s = 0.0;
                            for ((dwv, &wv), &gv) in dwrow.iter_mut().zip(wrow).zip(&gy) {
                                s += wv * gv;
                                *dwv += xv * gv;
                            }
                            *dxv += s;
                        }
                    }
                }
                dx.extend(dx_px.iter().map(|&v| T::from_f64(v)));
            }
        }
    }
    Ok(KernelGrads {
        d_input: Tensor::new(input.shape(), dx)?.ensure_finite("tconv2d_backward")?,
        d_weights: from_f64_buf(weights.shape(), &dw, "tconv2d_backward")?,
        d_bias: from_f64_buf(&[cout], &db, "tconv2d_backward")?,
    })
}
