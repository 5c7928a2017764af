use super::{from_f64_buf, to_f64_buf, KernelGrads, Real, Tensor};
use crate::error::{Error, Result};

fn dense_dims<T: Real>(input: &Tensor<T>, weights: &Tensor<T>) -> Result<(usize, usize, usize)> {
    let (n, din) = input.dims2("dense")?;
    let (wdin, dout) = weights.dims2("dense")?;
    if din != wdin {
        return Err(Error::shape("dense", format!("input width {din}, weights expect {wdin}")));
    }
    Ok((n, din, dout))
}

/// `input · weights + bias` with rows as samples.
pub fn dense_forward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (n, din, dout) = dense_dims(input, weights)?;
    if bias.dims1("dense")? != dout {
        return Err(Error::shape("dense", format!("bias length {} != {dout}", bias.len())));
    }
    let x = to_f64_buf(input);
    let wt = to_f64_buf(weights);
    let b = to_f64_buf(bias);
    let mut out = vec![0.0f64; n * dout];
    for (row, acc) in x.chunks_exact(din).zip(out.chunks_exact_mut(dout)) {
        acc.copy_from_slice(&b);
        for (&xv, wrow) in row.iter().zip(wt.chunks_exact(dout)) {
            if xv == 0.0 {
                continue;
            }
            for (a, &wv) in acc.iter_mut().zip(wrow) {
                *a += xv * wv;
            }
        }
    }
    from_f64_buf(&[n, dout], &out, "dense_forward")
}

/// `d_weights = inputᵀ·d_output`, `d_input = d_output·weightsᵀ`, `d_bias` = column sums.
pub fn dense_backward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    d_output: &Tensor<T>,
) -> Result<KernelGrads<T>> {
    let (n, din, dout) = dense_dims(input, weights)?;
    if d_output.shape() != [n, dout] {
        return Err(Error::shape(
            "dense_backward",
            format!("d_output {:?}, forward output {:?}", d_output.shape(), [n, dout]),
        ));
    }
    let x = to_f64_buf(input);
    let wt = to_f64_buf(weights);
    let dy = to_f64_buf(d_output);
    let mut dx = vec![0.0f64; n * din];
    let mut dw = vec![0.0f64; din * dout];
    let mut db = vec![0.0f64; dout];
    for ((row, gy), dxrow) in x.chunks_exact(din).zip(dy.chunks_exact(dout)).zip(dx.chunks_exact_mut(din)) {
        for (d, &g) in db.iter_mut().zip(gy) {
            *d += g;
        }
        for (((&xv, wrow), dwrow), dxv) in
            row.iter().zip(wt.chunks_exact(dout)).zip(dw.chunks_exact_mut(dout)).zip(dxrow.iter_mut())
        {
            let mut s = 0.0;
            for ((dwv, &wv), &g) in dwrow.iter_mut().zip(wrow).zip(gy) {
                s += wv * g;
                *dwv += xv * g;
            }
            *dxv = s;
        }
    }
    Ok(KernelGrads {
        d_input: from_f64_buf(input.shape(), &dx, "dense_backward")?,
        d_weights: from_f64_buf(weights.shape(), &dw, "dense_backward")?,
        d_bias: from_f64_buf(&[dout], &db, "dense_backward")?,
    })
}
