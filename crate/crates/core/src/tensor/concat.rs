use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Channel-axis concatenation, `a`'s channels first.
pub fn concat_channels<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, h, w, ca) = a.dims4("concat_channels")?;
    let (nb, hb, wb, cb) = b.dims4("concat_channels")?;
    if (n, h, w) != (nb, hb, wb) {
        return Err(Error::shape(
            "concat_channels",
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    let mut data = Vec::with_capacity(a.len() + b.len());
    for (pa, pb) in a.data().chunks_exact(ca).zip(b.data().chunks_exact(cb)) {
        data.extend_from_slice(pa);
        data.extend_from_slice(pb);
    }
    Tensor::new(&[n, h, w, ca + cb], data)
}

/// Splits a concatenated gradient back at channel `ca`.
pub fn concat_split_grad<T: Real>(
    d_output: &Tensor<T>,
    ca: usize,
    cb: usize,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (n, h, w, c) = d_output.dims4("concat_split_grad")?;
    if c != ca + cb || ca == 0 || cb == 0 {
        return Err(Error::shape(
            "concat_split_grad",
            format!("{c} channels cannot split into {ca} + {cb}"),
        ));
    }
    let mut da = Vec::with_capacity(n * h * w * ca);
    let mut db = Vec::with_capacity(n * h * w * cb);
    for px in d_output.data().chunks_exact(c) {
        da.extend_from_slice(&px[..ca]);
        db.extend_from_slice(&px[ca..]);
    }
    Ok((Tensor::new(&[n, h, w, ca], da)?, Tensor::new(&[n, h, w, cb], db)?))
}

/// Copies each row of an `n × d` tensor to every position of an `h × w` grid.
pub fn broadcast_spatial<T: Real>(v: &Tensor<T>, h: usize, w: usize) -> Result<Tensor<T>> {
    let (n, d) = v.dims2("broadcast_spatial")?;
    if h == 0 || w == 0 {
        return Err(Error::shape("broadcast_spatial", format!("empty grid {h}x{w}")));
    }
    let mut data = Vec::with_capacity(n * h * w * d);
    for row in v.data().chunks_exact(d) {
        for _ in 0..h * w {
            data.extend_from_slice(row);
        }
    }
    Tensor::new(&[n, h, w, d], data)
}

/// Adjoint of [`broadcast_spatial`]: sums the gradient over space.
pub fn broadcast_spatial_backward<T: Real>(d_output: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, h, w, d) = d_output.dims4("broadcast_spatial_backward")?;
    let mut acc = vec![0.0f64; n * d];
    for (i, px) in d_output.data().chunks_exact(d).enumerate() {
        let row = &mut acc[(i / (h * w)) * d..][..d];
        for (a, &g) in row.iter_mut().zip(px) {
            *a += g.to_f64();
        }
    }
    Tensor::from_f64_slice(&[n, d], &acc)
}
