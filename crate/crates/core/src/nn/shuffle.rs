use alloc::vec::Vec;

use crate::{Error, Real, Result, Tensor};

fn dims(input: &Tensor<impl Real>) -> Result<(usize, usize, usize)> {
    match input.shape() {
        [c, h, w] => Ok((*c, *h, *w)),
        s => Err(Error::InvalidShape { shape: s.to_vec(), reason: "expected C×H×W" }),
    }
}

/// Rearrange `r²·C × H × W` into `C × rH × rW`:
/// `out[c, y, x] = in[c·r² + (y mod r)·r + (x mod r), y / r, x / r]`.
pub fn pixel_shuffle<T: Real>(input: &Tensor<T>, r: usize) -> Result<Tensor<T>> {
    let (cin, h, w) = dims(input)?;
    if r == 0 || cin % (r * r) != 0 {
        return Err(Error::InvalidShape { shape: input.shape().to_vec(), reason: "channels not divisible by r²" });
    }
    let c = cin / (r * r);
    let (oh, ow) = (h * r, w * r);
    let src = input.data();
    let mut out = Vec::with_capacity(src.len());
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let ic = ch * r * r + (y % r) * r + (x % r);
                out.push(src[(ic * h + y / r) * w + x / r]);
            }
        }
    }
    Tensor::new(&[c, oh, ow], out)
}

/// Backward of [`pixel_shuffle`]: the inverse permutation.
pub fn pixel_unshuffle<T: Real>(grad: &Tensor<T>, r: usize) -> Result<Tensor<T>> {
    let (c, oh, ow) = dims(grad)?;
    if r == 0 || oh % r != 0 || ow % r != 0 {
        return Err(Error::InvalidShape { shape: grad.shape().to_vec(), reason: "spatial size not divisible by r" });
    }
    let (h, w) = (oh / r, ow / r);
    let src = grad.data();
    let mut out = alloc::vec![T::zero(); src.len()];
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let ic = ch * r * r + (y % r) * r + (x % r);
                out[(ic * h + y / r) * w + x / r] = src[(ch * oh + y) * ow + x];
            }
        }
    }
    Tensor::new(&[c * r * r, h, w], out)
}
