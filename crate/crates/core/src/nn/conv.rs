use alloc::vec;

use crate::{Error, Real, Result, Tensor};

/// Same-size 2-D cross-correlation with zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T: Real = f32> {
    /// `out_ch × in_ch × kh × kw`
    pub weight: Tensor<T>,
    /// `out_ch`
    pub bias: Tensor<T>,
}

/// Parameter gradients of one convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T: Real = f32> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Real> ConvGrads<T> {
    pub fn zeros_like(conv: &Conv2d<T>) -> Self {
        Self { weight: Tensor::zeros(conv.weight.shape()), bias: Tensor::zeros(conv.bias.shape()) }
    }
}

impl<T: Real> Conv2d<T> {
    pub fn zeros(out_ch: usize, in_ch: usize, kh: usize, kw: usize) -> Self {
        assert!(kh % 2 == 1 && kw % 2 == 1, "kernel extents must be odd");
        Self { weight: Tensor::zeros(&[out_ch, in_ch, kh, kw]), bias: Tensor::zeros(&[out_ch]) }
    }

    pub fn from_parts(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let s = weight.shape();
        if s.len() != 4 || s[2].is_multiple_of(2) || s[3].is_multiple_of(2) {
            return Err(Error::InvalidShape { shape: s.to_vec(), reason: "kernel must be o×i×kh×kw with odd kh, kw" });
        }
        if bias.shape() != [s[0]] {
            return Err(Error::ShapeMismatch { left: vec![s[0]], right: bias.shape().to_vec() });
        }
        Ok(Self { weight, bias })
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn kernel(&self) -> (usize, usize) {
        (self.weight.shape()[2], self.weight.shape()[3])
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<(usize, usize)> {
        let s = input.shape();
        if s.len() != 3 {
            return Err(Error::InvalidShape { shape: s.to_vec(), reason: "expected C×H×W input" });
        }
        if s[0] != self.in_channels() {
            return Err(Error::ChannelMismatch { expected: self.in_channels(), found: s[0] });
        }
        Ok((s[1], s[2]))
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let (h, w) = self.check_input(input)?;
        let (oc, ic) = (self.out_channels(), self.in_channels());
        let (kh, kw) = self.kernel();
        let (ph, pw) = (kh / 2, kw / 2);
        let inp = input.data();
        let wt = self.weight.data();
        let mut out = Tensor::zeros(&[oc, h, w]);
        let od = out.data_mut();
        for o in 0..oc {
            let plane = &mut od[o * h * w..(o + 1) * h * w];
            plane.fill(self.bias.data()[o]);
            for i in 0..ic {
                let src = &inp[i * h * w..(i + 1) * h * w];
                for ky in 0..kh {
                    // output rows whose source row y + ky − ph is inside the image
                    let y0 = ph.saturating_sub(ky);
                    let y1 = (h + ph).saturating_sub(ky).min(h);
                    for kx in 0..kw {
                        let k = wt[((o * ic + i) * kh + ky) * kw + kx];
                        let x0 = pw.saturating_sub(kx);
                        let x1 = (w + pw).saturating_sub(kx).min(w);
                        if x0 >= x1 {
                            continue;
                        }
                        for y in y0..y1 {
                            let sy = y + ky - ph;
                            let dst = &mut plane[y * w + x0..y * w + x1];
                            let s = &src[sy * w + x0 + kx - pw..sy * w + x1 + kx - pw];
                            for (d, &v) in dst.iter_mut().zip(s) {
                                *d += k * v;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients into `grads` and returns the input
    /// gradient when `want_input_grad` is set.
    pub fn backward(
        &self,
        input: &Tensor<T>,
        grad_out: &Tensor<T>,
        grads: &mut ConvGrads<T>,
        want_input_grad: bool,
    ) -> Result<Option<Tensor<T>>> {
        let (h, w) = self.check_input(input)?;
        let (oc, ic) = (self.out_channels(), self.in_channels());
        if grad_out.shape() != [oc, h, w] {
            return Err(Error::ShapeMismatch { left: vec![oc, h, w], right: grad_out.shape().to_vec() });
        }
        let (kh, kw) = self.kernel();
        let (ph, pw) = (kh / 2, kw / 2);
        let inp = input.data();
        let go = grad_out.data();
        let wt = self.weight.data();
        let mut gin = if want_input_grad { Some(Tensor::zeros(&[ic, h, w])) } else { None };

        for o in 0..oc {
            let gplane = &go[o * h * w..(o + 1) * h * w];
            grads.bias.data_mut()[o] += gplane.iter().copied().sum::<T>();
            for i in 0..ic {
                let src = &inp[i * h * w..(i + 1) * h * w];
                for ky in 0..kh {
                    let y0 = ph.saturating_sub(ky);
                    let y1 = (h + ph).saturating_sub(ky).min(h);
                    for kx in 0..kw {
                        let widx = ((o * ic + i) * kh + ky) * kw + kx;
                        let x0 = pw.saturating_sub(kx);
                        let x1 = (w + pw).saturating_sub(kx).min(w);
                        if x0 >= x1 {
                            continue;
                        }
                        let mut acc = T::zero();
                        for y in y0..y1 {
                            let sy = y + ky - ph;
                            let g = &gplane[y * w + x0..y * w + x1];
                            let s = &src[sy * w + x0 + kx - pw..sy * w + x1 + kx - pw];
                            for (&a, &b) in g.iter().zip(s) {
                                acc += a * b;
                            }
                        }
                        grads.weight.data_mut()[widx] += acc;

                        if let Some(gin) = gin.as_mut() {
                            let k = wt[widx];
                            let gi = &mut gin.data_mut()[i * h * w..(i + 1) * h * w];
                            for y in y0..y1 {
                                let sy = y + ky - ph;
                                let g = &gplane[y * w + x0..y * w + x1];
                                let d = &mut gi[sy * w + x0 + kx - pw..sy * w + x1 + kx - pw];
                                for (dv, &gv) in d.iter_mut().zip(g) {
                                    *dv += k * gv;
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(gin)
    }
}
