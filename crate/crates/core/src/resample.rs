//! Bicubic resizing, Gaussian blur and LR/HR pair synthesis.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::Float;

use crate::data::TrainingPair;
use crate::{Error, Plane, PlaneImage, Real, Result};

/// Keys cubic convolution parameter (Catmull-Rom).
const CUBIC_A: f64 = -0.5;

pub(crate) fn cubic_weight(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((CUBIC_A + 2.0) * x - (CUBIC_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((CUBIC_A * x - 5.0 * CUBIC_A) * x + 8.0 * CUBIC_A) * x - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Source taps and weights for every output position along one axis.
fn cubic_taps(in_len: usize, out_len: usize) -> Vec<([isize; 4], [f64; 4])> {
    let ratio = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|dst| {
            let src = (dst as f64 + 0.5) * ratio - 0.5;
            let base = Float::floor(src);
            let frac = src - base;
            let base = base as isize;
            let mut idx = [0isize; 4];
            let mut w = [0.0; 4];
            for k in 0..4 {
                idx[k] = (base - 1 + k as isize).clamp(0, in_len as isize - 1);
                w[k] = cubic_weight(frac - (k as f64 - 1.0));
            }
            let total: f64 = w.iter().sum();
            for v in &mut w {
                *v /= total;
            }
            (idx, w)
        })
        .collect()
}

/// Separable bicubic resize with edge-clamped sampling and centre-aligned
/// coordinates. Output is clamped to [0, 1].
pub fn bicubic_resize<T: Real>(img: &Plane<T>, out_w: usize, out_h: usize) -> Plane<T> {
    assert!(out_w > 0 && out_h > 0, "empty resize target");
    let (in_w, in_h) = img.dims();
    let xt = cubic_taps(in_w, out_w);
    let yt = cubic_taps(in_h, out_h);

    let mut rows = vec![0.0f64; in_h * out_w];
    for y in 0..in_h {
        let src = &img.data()[y * in_w..(y + 1) * in_w];
        for (x, (idx, w)) in xt.iter().enumerate() {
            let mut acc = 0.0;
            for k in 0..4 {
                acc += w[k] * src[idx[k] as usize].as_f64();
            }
            rows[y * out_w + x] = acc;
        }
    }
    let mut out = Vec::with_capacity(out_w * out_h);
    for (idx, w) in &yt {
        for x in 0..out_w {
            let mut acc = 0.0;
            for k in 0..4 {
                acc += w[k] * rows[idx[k] as usize * out_w + x];
            }
            out.push(T::of(acc.clamp(0.0, 1.0)));
        }
    }
    Plane::new(out_w, out_h, out).expect("resize dimensions")
}

/// Normalized 1-D Gaussian taps, half-width `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let half = Float::ceil(3.0 * sigma) as isize;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| {
            let x = i as f64;
            Float::exp(-(x * x) / (2.0 * sigma * sigma))
        })
        .collect();
    let total: f64 = k.iter().sum();
    for v in &mut k {
        *v /= total;
    }
    k
}

fn blur_rows<T: Real>(src: &[T], w: usize, h: usize, k: &[f64], out: &mut [T]) {
    let half = (k.len() / 2) as isize;
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (j, &kw) in k.iter().enumerate() {
                let sx = (x as isize + j as isize - half).clamp(0, w as isize - 1) as usize;
                acc += kw * row[sx].as_f64();
            }
            out[y * w + x] = T::of(acc);
        }
    }
}

fn blur_cols<T: Real>(src: &[T], w: usize, h: usize, k: &[f64], out: &mut [T]) {
    let half = (k.len() / 2) as isize;
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, &kw) in k.iter().enumerate() {
                let sy = (y as isize + j as isize - half).clamp(0, h as isize - 1) as usize;
                acc += kw * src[sy * w + x].as_f64();
            }
            out[y * w + x] = T::of(acc);
        }
    }
}

/// Separable Gaussian blur, σ = `radius`, edge-clamped.
pub fn gaussian_blur<T: Real>(img: &Plane<T>, radius: f64) -> Plane<T> {
    assert!(radius > 0.0, "blur radius must be positive");
    let k = gaussian_kernel(radius);
    let (w, h) = img.dims();
    let mut tmp = vec![T::zero(); w * h];
    let mut out = vec![T::zero(); w * h];
    blur_rows(img.data(), w, h, &k, &mut tmp);
    blur_cols(&tmp, w, h, &k, &mut out);
    Plane::new(w, h, out).expect("blur dimensions")
}

/// Adjoint of [`gaussian_blur`]: scatters each output gradient back onto the
/// (clamped) source pixels that produced it.
pub(crate) fn gaussian_blur_adjoint<T: Real>(grad: &Plane<T>, radius: f64) -> Plane<T> {
    let k = gaussian_kernel(radius);
    let half = (k.len() / 2) as isize;
    let (w, h) = grad.dims();
    let g = grad.data();

    let mut tmp = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let gv = g[y * w + x].as_f64();
            for (j, &kw) in k.iter().enumerate() {
                let sy = (y as isize + j as isize - half).clamp(0, h as isize - 1) as usize;
                tmp[sy * w + x] += kw * gv;
            }
        }
    }
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let gv = tmp[y * w + x];
            for (j, &kw) in k.iter().enumerate() {
                let sx = (x as isize + j as isize - half).clamp(0, w as isize - 1) as usize;
                out[y * w + sx] += kw * gv;
            }
        }
    }
    Plane::new(w, h, out.into_iter().map(T::of).collect()).expect("blur dimensions")
}

/// Integer upscaling factor, one of 2, 3, 4, 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scale(usize);

impl Scale {
    pub const ALL: [Scale; 4] = [Scale(2), Scale(3), Scale(4), Scale(8)];

    pub fn new(factor: usize) -> Result<Self> {
        match factor {
            2 | 3 | 4 | 8 => Ok(Self(factor)),
            other => Err(Error::InvalidScale(other)),
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Optional blur applied before downscaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreBlur {
    None,
    Gaussian { radius: f64 },
}

impl fmt::Display for PreBlur {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreBlur::None => f.write_str("none"),
            PreBlur::Gaussian { radius } => write!(f, "gaussian:{radius}"),
        }
    }
}

impl FromStr for PreBlur {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(alloc::format!("blur `{s}` (expected none or gaussian:R)"));
        if s == "none" {
            return Ok(PreBlur::None);
        }
        let radius: f64 = s.strip_prefix("gaussian:").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(bad());
        }
        Ok(PreBlur::Gaussian { radius })
    }
}

/// How a low-resolution input is synthesized from a high-resolution image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationSpec {
    pub scale: Scale,
    pub pre_blur: PreBlur,
}

impl DegradationSpec {
    /// Plain bicubic downscaling.
    pub fn bicubic(scale: Scale) -> Self {
        Self { scale, pre_blur: PreBlur::None }
    }

    /// Gaussian blur (σ = 2) followed by bicubic downscaling.
    pub fn blurred(scale: Scale) -> Self {
        Self { scale, pre_blur: PreBlur::Gaussian { radius: 2.0 } }
    }

    pub fn describe(&self) -> String {
        alloc::format!("x{} blur={}", self.scale, self.pre_blur)
    }
}

/// Crop (top-left anchored) so both dimensions are multiples of `scale`.
pub fn crop_to_multiple<T: Real>(img: &Plane<T>, scale: usize) -> Result<Plane<T>> {
    let (w, h) = img.dims();
    if w < scale || h < scale {
        return Err(Error::ImageTooSmall { width: w, height: h, min_width: scale, min_height: scale });
    }
    img.crop(0, 0, w - w % scale, h - h % scale)
}

/// Low-resolution input for an already-cropped HR plane.
pub fn degrade<T: Real>(hr: &Plane<T>, spec: &DegradationSpec) -> Plane<T> {
    let s = spec.scale.get();
    let (w, h) = hr.dims();
    match spec.pre_blur {
        PreBlur::None => bicubic_resize(hr, w / s, h / s),
        PreBlur::Gaussian { radius } => bicubic_resize(&gaussian_blur(hr, radius), w / s, h / s),
    }
}

/// Crop `hr` to a multiple of the scale and synthesize its LR counterpart.
pub fn synthesize_pair(hr: &PlaneImage, spec: &DegradationSpec) -> Result<TrainingPair> {
    let hr = crop_to_multiple(hr, spec.scale.get())?;
    let lr = degrade(&hr, spec);
    Ok(TrainingPair { lr, hr, spec: *spec, source: "".to_string() })
}
