//! Raster types and full-range BT.601 colour conversion.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Real, Result, Tensor};

/// Single-channel raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T: Real = f32> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Luminance (or chroma) plane with values in [0, 1].
pub type PlaneImage = Plane<f32>;

impl<T: Real> Plane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidShape {
                shape: vec![height, width],
                reason: "plane dimensions must be positive and match the data length",
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with coordinates clamped to the raster (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Clamp every value into [0, 1].
    pub fn clamped(&self) -> Self {
        self.map(|v| v.max(T::zero()).min(T::one()))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidShape {
                shape: vec![height, width],
                reason: "crop window outside the plane",
            });
        }
        Ok(Self::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y)))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64()).sum::<f64>() / self.data.len() as f64
    }

    pub fn cast<U: Real>(&self) -> Plane<U> {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    /// View as a `1 × H × W` tensor.
    pub fn to_tensor(&self) -> Tensor<T> {
        Tensor::new(&[1, self.height, self.width], self.data.clone()).expect("valid plane")
    }

    /// Accepts `[H, W]`, `[1, H, W]` or `[1, 1, H, W]` tensors.
    pub fn from_tensor(t: &Tensor<T>) -> Result<Self> {
        let s = t.shape();
        let (h, w) = match s {
            [h, w] => (*h, *w),
            [1, h, w] | [1, 1, h, w] => (*h, *w),
            _ => {
                return Err(Error::InvalidShape {
                    shape: s.to_vec(),
                    reason: "expected a single-channel raster",
                })
            }
        };
        Self::new(w, h, t.data().to_vec())
    }
}

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidShape {
                shape: vec![height, width],
                reason: "image dimensions must be positive and match the pixel count",
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    /// Grey image with every channel set from the quantized plane.
    pub fn from_plane<T: Real>(plane: &Plane<T>) -> Self {
        let pixels = plane
            .data()
            .iter()
            .map(|&v| {
                let q = quantize(v.as_f64());
                [q, q, q]
            })
            .collect();
        Self { width: plane.width(), height: plane.height(), pixels }
    }

    /// Split into one [0, 1] plane per channel.
    pub fn channel_planes(&self) -> [PlaneImage; 3] {
        let plane = |c: usize| Plane {
            width: self.width,
            height: self.height,
            data: self.pixels.iter().map(|p| p[c] as f32 / 255.0).collect(),
        };
        [plane(0), plane(1), plane(2)]
    }

    pub fn from_channel_planes(planes: &[PlaneImage; 3]) -> Result<Self> {
        let (w, h) = planes[0].dims();
        if planes.iter().any(|p| p.dims() != (w, h)) {
            return Err(Error::ShapeMismatch {
                left: vec![h, w],
                right: vec![planes[1].height(), planes[1].width()],
            });
        }
        let pixels = (0..w * h)
            .map(|i| {
                [
                    quantize(planes[0].data()[i] as f64),
                    quantize(planes[1].data()[i] as f64),
                    quantize(planes[2].data()[i] as f64),
                ]
            })
            .collect();
        Ok(Self { width: w, height: h, pixels })
    }
}

/// [0, 1] → 8-bit with clamping and round-half-up.
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    let q = num_traits::Float::floor(v * 255.0 + 0.5);
    q.clamp(0.0, 255.0) as u8
}

/// Y, Cb, Cr planes in [0, 1] (chroma centred on 0.5).
#[derive(Debug, Clone, PartialEq)]
pub struct YCbCr {
    pub y: PlaneImage,
    pub cb: PlaneImage,
    pub cr: PlaneImage,
}

const KR: f64 = 0.299;
const KG: f64 = 0.587;
const KB: f64 = 0.114;

/// Full-range BT.601 forward transform.
pub fn rgb_to_ycbcr(img: &RgbImage) -> YCbCr {
    let n = img.pixels.len();
    let (mut y, mut cb, mut cr) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &[r, g, b] in &img.pixels {
        let luma = (KR * r as f64 + KG * g as f64 + KB * b as f64) / 255.0;
        let (r, b) = (r as f64 / 255.0, b as f64 / 255.0);
        y.push(luma.clamp(0.0, 1.0) as f32);
        cb.push(((b - luma) / (2.0 * (1.0 - KB)) + 0.5).clamp(0.0, 1.0) as f32);
        cr.push(((r - luma) / (2.0 * (1.0 - KR)) + 0.5).clamp(0.0, 1.0) as f32);
    }
    let (w, h) = (img.width, img.height);
    YCbCr {
        y: Plane { width: w, height: h, data: y },
        cb: Plane { width: w, height: h, data: cb },
        cr: Plane { width: w, height: h, data: cr },
    }
}

/// Inverse of [`rgb_to_ycbcr`], quantizing to 8 bits.
pub fn ycbcr_to_rgb(ycc: &YCbCr) -> Result<RgbImage> {
    let (w, h) = ycc.y.dims();
    for p in [&ycc.cb, &ycc.cr] {
        if p.dims() != (w, h) {
            return Err(Error::ShapeMismatch {
                left: vec![h, w],
                right: vec![p.height(), p.width()],
            });
        }
    }
    let pixels = (0..w * h)
        .map(|i| {
            let y = ycc.y.data[i] as f64;
            let cb = ycc.cb.data[i] as f64 - 0.5;
            let cr = ycc.cr.data[i] as f64 - 0.5;
            let r = y + 2.0 * (1.0 - KR) * cr;
            let b = y + 2.0 * (1.0 - KB) * cb;
            let g = (y - KR * r - KB * b) / KG;
            [quantize(r), quantize(g), quantize(b)]
        })
        .collect();
    RgbImage::new(w, h, pixels)
}

/// Luminance plane of an RGB image.
pub fn luma(img: &RgbImage) -> PlaneImage {
    let data = img
        .pixels
        .iter()
        .map(|&[r, g, b]| {
            let v = (KR * r as f64 + KG * g as f64 + KB * b as f64) / 255.0;
            v.clamp(0.0, 1.0) as f32
        })
        .collect();
    Plane { width: img.width, height: img.height, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn solid(rgb: [u8; 3]) -> RgbImage {
        RgbImage::new(2, 2, vec![rgb; 4]).unwrap()
    }

    #[test]
    fn luminance_examples() {
        assert_eq!(rgb_to_ycbcr(&solid([255, 255, 255])).y.data()[0], 1.0);
        assert_eq!(rgb_to_ycbcr(&solid([0, 0, 0])).y.data()[0], 0.0);
        assert!((rgb_to_ycbcr(&solid([255, 0, 0])).y.data()[0] - 0.299).abs() < 1e-7);
        assert_eq!(luma(&solid([255, 0, 0])), rgb_to_ycbcr(&solid([255, 0, 0])).y);
    }

    #[test]
    fn grey_luma_is_exact_fraction() {
        for v in 0..=255u8 {
            let y = luma(&solid([v, v, v])).data()[0];
            assert_eq!(y, (v as f64 / 255.0) as f32, "grey level {v}");
        }
    }

    #[test]
    fn quantize_rounds_half_up_and_clamps() {
        assert_eq!(quantize(0.5 / 255.0), 1);
        assert_eq!(quantize(0.49 / 255.0), 0);
        assert_eq!(quantize(-0.3), 0);
        assert_eq!(quantize(1.7), 255);
        assert_eq!(quantize(f64::NAN), 0);
    }

    #[test]
    fn plane_tensor_round_trip_and_transpose() {
        let p = Plane::<f32>::from_fn(3, 2, |x, y| (x + 10 * y) as f32);
        let t = p.to_tensor();
        assert_eq!(t.shape(), &[1, 2, 3]);
        assert_eq!(Plane::from_tensor(&t).unwrap(), p);
        let tt = p.transpose();
        assert_eq!(tt.dims(), (2, 3));
        assert_eq!(tt.get(1, 2), p.get(2, 1));
        assert!(p.crop(2, 1, 2, 1).is_err());
        assert_eq!(p.crop(1, 1, 2, 1).unwrap().data(), &[11.0, 12.0]);
    }

    proptest! {
        #[test]
        fn ycbcr_round_trip_keeps_luma(
            px in proptest::collection::vec(any::<[u8; 3]>(), 12)
        ) {
            let img = RgbImage::new(4, 3, px).unwrap();
            let first = rgb_to_ycbcr(&img);
            let back = ycbcr_to_rgb(&first).unwrap();
            let second = rgb_to_ycbcr(&back);
            for (a, b) in first.y.data().iter().zip(second.y.data()) {
                prop_assert!((a - b).abs() < 2.0 / 255.0);
            }
            for v in first.y.data() {
                prop_assert!((0.0..=1.0).contains(v));
            }
        }
    }
}
