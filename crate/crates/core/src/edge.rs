//! Edge operators used by the edge-preserving loss.
//!
//! [`canny_hard`] is the classic detector (blur → Sobel → non-maximum
//! suppression → hysteresis) and produces a binary map. It has no useful
//! gradient, so training goes through [`soft_edge_forward`], a smooth
//! surrogate: blur → Sobel → `√(gx² + gy² + ε)` → logistic step at the
//! threshold. [`edge_operator`] pairs a forward map with the surrogate's
//! backward pass, either straight (soft) or straight-through (hard forward).

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::resample::{gaussian_blur, gaussian_blur_adjoint};
use crate::{Error, Plane, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyConfig {
    pub sigma: f64,
    /// Weak threshold as a fraction of the maximum gradient magnitude.
    pub low_ratio: f64,
    /// Strong threshold as a fraction of the maximum gradient magnitude.
    pub high_ratio: f64,
}

impl Default for CannyConfig {
    fn default() -> Self {
        Self { sigma: 1.4, low_ratio: 0.1, high_ratio: 0.2 }
    }
}

impl CannyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(Error::InvalidConfig(alloc::format!("canny sigma {} must be > 0", self.sigma)));
        }
        if !(0.0 < self.low_ratio && self.low_ratio < self.high_ratio && self.high_ratio <= 1.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "canny thresholds need 0 < low ({}) < high ({}) <= 1",
                self.low_ratio,
                self.high_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftEdgeConfig {
    pub sigma: f64,
    /// Magnitude at which the response crosses 0.5.
    pub threshold: f64,
    /// Slope of the logistic step.
    pub sharpness: f64,
    /// Keeps the magnitude differentiable at zero gradient.
    pub epsilon: f64,
}

impl Default for SoftEdgeConfig {
    fn default() -> Self {
        Self { sigma: 1.4, threshold: 0.2, sharpness: 20.0, epsilon: 1e-6 }
    }
}

impl SoftEdgeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma > 0.0
            && self.sharpness > 0.0
            && self.epsilon > 0.0
            && (0.0..=1.0).contains(&self.threshold);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!("invalid soft edge config {self:?}")))
        }
    }
}

/// Which forward map the loss compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMode {
    /// Soft forward, soft backward.
    Soft,
    /// Hard Canny forward, soft backward (straight-through).
    HardSt,
}

fn require_3x3<T: Real>(img: &Plane<T>) -> Result<()> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min_width: 3,
            min_height: 3,
        });
    }
    Ok(())
}

/// 3×3 Sobel gradients with edge replication. `gx` is positive when the image
/// brightens to the right, `gy` when it brightens downwards.
pub fn sobel<T: Real>(img: &Plane<T>) -> (Plane<T>, Plane<T>) {
    let (w, h) = img.dims();
    let two = T::of(2.0);
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy);
            gx.push((p(1, -1) + two * p(1, 0) + p(1, 1)) - (p(-1, -1) + two * p(-1, 0) + p(-1, 1)));
            gy.push((p(-1, 1) + two * p(0, 1) + p(1, 1)) - (p(-1, -1) + two * p(0, -1) + p(1, -1)));
        }
    }
    (Plane::new(w, h, gx).unwrap(), Plane::new(w, h, gy).unwrap())
}

/// Adjoint of [`sobel`] applied to the pair of gradient planes.
fn sobel_adjoint<T: Real>(ggx: &Plane<T>, ggy: &Plane<T>) -> Plane<T> {
    let (w, h) = ggx.dims();
    let mut out = vec![T::zero(); w * h];
    let idx = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        y * w + x
    };
    let weights = [T::one(), T::of(2.0), T::one()];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let a = ggx.get(x as usize, y as usize);
            let b = ggy.get(x as usize, y as usize);
            for (k, &wt) in weights.iter().enumerate() {
                let d = k as isize - 1;
                out[idx(x + 1, y + d)] += wt * a;
                out[idx(x - 1, y + d)] -= wt * a;
                out[idx(x + d, y + 1)] += wt * b;
                out[idx(x + d, y - 1)] -= wt * b;
            }
        }
    }
    Plane::new(w, h, out).unwrap()
}

/// Unit step toward the neighbour compared "forward" for each direction bin.
fn direction_step(gx: f64, gy: f64) -> (isize, isize) {
    let mut angle = Float::to_degrees(Float::atan2(gy, gx));
    if angle < 0.0 {
        angle += 180.0;
    }
    if angle >= 180.0 {
        angle -= 180.0;
    }
    // nearest of 0/45/90/135, ties to the lower angle
    if angle <= 22.5 || angle > 157.5 {
        (1, 0)
    } else if angle <= 67.5 {
        (1, 1)
    } else if angle <= 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

/// Classic Canny detector; returns exactly 0 or 1 per pixel.
///
/// Equal magnitudes along the gradient direction (within 1e-9 of the maximum)
/// keep the pixel on the negative side only, so a symmetric step yields a
/// one-pixel-wide line.
pub fn canny_hard<T: Real>(img: &Plane<T>, cfg: &CannyConfig) -> Result<Plane<T>> {
    require_3x3(img)?;
    cfg.validate()?;
    let (w, h) = img.dims();
    let blurred = gaussian_blur(&img.cast::<f64>(), cfg.sigma);
    let (gx, gy) = sobel(&blurred);
    let mag: Vec<f64> =
        gx.data().iter().zip(gy.data()).map(|(&a, &b)| (a * a + b * b).sqrt()).collect();
    let max_mag = mag.iter().cloned().fold(0.0, f64::max);
    let mut out = Plane::filled(w, h, T::zero());
    if max_mag <= 0.0 {
        return Ok(out);
    }
    let tol = 1e-9 * max_mag;
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    let mut thin = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let m = mag[y * w + x];
            if m <= 0.0 {
                continue;
            }
            let (dx, dy) = direction_step(gx.get(x, y), gy.get(x, y));
            let (xi, yi) = (x as isize, y as isize);
            let back = at(xi - dx, yi - dy);
            let fwd = at(xi + dx, yi + dy);
            if m - back > tol && m - fwd >= -tol {
                thin[y * w + x] = m;
            }
        }
    }

    let high = cfg.high_ratio * max_mag;
    let low = cfg.low_ratio * max_mag;
    let mut stack = Vec::new();
    for i in 0..w * h {
        if thin[i] > 0.0 && thin[i] >= high && out.data()[i] == T::zero() {
            out.data_mut()[i] = T::one();
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = ((j % w) as isize, (j / w) as isize);
                for ny in jy - 1..=jy + 1 {
                    for nx in jx - 1..=jx + 1 {
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let k = ny as usize * w + nx as usize;
                        if thin[k] > 0.0 && thin[k] >= low && out.data()[k] == T::zero() {
                            out.data_mut()[k] = T::one();
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Forward intermediates of the soft surrogate, kept for its backward pass.
#[derive(Debug, Clone)]
pub struct SoftEdgeTrace<T: Real> {
    gx: Plane<T>,
    gy: Plane<T>,
    mag: Plane<T>,
    out: Plane<T>,
    cfg: SoftEdgeConfig,
}

impl<T: Real> SoftEdgeTrace<T> {
    pub fn run(img: &Plane<T>, cfg: &SoftEdgeConfig) -> Result<Self> {
        require_3x3(img)?;
        cfg.validate()?;
        let blurred = gaussian_blur(img, cfg.sigma);
        let (gx, gy) = sobel(&blurred);
        let eps = T::of(cfg.epsilon);
        let k = T::of(cfg.sharpness);
        let t = T::of(cfg.threshold);
        let mag: Vec<T> = gx
            .data()
            .iter()
            .zip(gy.data())
            .map(|(&a, &b)| (a * a + b * b + eps).sqrt())
            .collect();
        let out: Vec<T> = mag.iter().map(|&m| T::one() / (T::one() + (-k * (m - t)).exp())).collect();
        let (w, h) = img.dims();
        Ok(Self {
            gx,
            gy,
            mag: Plane::new(w, h, mag).unwrap(),
            out: Plane::new(w, h, out).unwrap(),
            cfg: *cfg,
        })
    }

    pub fn output(&self) -> &Plane<T> {
        &self.out
    }

    pub fn magnitude(&self) -> &Plane<T> {
        &self.mag
    }

    /// ∂(Σ upstream · out) / ∂img.
    pub fn backward(&self, upstream: &Plane<T>) -> Result<Plane<T>> {
        if upstream.dims() != self.out.dims() {
            return Err(Error::ShapeMismatch {
                left: vec![self.out.height(), self.out.width()],
                right: vec![upstream.height(), upstream.width()],
            });
        }
        let (w, h) = self.out.dims();
        let k = T::of(self.cfg.sharpness);
        let mut ggx = Vec::with_capacity(w * h);
        let mut ggy = Vec::with_capacity(w * h);
        for i in 0..w * h {
            let s = self.out.data()[i];
            let gm = upstream.data()[i] * k * s * (T::one() - s);
            let m = self.mag.data()[i];
            ggx.push(gm * self.gx.data()[i] / m);
            ggy.push(gm * self.gy.data()[i] / m);
        }
        let ggx = Plane::new(w, h, ggx).unwrap();
        let ggy = Plane::new(w, h, ggy).unwrap();
        Ok(gaussian_blur_adjoint(&sobel_adjoint(&ggx, &ggy), self.cfg.sigma))
    }
}

pub fn soft_edge_forward<T: Real>(img: &Plane<T>, cfg: &SoftEdgeConfig) -> Result<Plane<T>> {
    Ok(SoftEdgeTrace::run(img, cfg)?.out)
}

pub fn soft_edge_backward<T: Real>(img: &Plane<T>, cfg: &SoftEdgeConfig, upstream: &Plane<T>) -> Result<Plane<T>> {
    if upstream.dims() != img.dims() {
        return Err(Error::ShapeMismatch {
            left: vec![img.height(), img.width()],
            right: vec![upstream.height(), upstream.width()],
        });
    }
    SoftEdgeTrace::run(img, cfg)?.backward(upstream)
}

/// Single-use backward pass returned by [`edge_operator`].
#[derive(Debug)]
pub struct EdgeBackward<T: Real> {
    trace: SoftEdgeTrace<T>,
}

impl<T: Real> EdgeBackward<T> {
    pub fn backward(self, upstream: &Plane<T>) -> Result<Plane<T>> {
        self.trace.backward(upstream)
    }
}

/// Edge map of `img` under `mode`, plus the surrogate backward pass.
pub fn edge_operator<T: Real>(
    img: &Plane<T>,
    mode: EdgeMode,
    canny: &CannyConfig,
    soft: &SoftEdgeConfig,
) -> Result<(Plane<T>, EdgeBackward<T>)> {
    let trace = SoftEdgeTrace::run(img, soft)?;
    let map = match mode {
        EdgeMode::Soft => trace.out.clone(),
        EdgeMode::HardSt => canny_hard(img, canny)?,
    };
    Ok((map, EdgeBackward { trace }))
}

/// Forward map only, for targets and evaluation.
pub fn edge_map<T: Real>(img: &Plane<T>, mode: EdgeMode, canny: &CannyConfig, soft: &SoftEdgeConfig) -> Result<Plane<T>> {
    match mode {
        EdgeMode::Soft => soft_edge_forward(img, soft),
        EdgeMode::HardSt => canny_hard(img, canny),
    }
}
