//! PSNR and SSIM on planes in [0, 1], with a border shave.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::{Error, Plane, Real, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn shaved<T: Real>(a: &Plane<T>, b: &Plane<T>, shave: usize) -> Result<(Vec<f64>, Vec<f64>, usize, usize)> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch { left: vec![a.height(), a.width()], right: vec![b.height(), b.width()] });
    }
    let (w, h) = a.dims();
    if 2 * shave >= w.min(h) {
        return Err(Error::ImageTooSmall { width: w, height: h, min_width: 2 * shave + 1, min_height: 2 * shave + 1 });
    }
    let (cw, ch) = (w - 2 * shave, h - 2 * shave);
    let crop = |p: &Plane<T>| -> Vec<f64> {
        let mut v = Vec::with_capacity(cw * ch);
        for y in shave..h - shave {
            v.extend(p.data()[y * w + shave..y * w + w - shave].iter().map(|x| x.as_f64()));
        }
        v
    };
    Ok((crop(a), crop(b), cw, ch))
}

/// `10·log10(1 / mse)` after removing `shave` pixels from each border.
/// Identical inputs give `+∞`.
pub fn psnr<T: Real>(a: &Plane<T>, b: &Plane<T>, shave: usize) -> Result<f64> {
    let (a, b, _, _) = shaved(a, b, shave)?;
    let mse = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * Float::log10(1.0 / mse) })
}

fn ssim_window() -> [f64; SSIM_WINDOW * SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let x = i as f64 - r;
            Float::exp(-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
        })
        .collect();
    let mut w = [0.0; SSIM_WINDOW * SSIM_WINDOW];
    for (i, gi) in g.iter().enumerate() {
        for (j, gj) in g.iter().enumerate() {
            w[i * SSIM_WINDOW + j] = gi * gj;
        }
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Mean SSIM over every fully contained 11×11 Gaussian window (σ = 1.5,
/// K1 = 0.01, K2 = 0.03, range 1). Local variances use central moments.
pub fn ssim<T: Real>(a: &Plane<T>, b: &Plane<T>, shave: usize) -> Result<f64> {
    let (w, h) = a.dims();
    if w < 2 * shave + SSIM_WINDOW || h < 2 * shave + SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min_width: 2 * shave + SSIM_WINDOW,
            min_height: 2 * shave + SSIM_WINDOW,
        });
    }
    let (a, b, cw, ch) = shaved(a, b, shave)?;
    let win = ssim_window();
    let n = SSIM_WINDOW;
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=ch - n {
        for x0 in 0..=cw - n {
            let at = |v: &[f64], i: usize, j: usize| v[(y0 + i) * cw + x0 + j];
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let k = win[i * n + j];
                    ma += k * at(&a, i, j);
                    mb += k * at(&b, i, j);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let k = win[i * n + j];
                    let da = at(&a, i, j) - ma;
                    let db = at(&b, i, j) - mb;
                    va += k * da * da;
                    vb += k * db * db;
                    cov += k * da * db;
                }
            }
            total += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// One summary row: mean metrics of a method on a dataset at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub dataset: String,
    pub scale: usize,
    pub method: String,
    pub psnr: f64,
    pub ssim: f64,
    pub count: usize,
}

impl EvalRecord {
    /// Averages per-image `(psnr, ssim)` values. Any infinite PSNR makes the mean infinite.
    pub fn from_values(dataset: &str, scale: usize, method: &str, values: &[(f64, f64)]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig(format!("no images evaluated for dataset `{dataset}`")));
        }
        let n = values.len() as f64;
        Ok(Self {
            dataset: dataset.into(),
            scale,
            method: method.into(),
            psnr: values.iter().map(|v| v.0).sum::<f64>() / n,
            ssim: values.iter().map(|v| v.1).sum::<f64>() / n,
            count: values.len(),
        })
    }

    /// `dataset,scale,method,psnr,ssim`
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.dataset, self.scale, self.method, format_metric(self.psnr), format_metric(self.ssim))
    }
}

pub const SUMMARY_HEADER: &str = "dataset,scale,method,psnr,ssim";
pub const PER_IMAGE_HEADER: &str = "path,scale,psnr,ssim";

/// Fixed six-decimal rendering; `+∞` becomes `inf`.
pub fn format_metric(v: f64) -> String {
    if v == f64::INFINITY {
        String::from("inf")
    } else {
        format!("{v:.6}")
    }
}

pub fn parse_metric(s: &str) -> Option<f64> {
    if s == "inf" {
        Some(f64::INFINITY)
    } else {
        s.parse().ok()
    }
}
