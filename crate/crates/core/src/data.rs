//! Training pairs, aligned patch extraction and seeded batching.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::nn::Architecture;
use crate::resample::{bicubic_resize, DegradationSpec, Scale};
use crate::{Error, PlaneImage, Result, Tensor};

/// Matched low-resolution input and high-resolution target (luminance).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub lr: PlaneImage,
    pub hr: PlaneImage,
    pub spec: DegradationSpec,
    /// Where the HR image came from; informational.
    pub source: String,
}

impl TrainingPair {
    pub fn scale(&self) -> usize {
        self.spec.scale.get()
    }
}

/// One aligned LR/HR window.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchPair {
    pub lr: PlaneImage,
    pub hr: PlaneImage,
}

/// Default HR patch edge: 33 for scale 3, 32 otherwise.
pub fn default_patch_size(scale: Scale) -> usize {
    if scale.get() == 3 {
        33
    } else {
        32
    }
}

/// Cut aligned windows on a `stride` grid. The HR window at `(sx, sy)` pairs
/// with the LR window at `(sx / scale, sy / scale)`; no resampling happens here.
pub fn extract_patches(pair: &TrainingPair, hr_patch: usize, stride: usize) -> Result<Vec<PatchPair>> {
    let s = pair.scale();
    if hr_patch == 0 || !hr_patch.is_multiple_of(s) {
        return Err(Error::InvalidConfig(alloc::format!(
            "patch size {hr_patch} must be a positive multiple of scale {s}"
        )));
    }
    if stride == 0 || !stride.is_multiple_of(s) {
        return Err(Error::InvalidConfig(alloc::format!(
            "stride {stride} must be a positive multiple of scale {s}"
        )));
    }
    let (w, h) = pair.hr.dims();
    if pair.lr.width() * s != w || pair.lr.height() * s != h {
        return Err(Error::ShapeMismatch {
            left: alloc::vec![pair.lr.height(), pair.lr.width()],
            right: alloc::vec![h, w],
        });
    }
    let lp = hr_patch / s;
    let mut out = Vec::new();
    if hr_patch > w || hr_patch > h {
        return Ok(out);
    }
    let mut sy = 0;
    while sy + hr_patch <= h {
        let mut sx = 0;
        while sx + hr_patch <= w {
            out.push(PatchPair {
                hr: pair.hr.crop(sx, sy, hr_patch, hr_patch)?,
                lr: pair.lr.crop(sx / s, sy / s, lp, lp)?,
            });
            sx += stride;
        }
        sy += stride;
    }
    Ok(out)
}

/// Stacked model inputs and targets, `B × 1 × h × w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: Tensor,
    pub targets: Tensor,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.inputs.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn stack(planes: &[PlaneImage]) -> Tensor {
    let (w, h) = planes[0].dims();
    let mut data = Vec::with_capacity(planes.len() * w * h);
    for p in planes {
        assert_eq!(p.dims(), (w, h), "patches must share one size");
        data.extend_from_slice(p.data());
    }
    Tensor::new(&[planes.len(), 1, h, w], data).expect("stacked batch")
}

/// Model input for one LR patch: SRCNN consumes the bicubic-upscaled patch,
/// ESPCN the LR patch itself.
pub fn model_input(arch: Architecture, lr: &PlaneImage, hr_w: usize, hr_h: usize) -> PlaneImage {
    match arch {
        Architecture::Srcnn => bicubic_resize(lr, hr_w, hr_h),
        Architecture::Espcn => lr.clone(),
    }
}

/// Fisher–Yates shuffle seeded by `seed`, then chunk into batches of
/// `batch_size` (the last may be short).
pub fn make_batches(patches: &[PatchPair], batch_size: usize, seed: u64, arch: Architecture) -> Vec<Batch> {
    assert!(batch_size >= 1, "batch size must be at least 1");
    let mut order: Vec<usize> = (0..patches.len()).collect();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order
        .chunks(batch_size)
        .map(|chunk| {
            let targets: Vec<PlaneImage> = chunk.iter().map(|&i| patches[i].hr.clone()).collect();
            let inputs: Vec<PlaneImage> = chunk
                .iter()
                .map(|&i| {
                    let p = &patches[i];
                    model_input(arch, &p.lr, p.hr.width(), p.hr.height())
                })
                .collect();
            Batch { inputs: stack(&inputs), targets: stack(&targets) }
        })
        .collect()
}
