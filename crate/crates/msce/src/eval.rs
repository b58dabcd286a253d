//! Checkpoint files, single-image super-resolution and dataset evaluation.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use msce_core::image::{rgb_to_ycbcr, ycbcr_to_rgb, YCbCr};
use msce_core::metrics::{format_metric, psnr, ssim, EvalRecord, PER_IMAGE_HEADER, SUMMARY_HEADER};
use msce_core::nn::{checkpoint, Architecture, Model};
use msce_core::resample::{bicubic_resize, synthesize_pair, DegradationSpec, Scale};
use msce_core::{image::luma, PlaneImage, RgbImage};

use crate::corpus::scan_corpus;
use crate::error::{CliError, CliResult};
use crate::image_io::load_png;
use crate::parallel::ordered_map;

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> CliResult<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint::encode(model)).map_err(|e| CliError::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> CliResult<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Usage(format!("{}: checkpoint not found", path.display())),
        _ => CliError::io(path, e),
    })?;
    checkpoint::decode(&bytes).map_err(|e| CliError::core(path.display().to_string(), e))
}

/// How LR luminance is brought to HR size.
#[derive(Debug, Clone)]
pub enum Method {
    Bicubic,
    Learned(Model),
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Bicubic => "bicubic".into(),
            Method::Learned(m) => m.arch().to_string(),
        }
    }

    /// Reject a model trained for a different scale.
    pub fn check_scale(&self, scale: Scale) -> CliResult<()> {
        match self {
            Method::Learned(m) if m.scale() != scale => Err(CliError::Usage(format!(
                "checkpoint is a {}x {} model but scale {} was requested",
                m.scale(),
                m.arch(),
                scale
            ))),
            _ => Ok(()),
        }
    }

    /// Upscale one luminance plane by `scale`; output clamped to [0, 1].
    pub fn upscale(&self, lr: &PlaneImage, scale: Scale) -> CliResult<PlaneImage> {
        self.check_scale(scale)?;
        let (w, h) = (lr.width() * scale.get(), lr.height() * scale.get());
        let out = match self {
            Method::Bicubic => bicubic_resize(lr, w, h),
            Method::Learned(m) => match m.arch() {
                Architecture::Srcnn => m.infer(&bicubic_resize(lr, w, h))?,
                Architecture::Espcn => m.infer(lr)?,
            },
        };
        Ok(out.clamped())
    }
}

/// Luminance through `method`, chroma bicubic.
pub fn super_resolve(method: &Method, img: &RgbImage, scale: Scale) -> CliResult<RgbImage> {
    let ycc = rgb_to_ycbcr(img);
    let (w, h) = (img.width() * scale.get(), img.height() * scale.get());
    let up = YCbCr {
        y: method.upscale(&ycc.y, scale)?,
        cb: bicubic_resize(&ycc.cb, w, h),
        cr: bicubic_resize(&ycc.cr, w, h),
    };
    Ok(ycbcr_to_rgb(&up)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageScore {
    pub path: PathBuf,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub record: EvalRecord,
    pub per_image: Vec<ImageScore>,
}

/// Degrade every HR image in `dir` with `spec`, reconstruct it, and score the
/// luminance against the HR crop with a border shave equal to the scale.
pub fn evaluate_dataset(method: &Method, dir: &Path, spec: &DegradationSpec, dataset: &str, threads: usize) -> CliResult<Evaluation> {
    method.check_scale(spec.scale)?;
    let corpus = scan_corpus(dir)?;
    let shave = spec.scale.get();
    let scores = ordered_map(&corpus.paths, threads, |path| -> CliResult<ImageScore> {
        let hr = luma(&load_png(path)?);
        let pair = synthesize_pair(&hr, spec).map_err(|e| CliError::core(path.display().to_string(), e))?;
        let sr = method.upscale(&pair.lr, spec.scale)?;
        let ctx = |e| CliError::core(path.display().to_string(), e);
        Ok(ImageScore { path: path.clone(), psnr: psnr(&sr, &pair.hr, shave).map_err(ctx)?, ssim: ssim(&sr, &pair.hr, shave).map_err(ctx)? })
    })
    .into_iter()
    .collect::<CliResult<Vec<_>>>()?;
    let values: Vec<(f64, f64)> = scores.iter().map(|s| (s.psnr, s.ssim)).collect();
    let record = EvalRecord::from_values(dataset, shave, &method.label(), &values)?;
    Ok(Evaluation { record, per_image: scores })
}

/// Write summary rows, either replacing the file or appending to it (the
/// header is written only when the file is new or empty).
pub fn write_summary_csv(path: &Path, records: &[EvalRecord], append: bool) -> CliResult<()> {
    let fresh = !append || fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut text = String::new();
    if fresh {
        text.push_str(SUMMARY_HEADER);
        text.push('\n');
    }
    for r in records {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    let mut file = fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(!fresh)
        .truncate(fresh)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

pub fn write_per_image_csv(path: &Path, scores: &[ImageScore], scale: usize) -> CliResult<()> {
    let mut text = format!("{PER_IMAGE_HEADER}\n");
    for s in scores {
        let _ = writeln!(text, "{},{},{},{}", s.path.display(), scale, format_metric(s.psnr), format_metric(s.ssim));
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
