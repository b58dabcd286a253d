//! Command-line surface: flag definitions, the `--config` merge, and command dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use msce_core::edge::{canny_hard, CannyConfig};
use msce_core::image::luma;
use msce_core::loss::{EdgeLossMode, LossConfig, MuCandidates, DEFAULT_MU};
use msce_core::nn::Architecture;
use msce_core::optim::AdamConfig;
use msce_core::resample::{crop_to_multiple, degrade, DegradationSpec, PreBlur, Scale};
use msce_core::data::default_patch_size;
use msce_core::RgbImage;

use crate::corpus::scan_corpus;
use crate::error::{CliError, CliResult};
use crate::eval::{evaluate_dataset, load_checkpoint, save_checkpoint, super_resolve, write_per_image_csv, write_summary_csv, Method};
use crate::image_io::{load_png, save_gray_png, save_png};
use crate::training::{run_training, TrainOptions};

fn parse_scale(s: &str) -> Result<Scale, String> {
    let n: usize = s.parse().map_err(|_| format!("`{s}` is not an integer"))?;
    Scale::new(n).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "msce", version, about = "Super-resolution training and evaluation with an edge-preserving loss")]
pub struct Cli {
    /// key=value file whose entries act as flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (1 keeps every run bit-reproducible).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write LR versions of every PNG in a directory.
    #[command(args_override_self = true)]
    Degrade(DegradeArgs),
    /// Train an SRCNN or ESPCN model.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Super-resolve one image with a checkpoint.
    #[command(args_override_self = true)]
    Sr(SrArgs),
    /// Score a checkpoint (or plain bicubic) on a directory of HR images.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Run the Canny detector and write a binary edge PNG.
    #[command(args_override_self = true)]
    Canny(CannyArgs),
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_scale)]
    pub scale: Scale,
    /// `none` or `gaussian:R` (σ = R).
    #[arg(long, default_value = "none")]
    pub blur: PreBlur,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LossKind {
    Mse,
    Msce,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value = "srcnn")]
    pub model: Architecture,
    #[arg(long, value_parser = parse_scale, default_value = "2")]
    pub scale: Scale,
    #[arg(long, value_enum, default_value = "msce")]
    pub loss: LossKind,
    /// Fixed weight of the pixel term (default 0.85).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Train one replica per candidate μ and keep the best after each epoch.
    #[arg(long)]
    pub dynamic_mu: bool,
    /// Comma-separated candidates for --dynamic-mu.
    #[arg(long)]
    pub mu_grid: Option<String>,
    #[arg(long, default_value = "soft")]
    pub edge_mode: EdgeLossMode,
    #[arg(long, default_value_t = 1.0)]
    pub edge_scale: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub train_dir: PathBuf,
    #[arg(long)]
    pub val_dir: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch log file.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    /// HR patch edge (default 32, or 33 at scale 3).
    #[arg(long)]
    pub patch: Option<usize>,
    /// Patch stride (default: the patch size).
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, default_value = "none")]
    pub blur: PreBlur,
    /// 8/4 filters instead of 64/32.
    #[arg(long)]
    pub small: bool,
    /// Adam with β1 = 0.9, β2 = 0.999 instead of 0.999 / 0.99.
    #[arg(long)]
    pub adam_conventional: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Allow μ outside [0.8, 0.99].
    #[arg(long)]
    pub unsafe_mu: bool,
}

#[derive(Debug, Args)]
pub struct SrArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model checkpoint; plain bicubic upscaling when omitted.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_scale)]
    pub scale: Scale,
    #[arg(long, default_value = "none")]
    pub blur: PreBlur,
    /// Summary CSV (dataset,scale,method,psnr,ssim).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-image CSV (path,scale,psnr,ssim).
    #[arg(long)]
    pub per_image: Option<PathBuf>,
    /// Append to --report instead of replacing it.
    #[arg(long)]
    pub append: bool,
    /// Dataset label for the report (default: directory name).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct CannyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.4)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub low: f64,
    #[arg(long, default_value_t = 0.2)]
    pub high: f64,
}

const SUBCOMMANDS: [&str; 5] = ["degrade", "train", "sr", "eval", "canny"];

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Flags from a `key=value` file. `true` turns into a bare switch and `false`
/// drops the entry; blank lines and `#` comments are ignored.
pub fn config_flags(path: &Path) -> CliResult<Vec<OsString>> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Usage(format!("{}: config file not found", path.display())),
        _ => CliError::io(path, e),
    })?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
        let key = key.trim().trim_start_matches("--");
        if key == "config" {
            return Err(CliError::Usage(format!("{}:{}: nested config files are not supported", path.display(), n + 1)));
        }
        match value.trim() {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Insert config-file flags right after the subcommand so that flags given on
/// the command line come later and take precedence.
pub fn merge_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let flags = config_flags(&path)?;
    let at = args.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    let Some(at) = at else { return Ok(args) };
    let mut merged = args[..=at].to_vec();
    merged.extend(flags);
    merged.extend_from_slice(&args[at + 1..]);
    Ok(merged)
}

pub fn run(cli: Cli) -> CliResult<()> {
    let threads = cli.threads.max(1);
    match cli.command {
        Command::Degrade(a) => degrade_cmd(a),
        Command::Train(a) => train_cmd(a, threads),
        Command::Sr(a) => sr_cmd(a),
        Command::Eval(a) => eval_cmd(a, threads),
        Command::Canny(a) => canny_cmd(a),
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn degrade_cmd(a: DegradeArgs) -> CliResult<()> {
    let spec = DegradationSpec { scale: a.scale, pre_blur: a.blur };
    let corpus = scan_corpus(&a.input)?;
    ensure_dir(&a.out)?;
    for path in &corpus.paths {
        let img = load_png(path)?;
        let ctx = |e| CliError::core(path.display().to_string(), e);
        let planes = img.channel_planes();
        let mut lr = Vec::with_capacity(3);
        for p in &planes {
            lr.push(degrade(&crop_to_multiple(p, a.scale.get()).map_err(ctx)?, &spec));
        }
        let lr: [_; 3] = lr.try_into().expect("three channels");
        let out = RgbImage::from_channel_planes(&lr).map_err(ctx)?;
        save_png(&out, a.out.join(path.file_name().expect("scanned files have names")))?;
    }
    let manifest = format!(
        "scale={}\nblur={}\nkernel=bicubic-a-0.5\ncrop=top-left\nsource={}\nimages={}\n",
        spec.scale,
        spec.pre_blur,
        a.input.display(),
        corpus.paths.len()
    );
    let mpath = a.out.join("manifest.txt");
    fs::write(&mpath, manifest).map_err(|e| CliError::io(&mpath, e))
}

/// Resolve training flags into options, rejecting inconsistent combinations.
pub fn train_options(a: &TrainArgs, threads: usize) -> CliResult<TrainOptions> {
    let mut loss = LossConfig { edge_mode: a.edge_mode, edge_scale: a.edge_scale, ..LossConfig::default() };
    let dynamic = match a.loss {
        LossKind::Mse => {
            if a.mu.is_some() || a.dynamic_mu {
                return Err(CliError::Usage("--mu and --dynamic-mu need --loss msce".into()));
            }
            loss.mu = 1.0;
            None
        }
        LossKind::Msce if a.dynamic_mu => {
            if a.mu.is_some() {
                return Err(CliError::Usage("--mu and --dynamic-mu are mutually exclusive".into()));
            }
            Some(match &a.mu_grid {
                Some(g) => MuCandidates::parse(g, a.unsafe_mu)?,
                None => MuCandidates::default(),
            })
        }
        LossKind::Msce => {
            if a.mu_grid.is_some() {
                return Err(CliError::Usage("--mu-grid needs --dynamic-mu".into()));
            }
            loss.mu = a.mu.unwrap_or(DEFAULT_MU);
            loss.validate_training(a.unsafe_mu)?;
            None
        }
    };
    loss.validate()?;
    let patch = a.patch.unwrap_or_else(|| default_patch_size(a.scale));
    let stride = a.stride.unwrap_or(patch);
    for (name, v) in [("patch", patch), ("stride", stride)] {
        if v == 0 || v % a.scale.get() != 0 {
            return Err(CliError::Usage(format!("--{name} {v} must be a positive multiple of the scale {}", a.scale)));
        }
    }
    let adam = AdamConfig { lr: a.lr, ..if a.adam_conventional { AdamConfig::conventional() } else { AdamConfig::default() } };
    adam.validate()?;
    for (flag, dir) in [("--train-dir", &a.train_dir), ("--val-dir", &a.val_dir)] {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("{flag} {}: not a directory", dir.display())));
        }
    }
    Ok(TrainOptions {
        arch: a.model,
        scale: a.scale,
        small: a.small,
        loss,
        dynamic,
        epochs: a.epochs,
        seed: a.seed,
        train_dir: a.train_dir.clone(),
        val_dir: a.val_dir.clone(),
        batch: a.batch,
        patch,
        stride,
        blur: a.blur,
        adam,
        threads,
    })
}

fn train_cmd(a: TrainArgs, threads: usize) -> CliResult<()> {
    let opts = train_options(&a, threads)?;
    let mut sink: Box<dyn std::io::Write> = match &a.log {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| CliError::io(p, e))?),
        None => Box::new(std::io::sink()),
    };
    let model = run_training(&opts, &mut sink)?;
    save_checkpoint(&model, &a.out)
}

fn sr_cmd(a: SrArgs) -> CliResult<()> {
    let model = load_checkpoint(&a.ckpt)?;
    let scale = model.scale();
    let img = load_png(&a.input)?;
    let out = super_resolve(&Method::Learned(model), &img, scale)?;
    save_png(&out, &a.out)?;
    Ok(())
}

fn eval_cmd(a: EvalArgs, threads: usize) -> CliResult<()> {
    let method = match &a.ckpt {
        Some(p) => Method::Learned(load_checkpoint(p)?),
        None => Method::Bicubic,
    };
    method.check_scale(a.scale)?;
    let name = a.name.clone().unwrap_or_else(|| {
        a.dataset.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into())
    });
    let spec = DegradationSpec { scale: a.scale, pre_blur: a.blur };
    let result = evaluate_dataset(&method, &a.dataset, &spec, &name, threads)?;
    println!("{}", result.record.csv_row());
    if let Some(p) = &a.report {
        write_summary_csv(p, std::slice::from_ref(&result.record), a.append)?;
    }
    if let Some(p) = &a.per_image {
        write_per_image_csv(p, &result.per_image, a.scale.get())?;
    }
    Ok(())
}

fn canny_cmd(a: CannyArgs) -> CliResult<()> {
    let cfg = CannyConfig { sigma: a.sigma, low_ratio: a.low, high_ratio: a.high };
    cfg.validate()?;
    let y = luma(&load_png(&a.input)?);
    let edges = canny_hard(&y, &cfg).map_err(|e| CliError::core(a.input.display().to_string(), e))?;
    save_gray_png(&edges, &a.out)?;
    Ok(())
}
