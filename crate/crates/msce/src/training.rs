//! Training runs over PNG corpora: fixed μ or per-epoch μ selection.

use std::io::Write;
use std::path::PathBuf;

use msce_core::data::{extract_patches, make_batches, Batch, PatchPair};
use msce_core::loss::{LossConfig, MuCandidates};
use msce_core::nn::{Architecture, Model, ModelSpec};
use msce_core::optim::{Adam, AdamConfig};
use msce_core::resample::{synthesize_pair, DegradationSpec, PreBlur, Scale};
use msce_core::train::{epoch_seed, select_survivor, train_epoch, validate, run_replica, Replica};
use msce_core::Error;

use crate::corpus::load_luma_corpus;
use crate::error::{CliError, CliResult};
use crate::parallel::ordered_map_mut;

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub arch: Architecture,
    pub scale: Scale,
    pub small: bool,
    pub loss: LossConfig,
    /// `Some` switches to per-epoch μ selection over these candidates.
    pub dynamic: Option<MuCandidates>,
    pub epochs: usize,
    pub seed: u64,
    pub train_dir: PathBuf,
    pub val_dir: PathBuf,
    pub batch: usize,
    pub patch: usize,
    pub stride: usize,
    pub blur: PreBlur,
    pub adam: AdamConfig,
    pub threads: usize,
}

fn load_patches(dir: &PathBuf, spec: &DegradationSpec, patch: usize, stride: usize) -> CliResult<(usize, Vec<PatchPair>)> {
    let images = load_luma_corpus(dir)?;
    let mut patches = Vec::new();
    for (path, hr) in &images {
        let ctx = |e| CliError::core(path.display().to_string(), e);
        let mut pair = synthesize_pair(hr, spec).map_err(ctx)?;
        pair.source = path.display().to_string();
        patches.extend(extract_patches(&pair, patch, stride).map_err(ctx)?);
    }
    if patches.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no image is large enough for {patch}x{patch} patches",
            dir.display()
        )));
    }
    Ok((images.len(), patches))
}

fn divergence(epoch: usize, e: Error) -> CliError {
    match e {
        Error::Divergence(m) => CliError::Runtime(format!("training diverged in epoch {epoch}: {m}")),
        other => CliError::core(format!("epoch {epoch}"), other),
    }
}

fn val_psnr(l_mse: f64) -> f64 {
    10.0 * (1.0 / l_mse).log10()
}

/// Run the configured training and return the final model. One log line per
/// event is written to `log` (and mirrored to the `log` crate at info level).
pub fn run_training(opts: &TrainOptions, log: &mut dyn Write) -> CliResult<Model> {
    let mut emit = |line: String| -> CliResult<()> {
        log::info!("{line}");
        writeln!(log, "{line}").map_err(|e| CliError::io("<training log>", e))
    };
    if opts.epochs == 0 || opts.batch == 0 {
        return Err(CliError::Usage("epochs and batch size must be at least 1".into()));
    }
    opts.adam.validate()?;
    opts.loss.validate()?;
    let spec = DegradationSpec { scale: opts.scale, pre_blur: opts.blur };
    let (n_train, train) = load_patches(&opts.train_dir, &spec, opts.patch, opts.stride)?;
    let (_, val_patches) = load_patches(&opts.val_dir, &spec, opts.patch, opts.stride)?;
    let val = make_batches(&val_patches, opts.batch, 0, opts.arch);

    let model_spec = if opts.small { ModelSpec::small(opts.arch, opts.scale) } else { ModelSpec::full(opts.arch, opts.scale) };
    let model = Model::new(&model_spec, opts.seed);
    let optim = Adam::new(opts.adam, &model);
    emit(format!(
        "run model={} scale={} filters={},{} params={} edge_mode={} edge_scale={} blur={} epochs={} seed={} batch={} patch={} stride={} beta1={} beta2={} lr={} train_images={} train_patches={} val_patches={}",
        opts.arch,
        opts.scale,
        model_spec.filters.0,
        model_spec.filters.1,
        model.parameter_count(),
        opts.loss.edge_mode,
        opts.loss.edge_scale,
        opts.blur,
        opts.epochs,
        opts.seed,
        opts.batch,
        opts.patch,
        opts.stride,
        opts.adam.beta1,
        opts.adam.beta2,
        opts.adam.lr,
        n_train,
        train.len(),
        val_patches.len()
    ))?;

    let batches_for = |epoch: usize| -> Vec<Batch> { make_batches(&train, opts.batch, epoch_seed(opts.seed, epoch as u64), opts.arch) };

    match &opts.dynamic {
        None => {
            let (mut model, mut optim) = (model, optim);
            for epoch in 1..=opts.epochs {
                let batches = batches_for(epoch);
                let stats = train_epoch(&mut model, &mut optim, &batches, &opts.loss).map_err(|e| divergence(epoch, e))?;
                let v = validate(&model, &val, &opts.loss).map_err(|e| divergence(epoch, e))?;
                if !v.is_valid() {
                    return Err(CliError::Runtime(format!("training diverged in epoch {epoch}: validation loss {v:?}")));
                }
                emit(format!(
                    "epoch={epoch} mu={} train_loss={} l_mse={} l_edge={} combined={} val_psnr={}",
                    opts.loss.mu,
                    stats.train_loss,
                    v.l_mse,
                    v.l_edge,
                    v.combined,
                    val_psnr(v.l_mse)
                ))?;
            }
            Ok(model)
        }
        Some(grid) => {
            let mut replicas: Vec<Replica> =
                grid.values().iter().map(|&mu| Replica { mu, model: model.clone(), optim: optim.clone() }).collect();
            for epoch in 1..=opts.epochs {
                let batches = batches_for(epoch);
                emit(format!("epoch={epoch} candidates={grid}"))?;
                let outcomes = ordered_map_mut(&mut replicas, opts.threads, |r| run_replica(r, &batches, &val, &opts.loss));
                for o in &outcomes {
                    match &o.result {
                        Ok((_, b)) => emit(format!(
                            "epoch={epoch} candidate_mu={} l_mse={} l_edge={} combined={}",
                            o.mu, b.l_mse, b.l_edge, b.combined
                        ))?,
                        Err(reason) => emit(format!("epoch={epoch} candidate_mu={} status=diverged reason=\"{reason}\"", o.mu))?,
                    }
                }
                let record = select_survivor(&mut replicas, outcomes).map_err(|e| divergence(epoch, e))?;
                let (stats, b) = record.outcomes[record.chosen].result.clone().expect("survivor finished");
                emit(format!(
                    "epoch={epoch} chosen_mu={} train_loss={} l_mse={} l_edge={} combined={} val_psnr={}",
                    record.chosen_mu(),
                    stats.train_loss,
                    b.l_mse,
                    b.l_edge,
                    b.combined,
                    val_psnr(b.l_mse)
                ))?;
            }
            Ok(replicas.swap_remove(0).model)
        }
    }
}
