//! Epoch-level training: fixed-μ epochs, validation, and per-epoch μ selection
//! across parallel replicas.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::data::Batch;
use crate::loss::{msce_breakdown, msce_loss, select_mu, LossBreakdown, LossConfig};
use crate::nn::Model;
use crate::optim::Adam;
use crate::{Error, Result};

/// Shuffle seed for `epoch` (1-based) of a run seeded with `seed`.
pub fn epoch_seed(seed: u64, epoch: u64) -> u64 {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15)).next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochStats {
    /// Sample-weighted mean of the per-batch combined loss.
    pub train_loss: f64,
    pub batches: usize,
    /// Largest single-coordinate parameter update seen.
    pub max_update: f64,
}

/// One pass over `batches` with Adam updates after every batch.
pub fn train_epoch(model: &mut Model, optim: &mut Adam, batches: &[Batch], cfg: &LossConfig) -> Result<EpochStats> {
    let mut weighted = 0.0;
    let mut samples = 0usize;
    let mut max_update = 0.0f64;
    for (i, batch) in batches.iter().enumerate() {
        let (out, tapes) = model.forward_batch(&batch.inputs)?;
        let (loss, grad) = msce_loss(&out, &batch.targets, cfg)?;
        if !loss.is_valid() {
            return Err(Error::Divergence(format!(
                "batch {i}: l_mse={} l_edge={} combined={}",
                loss.l_mse, loss.l_edge, loss.combined
            )));
        }
        let grads = model.backward_batch(&tapes, &grad)?;
        if !grads.all_finite() {
            return Err(Error::Divergence(format!("batch {i}: non-finite gradient")));
        }
        max_update = max_update.max(optim.step(model, &grads)?);
        weighted += loss.combined * batch.len() as f64;
        samples += batch.len();
    }
    Ok(EpochStats { train_loss: if samples == 0 { 0.0 } else { weighted / samples as f64 }, batches: batches.len(), max_update })
}

/// Pixel-weighted loss terms over all validation batches, reported with `cfg.mu`.
pub fn validate(model: &Model, batches: &[Batch], cfg: &LossConfig) -> Result<LossBreakdown> {
    let (mut mse, mut edge, mut pixels) = (0.0, 0.0, 0usize);
    for batch in batches {
        let (out, _) = model.forward_batch(&batch.inputs)?;
        let b = msce_breakdown(&out, &batch.targets, cfg)?;
        let n = batch.targets.len();
        mse += b.l_mse * n as f64;
        edge += b.l_edge * n as f64;
        pixels += n;
    }
    if pixels == 0 {
        return Err(Error::InvalidConfig(String::from("validation set produced no patches")));
    }
    Ok(LossBreakdown::new(cfg.mu, mse / pixels as f64, edge / pixels as f64))
}

/// A model and its optimizer, trained with one μ.
#[derive(Debug, Clone)]
pub struct Replica {
    pub mu: f64,
    pub model: Model,
    pub optim: Adam,
}

/// Outcome of one replica's epoch.
#[derive(Debug, Clone)]
pub struct CandidateOutcome {
    pub mu: f64,
    pub result: core::result::Result<(EpochStats, LossBreakdown), String>,
}

impl CandidateOutcome {
    pub fn breakdown(&self) -> Option<&LossBreakdown> {
        self.result.as_ref().ok().map(|(_, b)| b)
    }
}

/// Train one epoch with the replica's own μ and score it on validation.
pub fn run_replica(replica: &mut Replica, train: &[Batch], val: &[Batch], base: &LossConfig) -> CandidateOutcome {
    let cfg = LossConfig { mu: replica.mu, ..*base };
    let result = train_epoch(&mut replica.model, &mut replica.optim, train, &cfg)
        .and_then(|stats| Ok((stats, validate(&replica.model, val, &cfg)?)))
        .and_then(|(stats, b)| {
            if b.is_valid() {
                Ok((stats, b))
            } else {
                Err(Error::Divergence(format!("validation loss not finite: {b:?}")))
            }
        })
        .map_err(|e| format!("{e}"));
    CandidateOutcome { mu: replica.mu, result }
}

#[derive(Debug, Clone)]
pub struct SelectionRecord {
    pub outcomes: Vec<CandidateOutcome>,
    pub chosen: usize,
}

impl SelectionRecord {
    pub fn chosen_mu(&self) -> f64 {
        self.outcomes[self.chosen].mu
    }
}

/// Pick the survivor among finished replicas and copy its model and optimizer
/// state into every replica. Failed replicas are disqualified.
pub fn select_survivor(replicas: &mut [Replica], outcomes: Vec<CandidateOutcome>) -> Result<SelectionRecord> {
    if replicas.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let scored: Vec<(f64, LossBreakdown)> = outcomes
        .iter()
        .map(|o| (o.mu, o.breakdown().copied().unwrap_or(LossBreakdown { l_mse: f64::NAN, l_edge: f64::NAN, combined: f64::NAN })))
        .collect();
    let chosen = select_mu(&scored).map_err(|e| match e {
        Error::Divergence(_) => Error::Divergence(format!(
            "every candidate failed: {}",
            outcomes
                .iter()
                .map(|o| format!("mu={} ({})", o.mu, o.result.as_ref().err().map(String::as_str).unwrap_or("non-finite")))
                .collect::<Vec<_>>()
                .join("; ")
        )),
        other => other,
    })?;
    let (model, optim) = (replicas[chosen].model.clone(), replicas[chosen].optim.clone());
    for (i, r) in replicas.iter_mut().enumerate() {
        if i != chosen {
            r.model = model.clone();
            r.optim = optim.clone();
        }
    }
    Ok(SelectionRecord { outcomes, chosen })
}

/// Sequential dynamic-μ epoch: train every replica, then keep the best.
pub fn dynamic_mu_epoch(replicas: &mut [Replica], train: &[Batch], val: &[Batch], base: &LossConfig) -> Result<SelectionRecord> {
    let outcomes = replicas.iter_mut().map(|r| run_replica(r, train, val, base)).collect();
    select_survivor(replicas, outcomes)
}
