//! Mini-batch training, dense or with dynamic sparse masks.
//!
//! Every iteration computes full (unmasked) gradients for the batch. In
//! sparse mode the momentum-SGD update only touches active positions, and
//! every `update_freq` iterations the same dense gradients drive a
//! drop-and-grow mask update.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Normalizer, WindowedBatch};
use crate::error::{Error, Result};
use crate::metrics::{self, DEFAULT_MAPE_EPS};
use crate::model::StgtModel;
use crate::sparse::{drop_and_grow, LayerUpdate, SparseState};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Rescale the batch gradient when its global L2 norm exceeds this.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 242,
            lr: 1e-3,
            momentum: 0.9,
            seed: 0,
            clip_norm: None,
        }
    }
}

/// Raw (un-normalised) training and validation windows plus the scaling
/// fitted on the training split.
pub struct TrainData {
    pub train: WindowedBatch,
    pub val: WindowedBatch,
    pub normalizer: Normalizer,
    pub step_minutes: i64,
}

impl TrainData {
    pub fn new(train: WindowedBatch, val: WindowedBatch, step_minutes: i64) -> Self {
        let normalizer = Normalizer::fit(&train);
        Self {
            train,
            val,
            normalizer,
            step_minutes,
        }
    }
}

/// Momentum SGD. A mask, when given, confines both the velocity and the
/// weights to active positions.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub lr: f64,
    pub momentum: f64,
    velocity: Vec<Tensor>,
}

impl Sgd {
    pub fn new(model: &StgtModel, lr: f64, momentum: f64) -> Self {
        Self {
            lr,
            momentum,
            velocity: model.params().iter().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut Tensor>, grads: &[Tensor], masks: &[Option<&Tensor>]) {
        for (((w, g), v), mask) in params.into_iter().zip(grads).zip(&mut self.velocity).zip(masks) {
            let (w, g, v) = (w.data_mut(), g.data(), v.data_mut());
            match mask {
                None => {
                    for k in 0..w.len() {
                        v[k] = self.momentum * v[k] + g[k];
                        w[k] -= self.lr * v[k];
                    }
                }
                Some(m) => {
                    let m = m.data();
                    for k in 0..w.len() {
                        if m[k] == 0.0 {
                            v[k] = 0.0;
                            w[k] = 0.0;
                        } else {
                            v[k] = self.momentum * v[k] + g[k];
                            w[k] -= self.lr * v[k];
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub split: Split,
    pub loss: f64,
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub sparsity: f64,
    pub active_weights: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<EpochRecord>,
    /// Mean batch loss of every optimizer step, in order.
    pub iteration_losses: Vec<f64>,
    pub mask_updates: usize,
}

impl History {
    pub fn last(&self, split: Split) -> Option<&EpochRecord> {
        self.records.iter().rev().find(|r| r.split == split)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// One drop-and-grow event as seen by an observer.
pub struct MaskUpdateEvent<'a> {
    pub iteration: usize,
    /// Sparsified weights right before the update (after the SGD step).
    pub weights_before: &'a [Tensor],
    pub masks_before: &'a [Tensor],
    /// Dense gradients of the sparsified weights.
    pub grads: &'a [Tensor],
    pub state_after: &'a SparseState,
    pub updates: &'a [LayerUpdate],
}

/// Hooks for inspecting a run. All methods default to no-ops.
pub trait TrainObserver {
    fn after_step(&mut self, _iteration: usize, _model: &StgtModel, _state: Option<&SparseState>) {}

    fn on_mask_update(&mut self, _event: &MaskUpdateEvent<'_>, _model: &StgtModel) {}
}

pub struct NoObserver;

impl TrainObserver for NoObserver {}

pub struct StepOutcome {
    pub loss: f64,
    /// Batch-mean gradients before masking, in parameter order.
    pub dense_grads: Vec<Tensor>,
    /// Normalised predictions, one `[nodes × horizon]` block per window.
    pub predictions: Vec<Tensor>,
}

/// Gradients for a set of windows, reduced in window order.
pub fn batch_gradients(model: &StgtModel, data: &WindowedBatch, indices: &[usize]) -> Result<StepOutcome> {
    let per_window: Vec<(f64, Vec<Tensor>, Tensor)> = indices
        .par_iter()
        .map(|&s| model.loss_and_grads(&data.input(s), &data.target(s)))
        .collect::<Result<_>>()?;
    let scale = 1.0 / indices.len() as f64;
    let mut loss = 0.0;
    let mut grads: Vec<Tensor> = model.params().iter().map(|p| Tensor::zeros(p.shape())).collect();
    let mut predictions = Vec::with_capacity(indices.len());
    for (l, g, p) in per_window {
        loss += l;
        for (acc, gi) in grads.iter_mut().zip(&g) {
            acc.add_assign(gi)?;
        }
        predictions.push(p);
    }
    grads.iter_mut().for_each(|g| g.scale(scale));
    Ok(StepOutcome {
        loss: loss * scale,
        dense_grads: grads,
        predictions,
    })
}

fn clip(grads: &mut [Tensor], max_norm: f64) {
    let norm = grads
        .iter()
        .flat_map(|g| g.data())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| g.scale(s));
    }
}

/// One optimizer step over `indices` of the normalised batch. Masked
/// positions stay exactly zero.
pub fn masked_step(
    model: &mut StgtModel,
    state: Option<&SparseState>,
    opt: &mut Sgd,
    data: &WindowedBatch,
    indices: &[usize],
    clip_norm: Option<f64>,
) -> Result<StepOutcome> {
    let mut outcome = batch_gradients(model, data, indices)?;
    let mut step_grads = outcome.dense_grads.clone();
    if let Some(max) = clip_norm {
        clip(&mut step_grads, max);
    }
    let n = step_grads.len();
    let masks: Vec<Option<&Tensor>> = (0..n)
        .map(|p| state.and_then(|s| s.mask_for_param(p)))
        .collect();
    opt.step(model.params_mut(), &step_grads, &masks);
    if clip_norm.is_some() {
        outcome.dense_grads = step_grads;
    }
    Ok(outcome)
}

fn mask_stats(model: &StgtModel, state: Option<&SparseState>) -> (f64, usize) {
    match state {
        Some(s) => (s.actual_sparsity(), s.active_weights()),
        None => {
            let active = model
                .param_specs()
                .iter()
                .zip(model.params())
                .filter(|(s, _)| s.sparsifiable)
                .map(|(_, p)| p.len())
                .sum();
            (0.0, active)
        }
    }
}

/// Trains for `cfg.epochs` epochs. With a sparse state, drop-and-grow runs
/// whenever the iteration counter hits a multiple of its update frequency.
pub fn train(
    model: &mut StgtModel,
    mut state: Option<&mut SparseState>,
    data: &TrainData,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<History> {
    if cfg.batch_size == 0 {
        return Err(Error::config("batch size must be >= 1"));
    }
    let mut history = History::default();
    if cfg.epochs == 0 {
        return Ok(history);
    }
    let train_norm = data.normalizer.normalize(&data.train);
    let mut opt = Sgd::new(model, cfg.lr, cfg.momentum);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_norm.len()).collect();
    let mode = model.mode().as_str();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut pred_raw = Vec::with_capacity(data.train.targets.len());
        let mut truth_raw = Vec::with_capacity(data.train.targets.len());
        let mut steps = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let outcome = masked_step(model, state.as_deref(), &mut opt, &train_norm, chunk, cfg.clip_norm)?;
            loss_sum += outcome.loss;
            steps += 1;
            history.iteration_losses.push(outcome.loss);
            for (&s, p) in chunk.iter().zip(&outcome.predictions) {
                pred_raw.extend_from_slice(data.normalizer.denormalize(p).data());
                truth_raw.extend_from_slice(data.train.target(s).data());
            }

            if let Some(st) = state.as_deref_mut() {
                st.iteration += 1;
                if st.is_update_step() {
                    let sparse_idx = st.param_indices.clone();
                    let params = model.params();
                    let weights_before: Vec<Tensor> = sparse_idx.iter().map(|&p| params[p].clone()).collect();
                    let grads: Vec<Tensor> = sparse_idx.iter().map(|&p| outcome.dense_grads[p].clone()).collect();
                    let masks_before = st.masks.clone();
                    let updates = drop_and_grow(model, st, &outcome.dense_grads)?;
                    history.mask_updates += 1;
                    observer.on_mask_update(
                        &MaskUpdateEvent {
                            iteration: st.iteration,
                            weights_before: &weights_before,
                            masks_before: &masks_before,
                            grads: &grads,
                            state_after: st,
                            updates: &updates,
                        },
                        model,
                    );
                }
            }
            let iteration = history.iteration_losses.len();
            observer.after_step(iteration, model, state.as_deref());
        }

        let (sparsity, active_weights) = mask_stats(model, state.as_deref());
        history.records.push(EpochRecord {
            epoch,
            split: Split::Train,
            loss: loss_sum / steps as f64,
            mae: metrics::mae(&pred_raw, &truth_raw)?,
            rmse: metrics::rmse(&pred_raw, &truth_raw)?,
            mape: metrics::mape(&pred_raw, &truth_raw, DEFAULT_MAPE_EPS)?,
            sparsity,
            active_weights,
        });
        let val = metrics::evaluate(model, &data.normalizer, &data.val, "val", data.step_minutes)?;
        history.records.push(EpochRecord {
            epoch,
            split: Split::Val,
            loss: val.loss,
            mae: val.mae,
            rmse: val.rmse,
            mape: val.mape,
            sparsity,
            active_weights,
        });
        log::debug!(
            "{mode} epoch {epoch}: train loss {:.5}, val mape {:.3}%",
            loss_sum / steps as f64,
            val.mape
        );
    }
    Ok(history)
}
