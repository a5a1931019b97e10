//! Dynamic sparse training state: ERK-initialised binary masks that are
//! periodically updated by dropping the smallest-magnitude active weights
//! and regrowing the same number of inactive positions with the largest
//! dense gradient.

mod erk;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use erk::{erk_active_counts, erk_densities};

use crate::error::{Error, Result};
use crate::model::StgtModel;
use crate::tensor::{masked_apply, Tensor};

pub const DEFAULT_DROP_RATE: f64 = 0.5;
pub const DEFAULT_UPDATE_FREQ: usize = 1000;

/// The sparsity levels swept in the reference experiments.
pub const SPARSITY_GRID: [f64; 13] = [
    0.025, 0.05, 0.1, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 0.9, 0.95, 0.975,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseState {
    /// One binary mask per sparsified weight matrix.
    pub masks: Vec<Tensor>,
    /// Index into the model's parameter list for each mask.
    pub param_indices: Vec<usize>,
    pub sparsity: f64,
    pub drop_rate: f64,
    pub update_freq: usize,
    /// Optimizer steps taken so far.
    pub iteration: usize,
    /// Active-weight count of each mask, fixed at initialisation.
    pub active_counts: Vec<usize>,
}

/// Positions (flat row-major indices) changed in one layer by a mask update.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LayerUpdate {
    pub dropped: Vec<usize>,
    pub grown: Vec<usize>,
}

/// Random ERK masks for matrices of the given shapes.
pub fn erk_init(shapes: &[Vec<usize>], sparsity: f64, seed: u64) -> Result<Vec<Tensor>> {
    let dims: Vec<(usize, usize)> = shapes
        .iter()
        .map(|s| match s.as_slice() {
            [r, c] => Ok((*r, *c)),
            other => Err(Error::dim(format!("sparsified layers must be matrices, got {other:?}"))),
        })
        .collect::<Result<_>>()?;
    let counts = erk_active_counts(&dims, sparsity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(dims
        .iter()
        .zip(counts)
        .map(|(&(r, c), active)| {
            let mut mask = Tensor::zeros(&[r, c]);
            for idx in rand::seq::index::sample(&mut rng, r * c, active) {
                mask.data_mut()[idx] = 1.0;
            }
            mask
        })
        .collect())
}

impl SparseState {
    /// ERK masks over every sparsifiable weight of `model`; the masked
    /// positions of the model's weights are zeroed.
    pub fn init(
        model: &mut StgtModel,
        sparsity: f64,
        drop_rate: f64,
        update_freq: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(drop_rate > 0.0 && drop_rate < 1.0) {
            return Err(Error::invalid(format!("drop rate {drop_rate} must be in (0, 1)")));
        }
        if update_freq == 0 {
            return Err(Error::invalid("drop-and-grow frequency must be >= 1"));
        }
        let (param_indices, shapes): (Vec<usize>, Vec<Vec<usize>>) = model
            .param_specs()
            .into_iter()
            .enumerate()
            .filter(|(_, s)| s.sparsifiable)
            .map(|(i, s)| (i, s.shape))
            .unzip();
        let masks = erk_init(&shapes, sparsity, seed)?;
        let active_counts = masks.iter().map(Tensor::count_nonzero).collect();
        let state = Self {
            masks,
            param_indices,
            sparsity,
            drop_rate,
            update_freq,
            iteration: 0,
            active_counts,
        };
        state.apply(model)?;
        Ok(state)
    }

    /// Zeroes every masked-out weight of the model.
    pub fn apply(&self, model: &mut StgtModel) -> Result<()> {
        let mut params = model.params_mut();
        for (mask, &p) in self.masks.iter().zip(&self.param_indices) {
            *params[p] = masked_apply(params[p], mask)?;
        }
        Ok(())
    }

    /// Mask for parameter `p` of the model, if it is sparsified.
    pub fn mask_for_param(&self, p: usize) -> Option<&Tensor> {
        self.param_indices
            .iter()
            .position(|&i| i == p)
            .map(|k| &self.masks[k])
    }

    pub fn total_weights(&self) -> usize {
        self.masks.iter().map(Tensor::len).sum()
    }

    pub fn active_weights(&self) -> usize {
        self.masks.iter().map(Tensor::count_nonzero).sum()
    }

    /// Measured fraction of masked-out weights.
    pub fn actual_sparsity(&self) -> f64 {
        1.0 - self.active_weights() as f64 / self.total_weights() as f64
    }

    pub fn is_update_step(&self) -> bool {
        self.iteration > 0 && self.iteration % self.update_freq == 0
    }
}

/// Drop-and-grow on one weight matrix.
///
/// `n = round(drop_rate · active)` active weights with the smallest `|w|` are
/// deactivated, then the `n` positions that were inactive beforehand with
/// the largest `|grad|` are activated at value 0. Ties go to the lower flat
/// index. If fewer than `n` inactive positions exist, `n` is reduced so the
/// active count is preserved.
pub fn drop_and_grow_layer(
    weights: &mut Tensor,
    mask: &mut Tensor,
    dense_grad: &Tensor,
    drop_rate: f64,
) -> Result<LayerUpdate> {
    weights.expect_same_shape(mask)?;
    weights.expect_same_shape(dense_grad)?;
    let (mut active, mut inactive): (Vec<usize>, Vec<usize>) =
        (0..mask.len()).partition(|&i| mask.data()[i] != 0.0);
    let wanted = (drop_rate * active.len() as f64).round() as usize;
    let n = wanted.min(inactive.len());
    if n < wanted {
        log::debug!(
            "only {} inactive positions available, moving {n} of {wanted} weights",
            inactive.len()
        );
    }
    if n == 0 {
        return Ok(LayerUpdate::default());
    }
    let w = weights.data();
    active.sort_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()).then(a.cmp(&b)));
    let g = dense_grad.data();
    inactive.sort_by(|&a, &b| g[b].abs().total_cmp(&g[a].abs()).then(a.cmp(&b)));

    let mut dropped = active[..n].to_vec();
    let mut grown = inactive[..n].to_vec();
    dropped.sort_unstable();
    grown.sort_unstable();
    for &i in &dropped {
        mask.data_mut()[i] = 0.0;
        weights.data_mut()[i] = 0.0;
    }
    for &i in &grown {
        mask.data_mut()[i] = 1.0;
        weights.data_mut()[i] = 0.0;
    }
    Ok(LayerUpdate { dropped, grown })
}

/// Mask update over every sparsified layer. `dense_grads` are the unmasked
/// gradients for all model parameters, in parameter order.
pub fn drop_and_grow(
    model: &mut StgtModel,
    state: &mut SparseState,
    dense_grads: &[Tensor],
) -> Result<Vec<LayerUpdate>> {
    let mut params = model.params_mut();
    if dense_grads.len() != params.len() {
        return Err(Error::dim(format!(
            "{} gradients for {} parameters",
            dense_grads.len(),
            params.len()
        )));
    }
    let mut updates = Vec::with_capacity(state.masks.len());
    for (mask, &p) in state.masks.iter_mut().zip(&state.param_indices) {
        updates.push(drop_and_grow_layer(params[p], mask, &dense_grads[p], state.drop_rate)?);
    }
    drop(params);
    state.apply(model)?;
    Ok(updates)
}
