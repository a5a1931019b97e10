//! Erdős–Rényi-Kernel allocation for the forecaster's weight matrices:
//! small layers stay denser while the global sparsity hits its target.

use stgt::graph::DEFAULT_OMEGA;
use stgt::model::{ModelConfig, StgtModel};
use stgt::sparse::{erk_active_counts, SparseState};
use stgt::synth::SynthConfig;

fn main() -> stgt::Result<()> {
    let graph = SynthConfig::default().graph(DEFAULT_OMEGA)?;
    let cfg = ModelConfig { spatial_dim: 16, hidden: 32, ..ModelConfig::default() };
    for d in [0.5, 0.9, 0.975] {
        let mut model = StgtModel::new(cfg.clone(), &graph, 0)?;
        let state = SparseState::init(&mut model, d, 0.5, 1000, 0)?;
        let specs = model.param_specs();
        let shapes: Vec<(usize, usize)> =
            state.param_indices.iter().map(|&p| (specs[p].shape[0], specs[p].shape[1])).collect();
        let counts = erk_active_counts(&shapes, d)?;
        println!("d = {d}: achieved {:.4} over {} weights", state.actual_sparsity(), state.total_weights());
        for ((&p, mask), want) in state.param_indices.iter().zip(&state.masks).zip(counts) {
            let dens = mask.count_nonzero() as f64 / mask.len() as f64;
            println!("  {:<15} {:<10} density {dens:.3} ({want} active)", specs[p].name, format!("{:?}", specs[p].shape));
        }
    }
    Ok(())
}
