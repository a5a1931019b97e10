//! A short sparsity sweep: test error and training-FLOPs ratio per level.

use stgt::commands::{run_sweep, sweep_table, PreparedData};
use stgt::config::RunConfig;
use stgt::graph::DEFAULT_OMEGA;
use stgt::synth::{generate, SynthConfig};

fn main() -> stgt::Result<()> {
    let (graph, series) = generate(&SynthConfig { nodes: 10, days: 3, ..SynthConfig::default() }, DEFAULT_OMEGA)?;
    let cfg = RunConfig {
        stride: 4,
        epochs: 15,
        batch_size: 16,
        lr: 1e-2,
        update_freq: 50,
        spatial_dim: 8,
        hidden: 16,
        ..RunConfig::default()
    };
    let data = PreparedData::from_parts(&cfg, &graph, &series)?;
    let results = run_sweep(&cfg, &data, &[0.0, 0.5, 0.9, 0.975], false)?;
    println!("sparsity  MAPE     FLOPs ratio");
    for row in sweep_table(&cfg, &results)?.iter().filter(|r| r.horizon == "all") {
        println!("{:<9} {:6.3}%  {:.5}", row.sparsity, row.mape, row.flops_ratio);
    }
    Ok(())
}
