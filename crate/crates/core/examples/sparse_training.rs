//! Dense versus 90%-sparse training of GCN-STGT on synthetic traffic,
//! reporting validation history and test error for each.

use stgt::commands::{run_training, PreparedData};
use stgt::config::RunConfig;
use stgt::graph::DEFAULT_OMEGA;
use stgt::synth::{generate, SynthConfig};
use stgt::train::{NoObserver, Split};

fn main() -> stgt::Result<()> {
    let (graph, series) = generate(&SynthConfig::default(), DEFAULT_OMEGA)?;
    let base = RunConfig {
        stride: 3,
        epochs: 30,
        batch_size: 16,
        lr: 1e-2,
        update_freq: 100,
        spatial_dim: 8,
        hidden: 16,
        seed: 1,
        ..RunConfig::default()
    };
    let data = PreparedData::from_parts(&base, &graph, &series)?;
    for sparsity in [0.0, 0.9] {
        let cfg = RunConfig { sparsity, ..base.clone() };
        let out = run_training(&cfg, &data, &mut NoObserver)?;
        println!("sparsity {sparsity}: {} mask updates", out.history.mask_updates);
        for r in out.history.records.iter().filter(|r| r.split == Split::Val && r.epoch % 10 == 0) {
            println!("  epoch {:>3}  val MAPE {:6.3}%  active weights {}", r.epoch, r.mape, r.active_weights);
        }
        println!("  test MAE {:.3}  RMSE {:.3}  MAPE {:.3}%", out.test_report.mae, out.test_report.rmse, out.test_report.mape);
    }
    Ok(())
}
