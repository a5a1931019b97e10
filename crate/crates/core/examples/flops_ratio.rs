//! Training-cost accounting: per-layer forward FLOPs of a full-size model
//! and the sparse/dense ratio across the sparsity grid.

use stgt::flops::{sparse_ratio, FlopsModel, FlopsReport};
use stgt::model::{Mode, ModelConfig};
use stgt::sparse::{DEFAULT_UPDATE_FREQ, SPARSITY_GRID};

fn main() -> stgt::Result<()> {
    for mode in [Mode::Gcn, Mode::Gat] {
        let cfg = ModelConfig { mode, ..ModelConfig::default() };
        let model = FlopsModel::for_stgt(&cfg, 2471, 2 * 2471, 1.0, DEFAULT_UPDATE_FREQ, 0.9)?;
        let report = FlopsReport::new(&model)?;
        println!("{} at d=0.9, dT={}: f_d {:.3e}, amortised step {:.3e} vs dense {:.3e}{}",
            mode.label(), report.delta_t, report.f_d, report.amortized_sparse, report.dense_step,
            if report.extended_accounting { " (includes attention terms)" } else { "" });
        for l in &report.layers {
            println!("  {:<20} {:.3e}", l.name, l.f_d);
        }
    }
    println!("sparsity  ratio    reduction");
    for d in SPARSITY_GRID {
        let r = sparse_ratio(d, DEFAULT_UPDATE_FREQ)?;
        println!("{d:<9} {r:.5}  {:.2}x", 1.0 / r);
    }
    Ok(())
}
