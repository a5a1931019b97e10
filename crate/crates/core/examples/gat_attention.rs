//! Multi-head graph attention on a five-station ring: coefficients per head
//! and the effect of making one neighbour's reading stand out.

use stgt::graph::DEFAULT_OMEGA;
use stgt::model::{GatLayer, Mode, ModelConfig, Spatial, StgtModel};
use stgt::synth::{SynthConfig, Topology};
use stgt::Tensor;

fn main() -> stgt::Result<()> {
    let graph = SynthConfig { nodes: 5, topology: Topology::Ring, ..SynthConfig::default() }.graph(DEFAULT_OMEGA)?;
    let cfg = ModelConfig { mode: Mode::Gat, spatial_dim: 6, heads: 3, ..ModelConfig::default() };
    let model = StgtModel::new(cfg, &graph, 9)?;
    let Spatial::Gat(layer) = &model.spatial else { unreachable!() };

    let calm = Tensor::new(vec![5, 1], vec![0.1, 0.1, 0.1, 0.1, 0.1])?;
    let jam = Tensor::new(vec![5, 1], vec![0.1, -2.0, 0.1, 0.1, 0.1])?;
    report(layer, "identical readings", &calm)?;
    report(layer, "station 1 congested", &jam)?;
    Ok(())
}

fn report(layer: &GatLayer, title: &str, x: &Tensor) -> stgt::Result<()> {
    println!("{title}: attention of station 0 over its neighbourhood {:?}", layer.neighborhoods[0]);
    for (h, head) in layer.attention_coefficients(x)?.iter().enumerate() {
        let row: Vec<String> = head[0].iter().map(|a| format!("{a:.3}")).collect();
        println!("  head {h}: [{}]", row.join(", "));
    }
    Ok(())
}
