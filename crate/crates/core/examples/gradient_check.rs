//! Central-difference check of the analytic backward pass of both model
//! variants, parameter by parameter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stgt::gradcheck::{numerical_param_gradients, relative_error, STEP, TOLERANCE};
use stgt::graph::DEFAULT_OMEGA;
use stgt::model::{mse_loss, Mode, ModelConfig, StgtModel};
use stgt::synth::{SynthConfig, Topology};
use stgt::Tensor;

fn main() -> stgt::Result<()> {
    let graph = SynthConfig { nodes: 5, topology: Topology::Ring, ..SynthConfig::default() }.graph(DEFAULT_OMEGA)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut random = |shape: [usize; 2]| {
        Tensor::new(shape.to_vec(), (0..shape[0] * shape[1]).map(|_| rng.gen_range(-1.0..1.0)).collect())
    };
    let x = random([5, 6])?;
    let t = random([5, 3])?;
    for mode in [Mode::Gcn, Mode::Gat] {
        let cfg = ModelConfig { mode, history: 6, horizon: 3, spatial_dim: 4, hidden: 5, heads: 2, ..ModelConfig::default() };
        let model = StgtModel::new(cfg, &graph, 42)?;
        let (loss, grads, _) = model.loss_and_grads(&x, &t)?;
        let numeric = numerical_param_gradients(&model, |m| m.params_mut(), |m| mse_loss(&m.predict(&x).unwrap(), &t).unwrap(), STEP);
        println!("{} loss {loss:.6}", mode.label());
        for ((a, n), spec) in grads.iter().zip(&numeric).zip(model.param_specs()) {
            let e = relative_error(a, n);
            println!("  {:<18} {:<9}  rel err {e:.2e} {}", spec.name, format!("{:?}", spec.shape), if e < TOLERANCE { "ok" } else { "MISMATCH" });
        }
    }
    Ok(())
}
