//! From a raw speed table to normalised training windows: cleaning, sliding
//! windows, the chronological split and per-station scaling.

use stgt::dataset::{clean_series, make_windows, split, Normalizer};
use stgt::graph::DEFAULT_OMEGA;
use stgt::synth::{generate, SynthConfig};

fn main() -> stgt::Result<()> {
    let (graph, mut series) = generate(&SynthConfig { nodes: 8, days: 3, ..SynthConfig::default() }, DEFAULT_OMEGA)?;
    // knock out one station for a morning to show the cleaning rules
    for r in 400..460 {
        series.values.set(r, 3, f64::NAN);
    }
    let clean = clean_series(&series, 0.5)?;
    println!(
        "raw {} rows x {} stations ({} missing) -> clean {} rows x {} stations",
        series.len(),
        series.num_nodes(),
        series.missing_count(),
        clean.len(),
        clean.num_nodes()
    );
    let graph = graph.restrict(&clean.node_ids)?;

    let windows = make_windows(&clean, 12, 9, 1)?;
    println!("windows: inputs {:?}, targets {:?}", windows.inputs.shape(), windows.targets.shape());
    let (train, val, test) = split(&windows, (0.7, 0.1, 0.2))?;
    println!("split: train {} / val {} / test {}", train.len(), val.len(), test.len());
    println!("first test window ends at {}", test.anchor_times[0]);

    let norm = Normalizer::fit(&train);
    let z = norm.normalize(&train);
    let first = z.input(0);
    println!("station {} mean {:.2} std {:.2}; normalised first window row: {:?}",
        graph.node_ids()[0], norm.mean[0], norm.std[0],
        first.row(0).iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>());
    Ok(())
}
