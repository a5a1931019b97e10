//! Writes a synthetic dataset triplet plus its two shifted periods.
//!
//! ```text
//! cargo run --example synth_dataset -- /tmp/traffic
//! ```

use std::path::PathBuf;

use stgt::commands::cmd_synth;
use stgt::synth::{Shift, SynthConfig, Topology};

fn main() -> stgt::Result<()> {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("stgt-synth"));
    let config = SynthConfig { nodes: 16, topology: Topology::Grid, days: 3, ..SynthConfig::default() };
    for (tag, shift) in [("tp0", Shift::None), ("tp1", Shift::SeasonalAmplitude), ("tp2", Shift::DemandDrop)] {
        let series = cmd_synth(&config, shift, &root.join(tag))?;
        let v = series.values.data();
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        println!("{tag} ({:>18}): {} steps x {} stations, mean {mean:.1} mph, min {min:.1} mph", shift.tag(), series.len(), series.num_nodes());
    }
    println!("written under {}", root.display());
    Ok(())
}
