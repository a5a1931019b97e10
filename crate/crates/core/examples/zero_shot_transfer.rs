//! Train once on the base period, then score the frozen model on two
//! shifted periods without any retraining.

use stgt::commands::{run_training, PreparedData};
use stgt::config::RunConfig;
use stgt::dataset::make_windows;
use stgt::graph::DEFAULT_OMEGA;
use stgt::metrics::evaluate_transfer;
use stgt::synth::{generate, generate_shifted, Shift, SynthConfig};
use stgt::train::NoObserver;

fn main() -> stgt::Result<()> {
    let synth = SynthConfig::default();
    let (graph, series) = generate(&synth, DEFAULT_OMEGA)?;
    let cfg = RunConfig { stride: 2, epochs: 25, batch_size: 16, lr: 1e-2, spatial_dim: 8, hidden: 16, ..RunConfig::default() };
    let data = PreparedData::from_parts(&cfg, &graph, &series)?;
    let trained = run_training(&cfg, &data, &mut NoObserver)?;

    let mc = &trained.checkpoint.model.config;
    let mut periods = vec![("TP0 test".to_string(), data.test.clone())];
    for shift in [Shift::SeasonalAmplitude, Shift::DemandDrop] {
        let shifted = generate_shifted(&synth, shift)?;
        periods.push((shift.tag().to_string(), make_windows(&shifted, mc.history, mc.horizon, 1)?));
    }
    for r in evaluate_transfer(&trained.checkpoint, &periods)? {
        let last = r.per_horizon.last().expect("at least one step");
        println!("{:<20} MAPE {:6.3}%  ({}-minute step: {:.3}%)", r.period, r.mape, last.minutes, last.mape);
    }
    Ok(())
}
