//! Seeded synthetic traffic: a small road graph with 1 km segments and speed
//! series in which twice-daily congestion waves travel outward from a source
//! station, arriving `wave_lag` steps later at every further hop.
//!
//! Each day's rush-hour onsets and depths are drawn at random, so a station
//! can anticipate its own slowdown only by watching its upstream neighbours.

use std::path::Path;

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{write_series, SpeedSeries};
use crate::error::{Error, Result};
use crate::graph::{build_graph, write_segments, write_stations, Segment, SensorGraph, Station};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Line,
    Grid,
    Ring,
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(Self::Line),
            "grid" => Ok(Self::Grid),
            "ring" => Ok(Self::Ring),
            other => Err(Error::config(format!("invalid topology '{other}'"))),
        }
    }
}

/// Distribution shifts standing in for later time periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shift {
    None,
    /// Congestion 1.5× deeper.
    SeasonalAmplitude,
    /// Congestion half as deep, and waves travel at a different speed.
    DemandDrop,
}

impl Shift {
    pub fn tag(self) -> &'static str {
        match self {
            Shift::None => "none",
            Shift::SeasonalAmplitude => "seasonal-amplitude",
            Shift::DemandDrop => "demand-drop",
        }
    }

    pub fn amplitude_factor(self) -> f64 {
        match self {
            Shift::None => 1.0,
            Shift::SeasonalAmplitude => 1.5,
            Shift::DemandDrop => 0.5,
        }
    }
}

impl std::str::FromStr for Shift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "seasonal-amplitude" => Ok(Self::SeasonalAmplitude),
            "demand-drop" => Ok(Self::DemandDrop),
            other => Err(Error::config(format!("unknown shift '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub nodes: usize,
    pub topology: Topology,
    /// mph
    pub free_flow: f64,
    pub step_minutes: i64,
    /// Steps per daily cycle.
    pub day_steps: usize,
    pub days: usize,
    /// Peak speed drop of a full-strength wave, mph.
    pub amplitude: f64,
    /// Steps between a wave reaching consecutive hops.
    pub wave_lag: usize,
    /// Half-width of a congestion pulse, steps.
    pub pulse_width: usize,
    pub noise_std: f64,
    pub seed: u64,
    /// Extra per-hop lag applied under [`Shift::DemandDrop`].
    pub demand_drop_lag_offset: usize,
    pub start: NaiveDateTime,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            nodes: 20,
            topology: Topology::Line,
            free_flow: 65.0,
            step_minutes: 5,
            day_steps: 288,
            days: 4,
            amplitude: 30.0,
            wave_lag: 2,
            pulse_width: 18,
            noise_std: 1.0,
            seed: 7,
            demand_drop_lag_offset: 6,
            start: "2021-03-01T00:00:00".parse().expect("valid literal"),
        }
    }
}

/// Daily rush-hour centres as a fraction of the day.
const RUSH_HOURS: [f64; 2] = [8.0 / 24.0, 17.5 / 24.0];

impl SynthConfig {
    fn validate(&self, shift: Shift) -> Result<()> {
        if self.nodes == 0 || self.days == 0 || self.day_steps == 0 || self.step_minutes <= 0 {
            return Err(Error::config("nodes, days, day_steps and step must be >= 1"));
        }
        if self.pulse_width == 0 || self.noise_std < 0.0 || self.amplitude < 0.0 {
            return Err(Error::config("pulse width must be >= 1, noise and amplitude >= 0"));
        }
        let floor = self.free_flow - shift.amplitude_factor() * self.amplitude - 3.0 * self.noise_std;
        if !(floor > 0.0) {
            return Err(Error::config(format!(
                "free-flow {} cannot absorb amplitude {} and noise {} (shift {})",
                self.free_flow,
                self.amplitude,
                self.noise_std,
                shift.tag()
            )));
        }
        Ok(())
    }

    /// Hop count of each node from the wave source, plus the topology edges.
    fn layout(&self) -> (Vec<usize>, Vec<(usize, usize)>) {
        let n = self.nodes;
        match self.topology {
            Topology::Line => ((0..n).collect(), (1..n).map(|i| (i - 1, i)).collect()),
            Topology::Ring => {
                let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
                if n > 2 {
                    edges.push((n - 1, 0));
                }
                let hops = (0..n).map(|i| i.min(n - i)).collect();
                (hops, edges)
            }
            Topology::Grid => {
                let cols = (n as f64).sqrt().ceil() as usize;
                let hops = (0..n).map(|i| i / cols + i % cols).collect();
                let mut edges = Vec::new();
                for i in 0..n {
                    if i % cols + 1 < cols && i + 1 < n {
                        edges.push((i, i + 1));
                    }
                    if i + cols < n {
                        edges.push((i, i + cols));
                    }
                }
                (hops, edges)
            }
        }
    }

    pub fn station_ids(&self) -> Vec<String> {
        (0..self.nodes).map(|i| format!("S{i:03}")).collect()
    }

    /// Stations and bidirectional 1 km segments.
    pub fn tables(&self) -> (Vec<Station>, Vec<Segment>) {
        let ids = self.station_ids();
        let (_, edges) = self.layout();
        let stations = ids
            .iter()
            .enumerate()
            .map(|(i, id)| Station {
                station_id: id.clone(),
                latitude: 34.0 + 0.009 * i as f64,
                longitude: -118.25,
            })
            .collect();
        let segments = edges
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .map(|(a, b)| Segment {
                from_id: ids[a].clone(),
                to_id: ids[b].clone(),
                distance_km: 1.0,
            })
            .collect();
        (stations, segments)
    }

    pub fn graph(&self, omega: f64) -> Result<SensorGraph> {
        let (stations, segments) = self.tables();
        build_graph(&stations, &segments, omega)
    }
}

fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * x).cos())
    }
}

/// Speed series for `config`, optionally under a distribution shift. Day
/// events and noise come from the same seeded stream whatever the shift, so
/// shifted and unshifted series differ only by the shift itself.
pub fn generate_series(config: &SynthConfig, shift: Shift) -> Result<SpeedSeries> {
    config.validate(shift)?;
    let (hops, _) = config.layout();
    let n = config.nodes;
    let rows = config.days * config.day_steps;
    let amplitude = config.amplitude * shift.amplitude_factor();
    let lag = match shift {
        Shift::DemandDrop => config.wave_lag + config.demand_drop_lag_offset,
        _ => config.wave_lag,
    } as f64;
    let width = config.pulse_width as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // (centre step, depth) for every rush-hour event of every day
    let mut events = Vec::new();
    for day in 0..config.days {
        for &frac in &RUSH_HOURS {
            let jitter = rng.gen_range(-1.0..1.0) * config.day_steps as f64 / 24.0;
            let centre = (day as f64 + frac) * config.day_steps as f64 + jitter;
            let depth = rng.gen_range(0.5..1.0);
            events.push((centre, depth));
        }
    }
    let noise = if config.noise_std > 0.0 {
        Some(Normal::new(0.0, config.noise_std).map_err(|e| Error::config(e.to_string()))?)
    } else {
        None
    };
    let limit = 3.0 * config.noise_std;
    let mut data = Vec::with_capacity(rows * n);
    for t in 0..rows {
        for &hop in &hops {
            let arrival = t as f64 - lag * hop as f64;
            let wave: f64 = events
                .iter()
                .map(|&(c, depth)| depth * bump((arrival - c) / width))
                .sum::<f64>()
                .min(1.0);
            let eps = noise.map_or(0.0, |d| d.sample(&mut rng).clamp(-limit, limit));
            data.push(config.free_flow - amplitude * wave + eps);
        }
    }
    let timestamps = (0..rows)
        .map(|r| config.start + chrono::Duration::minutes(r as i64 * config.step_minutes))
        .collect();
    SpeedSeries::new(
        config.station_ids(),
        config.step_minutes,
        timestamps,
        Tensor::new(vec![rows, n], data)?,
    )
}

/// Graph and unshifted speed series.
pub fn generate(config: &SynthConfig, omega: f64) -> Result<(SensorGraph, SpeedSeries)> {
    Ok((config.graph(omega)?, generate_series(config, Shift::None)?))
}

pub fn generate_shifted(config: &SynthConfig, shift: Shift) -> Result<SpeedSeries> {
    generate_series(config, shift)
}

/// Writes `stations.csv`, `segments.csv` and `speeds.csv` into `dir`.
pub fn write_dataset(dir: &Path, config: &SynthConfig, series: &SpeedSeries) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (stations, segments) = config.tables();
    write_stations(&dir.join("stations.csv"), &stations)?;
    write_segments(&dir.join("segments.csv"), &segments)?;
    write_series(&dir.join("speeds.csv"), series)
}
