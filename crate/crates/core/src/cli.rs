//! Command-line surface. Flags override values from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, DEFAULT_XI};
use crate::config::{Horizon, RunConfig};
use crate::error::{Error, Result};
use crate::graph::{load_graph, Normalization};
use crate::model::Mode;
use crate::sparse::SPARSITY_GRID;
use crate::synth::{Shift, SynthConfig, Topology};

#[derive(Debug, Parser)]
#[command(name = "stgt", version, about = "Sparse spatio-temporal GNN traffic forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic stations/segments/speeds dataset.
    Synth(SynthArgs),
    /// Train one model and evaluate it on the test split.
    Train(RunArgs),
    /// Zero-shot evaluation of a checkpoint on one or more periods.
    Eval(EvalArgs),
    /// Train across a sparsity grid and tabulate error and FLOPs ratio.
    Sweep(SweepArgs),
    /// Analytic FLOPs report for a configuration, without training.
    Flops(FlopsArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub nodes: usize,
    #[arg(long, default_value = "line")]
    pub topology: Topology,
    #[arg(long, default_value_t = 4)]
    pub days: usize,
    #[arg(long, default_value_t = 288)]
    pub day_steps: usize,
    #[arg(long, default_value_t = 5)]
    pub step_minutes: i64,
    #[arg(long, default_value_t = 65.0)]
    pub free_flow: f64,
    #[arg(long, default_value_t = 30.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 2)]
    pub wave_lag: usize,
    #[arg(long, default_value_t = 18)]
    pub pulse_width: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "none")]
    pub shift: Shift,
    /// Extra per-hop wave lag under the demand-drop shift.
    #[arg(long, default_value_t = 6)]
    pub lag_offset: usize,
}

impl SynthArgs {
    pub fn config(&self) -> SynthConfig {
        SynthConfig {
            nodes: self.nodes,
            topology: self.topology,
            free_flow: self.free_flow,
            step_minutes: self.step_minutes,
            day_steps: self.day_steps,
            days: self.days,
            amplitude: self.amplitude,
            wave_lag: self.wave_lag,
            pulse_width: self.pulse_width,
            noise_std: self.noise,
            seed: self.seed,
            demand_drop_lag_offset: self.lag_offset,
            ..SynthConfig::default()
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags given here take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Input window length in steps.
    #[arg(long)]
    pub history: Option<usize>,
    /// Prediction horizon, in steps (9) or minutes (45min).
    #[arg(long)]
    pub horizon: Option<Horizon>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub sparsity: Option<f64>,
    #[arg(long)]
    pub drop_rate: Option<f64>,
    #[arg(long)]
    pub update_freq: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub normalization: Option<Normalization>,
    #[arg(long)]
    pub spatial_dim: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lstm_layers: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    /// Directory with stations.csv, segments.csv and speeds.csv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Parent directory for run outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($cfg:ident, $args:ident, $($field:ident => $target:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$target = v; })*
    };
}

impl RunArgs {
    /// The config file (or defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        overlay!(cfg, self,
            mode => mode, history => history, horizon => horizon, stride => stride,
            sparsity => sparsity, drop_rate => drop_rate, update_freq => update_freq,
            epochs => epochs, batch_size => batch_size, lr => lr, momentum => momentum,
            seed => seed, omega => omega, normalization => normalization,
            spatial_dim => spatial_dim, hidden => hidden, lstm_layers => lstm_layers,
            heads => heads, data => data_dir, out => out_dir,
        );
        if self.clip_norm.is_some() {
            cfg.clip_norm = self.clip_norm;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// `TAG=DIR`, repeatable; DIR holds speeds.csv for that period.
    #[arg(long = "period", required = true, value_parser = parse_period)]
    pub periods: Vec<(String, PathBuf)>,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 0.5)]
    pub day_threshold: f64,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

fn parse_period(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((tag, dir)) if !tag.is_empty() && !dir.is_empty() => Ok((tag.to_string(), PathBuf::from(dir))),
        _ => Err(format!("expected TAG=DIR, got '{s}'")),
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated sparsity levels; defaults to 0 plus the standard grid.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Train the grid points concurrently.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct FlopsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Station count; read from the data directory when omitted.
    #[arg(long, requires = "edges")]
    pub nodes: Option<usize>,
    /// Directed edge count, self-loops excluded.
    #[arg(long, requires = "nodes")]
    pub edges: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub step_minutes: i64,
    #[arg(long, default_value_t = DEFAULT_XI)]
    pub xi: f64,
}

pub fn default_grid() -> Vec<f64> {
    std::iter::once(0.0).chain(SPARSITY_GRID).collect()
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => {
            commands::cmd_synth(&args.config(), args.shift, &args.out)?;
            println!("wrote {}", args.out.display());
        }
        Command::Train(args) => {
            let (dir, out) = commands::cmd_train(&args.resolve()?)?;
            println!(
                "{}: test MAE {:.3} RMSE {:.3} MAPE {:.3}% -> {}",
                out.checkpoint.model.mode().label(),
                out.test_report.mae,
                out.test_report.rmse,
                out.test_report.mape,
                dir.display()
            );
        }
        Command::Eval(args) => {
            let (dir, reports) =
                commands::cmd_eval(&args.checkpoint, &args.periods, args.stride, args.day_threshold, &args.out)?;
            for r in &reports {
                println!("{}: MAE {:.3} RMSE {:.3} MAPE {:.3}%", r.period, r.mae, r.rmse, r.mape);
            }
            println!("-> {}", dir.display());
        }
        Command::Sweep(args) => {
            let cfg = args.run.resolve()?;
            let grid = args.grid.unwrap_or_else(default_grid);
            let (dir, rows) = commands::cmd_sweep(&cfg, &grid, args.parallel)?;
            for r in rows.iter().filter(|r| r.horizon == "all") {
                println!("d={:<6} MAPE {:7.3}%  FLOPs ratio {:.5}", r.sparsity, r.mape, r.flops_ratio);
            }
            println!("-> {}", dir.join("sweep.csv").display());
        }
        Command::Flops(args) => {
            let cfg = args.run.resolve()?;
            let (nodes, edges) = match (args.nodes, args.edges) {
                (Some(n), Some(e)) => (n, e),
                _ => {
                    let dir = &cfg.data_dir;
                    let g = load_graph(&commands::stations_path(dir), &commands::segments_path(dir), cfg.omega)
                        .map_err(|e| Error::config(format!("pass --nodes/--edges or a valid --data directory ({e})")))?;
                    (g.num_nodes(), g.edges().len())
                }
            };
            let (dir, report) = commands::cmd_flops(&cfg, nodes, edges, args.step_minutes, args.xi, &cfg.out_dir)?;
            println!(
                "f_d {:.4e}  f_s {:.4e}  ratio {:.5} -> {}",
                report.f_d,
                report.f_s,
                report.ratio,
                dir.display()
            );
        }
    }
    Ok(())
}
