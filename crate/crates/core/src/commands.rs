//! The pipeline steps behind each subcommand, callable without a shell.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::dataset::{clean_series, load_series, make_windows, split, SpeedSeries, WindowedBatch};
use crate::error::{Error, Result};
use crate::flops::{sparse_ratio, FlopsModel, FlopsReport};
use crate::graph::{load_graph, SensorGraph};
use crate::metrics::{self, evaluate_transfer, write_reports_csv, write_reports_json, EvalReport};
use crate::model::StgtModel;
use crate::sparse::SparseState;
use crate::synth::{self, Shift, SynthConfig};
use crate::train::{train, History, NoObserver, TrainData, TrainObserver};

/// Unit cost in FLOPs reports; results are in multiples of it.
pub const DEFAULT_XI: f64 = 1.0;

pub fn stations_path(dir: &Path) -> PathBuf {
    dir.join("stations.csv")
}

pub fn segments_path(dir: &Path) -> PathBuf {
    dir.join("segments.csv")
}

pub fn speeds_path(dir: &Path) -> PathBuf {
    dir.join("speeds.csv")
}

/// Creates `<out>/<kind>-<timestamp>`, adding a numeric suffix if a run
/// with the same timestamp already exists.
pub fn create_run_dir(out: &Path, kind: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S");
    let base = format!("{kind}-{stamp}");
    for n in 1.. {
        let name = if n == 1 { base.clone() } else { format!("{base}-{n}") };
        let dir = out.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(&dir, e)),
        }
    }
    unreachable!()
}

/// Cleaned series, the graph restricted to surviving stations, and the
/// three raw window splits.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub graph: SensorGraph,
    pub series: SpeedSeries,
    pub train: WindowedBatch,
    pub val: WindowedBatch,
    pub test: WindowedBatch,
}

impl PreparedData {
    pub fn step_minutes(&self) -> i64 {
        self.series.step_minutes
    }

    pub fn from_parts(cfg: &RunConfig, graph: &SensorGraph, raw: &SpeedSeries) -> Result<Self> {
        cfg.validate()?;
        let series = clean_series(raw, cfg.day_threshold)?;
        let graph = graph.restrict(&series.node_ids)?;
        let horizon = cfg.horizon.steps(series.step_minutes)?;
        let windows = make_windows(&series, cfg.history, horizon, cfg.stride)?;
        let (train, val, test) = split(&windows, cfg.split_ratios())?;
        Ok(Self { graph, series, train, val, test })
    }

    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let dir = &cfg.data_dir;
        let graph = load_graph(&stations_path(dir), &segments_path(dir), cfg.omega)?;
        let raw = load_series(&speeds_path(dir), &graph)?;
        Self::from_parts(cfg, &graph, &raw)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub history: History,
    pub test_report: EvalReport,
}

/// Builds, trains and tests one model. Sparsity 0 trains densely.
pub fn run_training(cfg: &RunConfig, data: &PreparedData, observer: &mut dyn TrainObserver) -> Result<TrainOutcome> {
    cfg.validate()?;
    let step = data.step_minutes();
    let mut model = StgtModel::new(cfg.model_config(step)?, &data.graph, cfg.seed)?;
    let mut sparse = if cfg.sparsity > 0.0 {
        Some(SparseState::init(&mut model, cfg.sparsity, cfg.drop_rate, cfg.update_freq, cfg.seed)?)
    } else {
        None
    };
    let train_data = TrainData::new(data.train.clone(), data.val.clone(), step);
    let history = train(&mut model, sparse.as_mut(), &train_data, &cfg.train_config(), observer)?;
    let test_report = metrics::evaluate(&model, &train_data.normalizer, &data.test, "test", step)?;
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            model,
            graph: data.graph.clone(),
            normalizer: train_data.normalizer,
            step_minutes: step,
            sparse,
        },
        history,
        test_report,
    })
}

fn write_training_outputs(dir: &Path, cfg: &RunConfig, out: &TrainOutcome) -> Result<()> {
    cfg.save(&dir.join("config.toml"))?;
    out.checkpoint.save(&dir.join("checkpoint.json"))?;
    out.history.write_csv(&dir.join("history.csv"))?;
    let reports = std::slice::from_ref(&out.test_report);
    write_reports_json(&dir.join("eval-report.json"), reports)?;
    write_reports_csv(&dir.join("eval-report.csv"), reports)
}

/// `train`: writes `config.toml`, `checkpoint.json`, `history.csv` and the
/// test-split `eval-report.{json,csv}` into a fresh run directory.
pub fn cmd_train(cfg: &RunConfig) -> Result<(PathBuf, TrainOutcome)> {
    let data = PreparedData::load(cfg)?;
    let outcome = run_training(cfg, &data, &mut NoObserver)?;
    let dir = create_run_dir(&cfg.out_dir, "train")?;
    write_training_outputs(&dir, cfg, &outcome)?;
    log::info!(
        "{} trained: test MAPE {:.3}% -> {}",
        outcome.checkpoint.model.mode().label(),
        outcome.test_report.mape,
        dir.display()
    );
    Ok((dir, outcome))
}

/// `synth`: writes the dataset triplet plus `synth-config.json` into `out`.
pub fn cmd_synth(config: &SynthConfig, shift: Shift, out: &Path) -> Result<SpeedSeries> {
    let series = synth::generate_shifted(config, shift)?;
    synth::write_dataset(out, config, &series)?;
    #[derive(Serialize)]
    struct Record<'a> {
        config: &'a SynthConfig,
        shift: Shift,
    }
    let path = out.join("synth-config.json");
    let text = serde_json::to_string_pretty(&Record { config, shift })?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(series)
}

/// Loads one evaluation period against the checkpoint's stations.
pub fn load_period(checkpoint: &Checkpoint, dir: &Path, stride: usize, day_threshold: f64) -> Result<WindowedBatch> {
    let raw = load_series(&speeds_path(dir), &checkpoint.graph)?;
    let series = clean_series(&raw, day_threshold)?;
    if series.node_ids != checkpoint.graph.node_ids() {
        let lost = checkpoint.graph.node_ids().len() - series.node_ids.len();
        return Err(Error::data(format!(
            "{}: {lost} station(s) the model needs are incomplete in this period",
            dir.display()
        )));
    }
    if series.step_minutes != checkpoint.step_minutes {
        return Err(Error::data(format!(
            "{}: {}-minute steps, model trained on {}-minute steps",
            dir.display(),
            series.step_minutes,
            checkpoint.step_minutes
        )));
    }
    let cfg = &checkpoint.model.config;
    make_windows(&series, cfg.history, cfg.horizon, stride)
}

/// `eval`: zero-shot evaluation of a checkpoint on each `(tag, data dir)`.
pub fn cmd_eval(
    checkpoint: &Path,
    periods: &[(String, PathBuf)],
    stride: usize,
    day_threshold: f64,
    out: &Path,
) -> Result<(PathBuf, Vec<EvalReport>)> {
    if periods.is_empty() {
        return Err(Error::config("no evaluation periods given"));
    }
    let ck = Checkpoint::load(checkpoint)?;
    let batches = periods
        .iter()
        .map(|(tag, dir)| Ok((tag.clone(), load_period(&ck, dir, stride, day_threshold)?)))
        .collect::<Result<Vec<_>>>()?;
    let reports = evaluate_transfer(&ck, &batches)?;
    let dir = create_run_dir(out, "eval")?;
    write_reports_json(&dir.join("eval-report.json"), &reports)?;
    write_reports_csv(&dir.join("eval-report.csv"), &reports)?;
    Ok((dir, reports))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sparsity: f64,
    pub mode: String,
    /// `<minutes>min` for one horizon step, `all` for the mean over steps.
    pub horizon: String,
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub flops_ratio: f64,
}

fn sweep_rows(sparsity: f64, update_freq: usize, report: &EvalReport) -> Result<Vec<SweepRow>> {
    let ratio = sparse_ratio(sparsity, update_freq)?;
    let row = |horizon: String, mae, rmse, mape| SweepRow {
        sparsity,
        mode: report.mode.clone(),
        horizon,
        mae,
        rmse,
        mape,
        flops_ratio: ratio,
    };
    let mut rows: Vec<SweepRow> = report
        .per_horizon
        .iter()
        .map(|h| row(format!("{}min", h.minutes), h.mae, h.rmse, h.mape))
        .collect();
    rows.push(row("all".into(), report.mae, report.rmse, report.mape));
    Ok(rows)
}

/// Trains one model per sparsity level (0 included as the dense baseline)
/// and tabulates test error and training-FLOPs ratio.
pub fn run_sweep(cfg: &RunConfig, data: &PreparedData, grid: &[f64], parallel: bool) -> Result<Vec<(f64, TrainOutcome)>> {
    if grid.is_empty() {
        return Err(Error::config("empty sparsity grid"));
    }
    let one = |&d: &f64| -> Result<(f64, TrainOutcome)> {
        let point = RunConfig { sparsity: d, ..cfg.clone() };
        let out = run_training(&point, data, &mut NoObserver)?;
        log::info!("sparsity {d}: test MAPE {:.3}%", out.test_report.mape);
        Ok((d, out))
    };
    if parallel {
        grid.par_iter().map(one).collect()
    } else {
        grid.iter().map(one).collect()
    }
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `sweep`: one sub-run directory per sparsity level plus `sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig, grid: &[f64], parallel: bool) -> Result<(PathBuf, Vec<SweepRow>)> {
    let data = PreparedData::load(cfg)?;
    let results = run_sweep(cfg, &data, grid, parallel)?;
    let dir = create_run_dir(&cfg.out_dir, "sweep")?;
    cfg.save(&dir.join("config.toml"))?;
    for (d, out) in &results {
        let point = RunConfig { sparsity: *d, ..cfg.clone() };
        let sub = dir.join(format!("d{d}"));
        std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        write_training_outputs(&sub, &point, out)?;
    }
    let rows = sweep_table(cfg, &results)?;
    write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
    Ok((dir, rows))
}

pub fn sweep_table(cfg: &RunConfig, results: &[(f64, TrainOutcome)]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (d, out) in results {
        rows.extend(sweep_rows(*d, cfg.update_freq, &out.test_report)?);
    }
    Ok(rows)
}

/// `flops`: analytic cost report for the configured model on a graph with
/// `nodes` stations and `edges` directed edges.
pub fn cmd_flops(cfg: &RunConfig, nodes: usize, edges: usize, step_minutes: i64, xi: f64, out: &Path) -> Result<(PathBuf, FlopsReport)> {
    cfg.validate()?;
    let model = FlopsModel::for_stgt(&cfg.model_config(step_minutes)?, nodes, edges, xi, cfg.update_freq, cfg.sparsity)?;
    let report = FlopsReport::new(&model)?;
    let dir = create_run_dir(out, "flops")?;
    cfg.save(&dir.join("config.toml"))?;
    report.write_json(&dir.join("flops-report.json"))?;
    Ok((dir, report))
}
