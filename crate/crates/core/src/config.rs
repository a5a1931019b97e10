//! Run configuration: one flat TOML document that captures every input of a
//! training run, seed included.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Normalization, DEFAULT_OMEGA};
use crate::model::{Mode, ModelConfig};
use crate::sparse::{DEFAULT_DROP_RATE, DEFAULT_UPDATE_FREQ};
use crate::train::TrainConfig;

/// Prediction horizon, either in steps (`9`) or minutes (`45min`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Horizon {
    Steps(usize),
    Minutes(i64),
}

impl Horizon {
    pub fn steps(self, step_minutes: i64) -> Result<usize> {
        match self {
            Horizon::Steps(n) => Ok(n),
            Horizon::Minutes(m) => {
                if step_minutes <= 0 || m % step_minutes != 0 {
                    return Err(Error::config(format!(
                        "horizon {m}min is not a whole number of {step_minutes}-minute steps"
                    )));
                }
                Ok((m / step_minutes) as usize)
            }
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Steps(n) => write!(f, "{n}"),
            Horizon::Minutes(m) => write!(f, "{m}min"),
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("invalid horizon '{s}' (use steps like 9 or minutes like 45min)"));
        let t = s.trim();
        let h = match t.strip_suffix("min") {
            Some(m) => Horizon::Minutes(m.trim().parse().map_err(|_| bad())?),
            None => Horizon::Steps(t.parse().map_err(|_| bad())?),
        };
        match h {
            Horizon::Steps(0) | Horizon::Minutes(..=0) => Err(bad()),
            h => Ok(h),
        }
    }
}

impl TryFrom<String> for Horizon {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Horizon> for String {
    fn from(h: Horizon) -> String {
        h.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Input window length `F`, in steps.
    pub history: usize,
    pub horizon: Horizon,
    pub stride: usize,
    pub sparsity: f64,
    /// Fraction of active weights replaced per mask update.
    pub drop_rate: f64,
    /// Iterations between mask updates.
    pub update_freq: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_norm: Option<f64>,
    pub omega: f64,
    pub normalization: Normalization,
    pub spatial_dim: usize,
    pub hidden: usize,
    pub lstm_layers: usize,
    pub heads: usize,
    pub leaky_slope: f64,
    pub train_ratio: f64,
    pub val_ratio: f64,
    pub test_ratio: f64,
    /// Days with a larger fraction of incomplete stations are dropped.
    pub day_threshold: f64,
    /// Directory holding `stations.csv`, `segments.csv` and `speeds.csv`.
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        let t = TrainConfig::default();
        Self {
            mode: m.mode,
            history: m.history,
            horizon: Horizon::Minutes(45),
            stride: 1,
            sparsity: 0.0,
            drop_rate: DEFAULT_DROP_RATE,
            update_freq: DEFAULT_UPDATE_FREQ,
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            momentum: t.momentum,
            seed: t.seed,
            clip_norm: t.clip_norm,
            omega: DEFAULT_OMEGA,
            normalization: m.normalization,
            spatial_dim: m.spatial_dim,
            hidden: m.hidden,
            lstm_layers: m.lstm_layers,
            heads: m.heads,
            leaky_slope: m.leaky_slope,
            train_ratio: 0.7,
            val_ratio: 0.1,
            test_ratio: 0.2,
            day_threshold: 0.5,
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("runs"),
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(msg()))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.history >= 1, || "history must be >= 1".into())?;
        check(self.stride >= 1, || "stride must be >= 1".into())?;
        check((0.0..1.0).contains(&self.sparsity), || {
            format!("sparsity {} must be in [0, 1)", self.sparsity)
        })?;
        check((0.0..=1.0).contains(&self.drop_rate), || {
            format!("drop rate {} must be in [0, 1]", self.drop_rate)
        })?;
        check(self.update_freq >= 1, || "update frequency must be >= 1".into())?;
        check(self.batch_size >= 1, || "batch size must be >= 1".into())?;
        check(self.lr > 0.0 && self.lr.is_finite(), || format!("learning rate {} must be positive", self.lr))?;
        check((0.0..1.0).contains(&self.momentum), || {
            format!("momentum {} must be in [0, 1)", self.momentum)
        })?;
        if let Some(c) = self.clip_norm {
            check(c > 0.0, || format!("clip norm {c} must be positive"))?;
        }
        check(self.omega > 0.0 && self.omega.is_finite(), || format!("omega {} must be positive", self.omega))?;
        check(self.spatial_dim >= 1 && self.hidden >= 1 && self.lstm_layers >= 1, || {
            "spatial_dim, hidden and lstm_layers must be >= 1".into()
        })?;
        if self.mode == Mode::Gat {
            check(self.heads >= 1 && self.spatial_dim % self.heads == 0, || {
                format!("spatial_dim {} must be a multiple of heads {}", self.spatial_dim, self.heads)
            })?;
        }
        check(self.leaky_slope >= 0.0 && self.leaky_slope < 1.0, || {
            format!("leaky slope {} must be in [0, 1)", self.leaky_slope)
        })?;
        let ratios = [self.train_ratio, self.val_ratio, self.test_ratio];
        check(ratios.iter().all(|&r| r > 0.0), || "split ratios must be positive".into())?;
        check((ratios.iter().sum::<f64>() - 1.0).abs() < 1e-9, || {
            format!("split ratios {ratios:?} must sum to 1")
        })?;
        check((0.0..=1.0).contains(&self.day_threshold), || {
            format!("day threshold {} must be in [0, 1]", self.day_threshold)
        })
    }

    pub fn split_ratios(&self) -> (f64, f64, f64) {
        (self.train_ratio, self.val_ratio, self.test_ratio)
    }

    pub fn model_config(&self, step_minutes: i64) -> Result<ModelConfig> {
        Ok(ModelConfig {
            mode: self.mode,
            history: self.history,
            horizon: self.horizon.steps(step_minutes)?,
            spatial_dim: self.spatial_dim,
            hidden: self.hidden,
            lstm_layers: self.lstm_layers,
            heads: self.heads,
            leaky_slope: self.leaky_slope,
            normalization: self.normalization,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            momentum: self.momentum,
            seed: self.seed,
            clip_norm: self.clip_norm,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }
}
