//! Analytic training-cost model.
//!
//! A fully-connected layer costs `I·O·ξ`, a convolution
//! `L_h·L_w·C_in·C_out·K²·ξ`. One training step (loss, gradient, update)
//! costs three forward passes. A sparse step costs `f_s = f_d·(1 − d)`, and
//! every `ΔT` iterations one dense-gradient step is paid on top, giving an
//! amortised per-iteration cost of `(3·f_s·ΔT + 2·f_s + f_d) / (ΔT + 1)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mode, ModelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    FullyConnected {
        input: usize,
        output: usize,
    },
    Conv {
        height: usize,
        width: usize,
        c_in: usize,
        c_out: usize,
        kernel: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDesc {
    pub name: String,
    #[serde(flatten)]
    pub kind: LayerKind,
    /// How many times the layer is evaluated per training sample.
    pub repeat: usize,
    /// Terms outside the fully-connected/convolutional accounting, such as
    /// attention scores.
    pub extended: bool,
}

impl LayerDesc {
    pub fn fc(name: impl Into<String>, input: usize, output: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::FullyConnected { input, output },
            repeat: 1,
            extended: false,
        }
    }

    pub fn conv(name: impl Into<String>, height: usize, width: usize, c_in: usize, c_out: usize, kernel: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Conv {
                height,
                width,
                c_in,
                c_out,
                kernel,
            },
            repeat: 1,
            extended: false,
        }
    }

    pub fn times(mut self, repeat: usize) -> Self {
        self.repeat = repeat;
        self
    }

    fn extended(mut self) -> Self {
        self.extended = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsModel {
    pub layers: Vec<LayerDesc>,
    /// Cost of one length-`j` dot product.
    pub xi: f64,
    pub delta_t: usize,
    pub sparsity: f64,
}

pub fn layer_flops(desc: &LayerDesc, xi: f64) -> Result<f64> {
    let dims: Vec<usize> = match desc.kind {
        LayerKind::FullyConnected { input, output } => vec![input, output],
        LayerKind::Conv {
            height,
            width,
            c_in,
            c_out,
            kernel,
        } => vec![height, width, c_in, c_out, kernel],
    };
    if dims.contains(&0) || desc.repeat == 0 {
        return Err(Error::invalid(format!("layer '{}' has a zero dimension", desc.name)));
    }
    let base = match desc.kind {
        LayerKind::FullyConnected { input, output } => (input * output) as f64,
        LayerKind::Conv {
            height,
            width,
            c_in,
            c_out,
            kernel,
        } => (height * width * c_in * c_out * kernel * kernel) as f64,
    };
    Ok(base * xi * desc.repeat as f64)
}

fn check_domain(d: f64, delta_t: usize) -> Result<()> {
    if !(0.0..1.0).contains(&d) {
        return Err(Error::invalid(format!("sparsity {d} must be in [0, 1)")));
    }
    if delta_t == 0 {
        return Err(Error::invalid("drop-and-grow frequency must be >= 1"));
    }
    Ok(())
}

/// Sparse-to-dense training FLOPs ratio
/// `(3ΔT − 3dΔT − 2d + 3) / (3(ΔT + 1))`.
pub fn sparse_ratio(d: f64, delta_t: usize) -> Result<f64> {
    check_domain(d, delta_t)?;
    let t = delta_t as f64;
    Ok((3.0 * t - 3.0 * d * t - 2.0 * d + 3.0) / (3.0 * (t + 1.0)))
}

impl FlopsModel {
    pub fn new(layers: Vec<LayerDesc>, xi: f64, delta_t: usize, sparsity: f64) -> Result<Self> {
        check_domain(sparsity, delta_t)?;
        if !(xi > 0.0) {
            return Err(Error::invalid("unit cost must be positive"));
        }
        for l in &layers {
            layer_flops(l, xi)?;
        }
        Ok(Self {
            layers,
            xi,
            delta_t,
            sparsity,
        })
    }

    /// Per-window descriptors for an STGT model over `nodes` stations with
    /// `edges` directed edges (self-loops excluded).
    pub fn for_stgt(cfg: &ModelConfig, nodes: usize, edges: usize, xi: f64, delta_t: usize, sparsity: f64) -> Result<Self> {
        let (f, fs, h) = (cfg.history, cfg.spatial_dim, cfg.hidden);
        let mut layers = Vec::new();
        match cfg.mode {
            Mode::Gcn => {
                layers.push(LayerDesc::fc("spatial.propagation", nodes, nodes).times(f));
                layers.push(LayerDesc::fc("spatial.weight", 1, fs).times(nodes * f));
            }
            Mode::Gat => {
                let heads = cfg.heads.max(1);
                let fh = fs / heads;
                layers.push(LayerDesc::fc("spatial.weight", 1, fs).times(nodes * f));
                layers.push(
                    LayerDesc::fc("spatial.attention", 2 * fh, 1)
                        .times((edges + nodes) * heads * f)
                        .extended(),
                );
            }
        }
        for l in 0..cfg.lstm_layers {
            let d_in = if l == 0 { fs } else { h };
            for gate in ["i", "f", "g", "o"] {
                layers.push(LayerDesc::fc(format!("lstm{l}.gate_{gate}"), d_in + h, h).times(nodes * f));
            }
        }
        layers.push(LayerDesc::fc("head", h, cfg.horizon).times(nodes));
        Self::new(layers, xi, delta_t, sparsity)
    }

    /// `f_d`: one dense forward pass.
    pub fn dense_forward_flops(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| layer_flops(l, self.xi).expect("validated on construction"))
            .sum()
    }

    /// `f_s = f_d · (1 − d)`.
    pub fn sparse_forward_flops(&self) -> f64 {
        self.dense_forward_flops() * (1.0 - self.sparsity)
    }

    pub fn has_extended_terms(&self) -> bool {
        self.layers.iter().any(|l| l.extended)
    }
}

/// `3·f_d`: loss, gradient and update of one dense step.
pub fn dense_step_flops(model: &FlopsModel) -> f64 {
    3.0 * model.dense_forward_flops()
}

/// Amortised per-iteration cost of sparse training.
pub fn amortized_training_flops(model: &FlopsModel) -> f64 {
    let fd = model.dense_forward_flops();
    let fs = model.sparse_forward_flops();
    let t = model.delta_t as f64;
    (3.0 * fs * t + 2.0 * fs + fd) / (t + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerContribution {
    pub name: String,
    pub f_d: f64,
    pub extended: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsReport {
    pub sparsity: f64,
    pub delta_t: usize,
    pub xi: f64,
    pub layers: Vec<LayerContribution>,
    pub f_d: f64,
    pub f_s: f64,
    pub dense_step: f64,
    pub amortized_sparse: f64,
    pub ratio: f64,
    pub extended_accounting: bool,
}

impl FlopsReport {
    pub fn new(model: &FlopsModel) -> Result<Self> {
        Ok(Self {
            sparsity: model.sparsity,
            delta_t: model.delta_t,
            xi: model.xi,
            layers: model
                .layers
                .iter()
                .map(|l| {
                    Ok(LayerContribution {
                        name: l.name.clone(),
                        f_d: layer_flops(l, model.xi)?,
                        extended: l.extended,
                    })
                })
                .collect::<Result<_>>()?,
            f_d: model.dense_forward_flops(),
            f_s: model.sparse_forward_flops(),
            dense_step: dense_step_flops(model),
            amortized_sparse: amortized_training_flops(model),
            ratio: sparse_ratio(model.sparsity, model.delta_t)?,
            extended_accounting: model.has_extended_terms(),
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }
}
