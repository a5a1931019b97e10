use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::Dense;
use super::gat::{GatCache, GatLayer};
use super::gcn::{GcnCache, GcnLayer};
use super::lstm::{LstmLayer, LstmStack, LstmStackCache};
use super::loss::{mse_grad, mse_loss};
use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, Normalization, SensorGraph};
use crate::tensor::{Layer, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Gcn,
    Gat,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Gcn => "GCN-STGT",
            Mode::Gat => "GAT-STGT",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Gcn => "gcn",
            Mode::Gat => "gat",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" | "gcn-stgt" => Ok(Mode::Gcn),
            "gat" | "gat-stgt" => Ok(Mode::Gat),
            other => Err(Error::config(format!("unknown mode '{other}'"))),
        }
    }
}

/// Layer widths and spatial-block settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: Mode,
    pub history: usize,
    pub horizon: usize,
    /// Width of the spatial block output (all heads together for GAT).
    pub spatial_dim: usize,
    pub hidden: usize,
    pub lstm_layers: usize,
    pub heads: usize,
    pub leaky_slope: f64,
    pub normalization: Normalization,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Gcn,
            history: 12,
            horizon: 9,
            spatial_dim: 64,
            hidden: 128,
            lstm_layers: 2,
            heads: 4,
            leaky_slope: 0.2,
            normalization: Normalization::Sym,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Spatial {
    Gcn(GcnLayer),
    Gat(GatLayer),
}

enum SpatialCache {
    Gcn(GcnCache),
    Gat(GatCache),
}

impl Spatial {
    fn forward(&self, x: &Tensor) -> Result<(Tensor, SpatialCache)> {
        Ok(match self {
            Spatial::Gcn(l) => {
                let (y, c) = l.forward(x)?;
                (y, SpatialCache::Gcn(c))
            }
            Spatial::Gat(l) => {
                let (y, c) = l.forward(x)?;
                (y, SpatialCache::Gat(c))
            }
        })
    }

    fn backward(&self, cache: &SpatialCache, g: &Tensor) -> Result<Vec<Tensor>> {
        Ok(match (self, cache) {
            (Spatial::Gcn(l), SpatialCache::Gcn(c)) => l.backward(c, g)?.params,
            (Spatial::Gat(l), SpatialCache::Gat(c)) => l.backward(c, g)?.params,
            _ => unreachable!("cache produced by the same spatial block"),
        })
    }

    fn params(&self) -> Vec<&Tensor> {
        match self {
            Spatial::Gcn(l) => l.params(),
            Spatial::Gat(l) => l.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Spatial::Gcn(l) => l.params_mut(),
            Spatial::Gat(l) => l.params_mut(),
        }
    }
}

/// Name, shape and mask eligibility of one parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    /// Weight matrices are sparsified; biases and attention vectors are not.
    pub sparsifiable: bool,
}

/// Spatial block → stacked LSTM → fully-connected head.
///
/// The spatial block sees one time step at a time (`[nodes × 1]` speeds),
/// the LSTM runs over the resulting sequence with nodes as the batch axis,
/// and the head maps each node's final hidden state to `horizon` outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StgtModel {
    pub config: ModelConfig,
    pub spatial: Spatial,
    pub temporal: LstmStack,
    pub head: Dense,
}

pub struct ForwardCache {
    spatial: Vec<SpatialCache>,
    temporal: LstmStackCache,
    head: Tensor,
}

fn glorot(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-limit..limit)).collect())
        .expect("shape and length agree")
}

impl StgtModel {
    /// Builds a model with seeded Glorot-uniform weights and zero biases.
    pub fn new(config: ModelConfig, graph: &SensorGraph, seed: u64) -> Result<Self> {
        if config.history == 0 || config.horizon == 0 || config.spatial_dim == 0 || config.hidden == 0 {
            return Err(Error::config("model widths must be >= 1"));
        }
        if config.lstm_layers == 0 {
            return Err(Error::config("need at least one LSTM layer"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fs = config.spatial_dim;
        let spatial = match config.mode {
            Mode::Gcn => Spatial::Gcn(GcnLayer::new(
                glorot(&[1, fs], 1, fs, &mut rng),
                Tensor::zeros(&[fs]),
                normalize_adjacency(graph, config.normalization),
            )?),
            Mode::Gat => {
                if config.heads == 0 || fs % config.heads != 0 {
                    return Err(Error::config(format!(
                        "spatial_dim {fs} is not divisible by {} heads",
                        config.heads
                    )));
                }
                let fh = fs / config.heads;
                Spatial::Gat(GatLayer::new(
                    glorot(&[1, fs], 1, fh, &mut rng),
                    glorot(&[config.heads, 2 * fh], 2 * fh, 1, &mut rng),
                    config.heads,
                    config.leaky_slope,
                    graph.in_neighborhoods(),
                )?)
            }
        };
        let h = config.hidden;
        let mut layers = Vec::with_capacity(config.lstm_layers);
        for l in 0..config.lstm_layers {
            let d = if l == 0 { fs } else { h };
            layers.push(LstmLayer::new(
                glorot(&[d, 4 * h], d, 4 * h, &mut rng),
                glorot(&[h, 4 * h], h, 4 * h, &mut rng),
                Tensor::zeros(&[4 * h]),
            )?);
        }
        let head = Dense::new(
            glorot(&[h, config.horizon], h, config.horizon, &mut rng),
            Tensor::zeros(&[config.horizon]),
        );
        Ok(Self {
            config,
            spatial,
            temporal: LstmStack::new(layers)?,
            head,
        })
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn num_nodes(&self) -> usize {
        match &self.spatial {
            Spatial::Gcn(l) => l.propagation.rows(),
            Spatial::Gat(l) => l.neighborhoods.len(),
        }
    }

    pub fn param_specs(&self) -> Vec<ParamSpec> {
        let spatial_second = match self.spatial {
            Spatial::Gcn(_) => "spatial.bias",
            Spatial::Gat(_) => "spatial.attention",
        };
        let mut names = vec![("spatial.weight".to_string(), true), (spatial_second.to_string(), false)];
        for l in 0..self.temporal.layers.len() {
            names.push((format!("lstm{l}.w_ih"), true));
            names.push((format!("lstm{l}.w_hh"), true));
            names.push((format!("lstm{l}.bias"), false));
        }
        names.push(("head.weight".into(), true));
        names.push(("head.bias".into(), false));
        names
            .into_iter()
            .zip(self.params())
            .map(|((name, sparsifiable), p)| ParamSpec {
                name,
                shape: p.shape().to_vec(),
                sparsifiable,
            })
            .collect()
    }

    /// Parameter tensors in a fixed order shared by gradients, masks and
    /// checkpoints.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = self.spatial.params();
        out.extend(self.temporal.params());
        out.extend(self.head.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.spatial.params_mut();
        out.extend(self.temporal.params_mut());
        out.extend(self.head.params_mut());
        out
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Forecast for one `[nodes × history]` window, `[nodes × horizon]` out.
    pub fn forward(&self, window: &Tensor) -> Result<(Tensor, ForwardCache)> {
        let n = self.num_nodes();
        if window.shape() != [n, self.config.history] {
            return Err(Error::dim(format!(
                "window {:?} does not match model [{n}, {}]",
                window.shape(),
                self.config.history
            )));
        }
        let f = self.config.history;
        let mut seq = Vec::with_capacity(f * n * self.config.spatial_dim);
        let mut spatial = Vec::with_capacity(f);
        for t in 0..f {
            let x_t = Tensor::new(vec![n, 1], (0..n).map(|i| window.at(i, t)).collect())?;
            let (z, cache) = self.spatial.forward(&x_t)?;
            seq.extend_from_slice(z.data());
            spatial.push(cache);
        }
        let seq = Tensor::new(vec![f, n, self.config.spatial_dim], seq)?;
        let (h, temporal) = self.temporal.forward(&seq)?;
        let (y, head) = self.head.forward(&h)?;
        Ok((
            y,
            ForwardCache {
                spatial,
                temporal,
                head,
            },
        ))
    }

    pub fn predict(&self, window: &Tensor) -> Result<Tensor> {
        Ok(self.forward(window)?.0)
    }

    /// Gradients of the loss for every parameter, given `dL/d output`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Tensor) -> Result<Vec<Tensor>> {
        let head = self.head.backward(&cache.head, grad_out)?;
        let temporal = self.temporal.backward(&cache.temporal, &head.input)?;
        let (n, d) = (self.num_nodes(), self.config.spatial_dim);
        let mut spatial: Option<Vec<Tensor>> = None;
        for (t, sc) in cache.spatial.iter().enumerate() {
            let g = Tensor::new(vec![n, d], temporal.input.data()[t * n * d..(t + 1) * n * d].to_vec())?;
            let grads = self.spatial.backward(sc, &g)?;
            match spatial.as_mut() {
                None => spatial = Some(grads),
                Some(acc) => {
                    for (a, g) in acc.iter_mut().zip(&grads) {
                        a.add_assign(g)?;
                    }
                }
            }
        }
        let mut out = spatial.expect("history >= 1");
        out.extend(temporal.params);
        out.extend(head.params);
        Ok(out)
    }

    /// MSE loss, parameter gradients and the prediction for one window.
    pub fn loss_and_grads(&self, window: &Tensor, target: &Tensor) -> Result<(f64, Vec<Tensor>, Tensor)> {
        let (pred, cache) = self.forward(window)?;
        let loss = mse_loss(&pred, target)?;
        let grads = self.backward(&cache, &mse_grad(&pred, target)?)?;
        Ok((loss, grads, pred))
    }
}
