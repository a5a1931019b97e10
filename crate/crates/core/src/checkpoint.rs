//! JSON checkpoint: everything needed to rebuild a trained forecaster.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Normalizer;
use crate::error::{Error, Result};
use crate::graph::{Edge, SensorGraph};
use crate::model::{ModelConfig, StgtModel};
use crate::sparse::SparseState;
use crate::tensor::Tensor;

pub const FORMAT: &str = "stgt-checkpoint";
pub const VERSION: u32 = 1;

/// A trained model together with its graph and input scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: StgtModel,
    pub graph: SensorGraph,
    pub normalizer: Normalizer,
    pub step_minutes: i64,
    pub sparse: Option<SparseState>,
}

#[derive(Serialize, Deserialize)]
struct ParamRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    node_ids: Vec<String>,
    edges: Vec<Edge>,
    omega: f64,
}

#[derive(Serialize, Deserialize)]
struct SparseRecord {
    sparsity: f64,
    drop_rate: f64,
    update_freq: usize,
    iteration: usize,
}

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    mode: String,
    config: ModelConfig,
    step_minutes: i64,
    graph: GraphRecord,
    normalizer: Normalizer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sparse: Option<SparseRecord>,
    params: Vec<ParamRecord>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let specs = self.model.param_specs();
        let params = specs
            .iter()
            .zip(self.model.params())
            .enumerate()
            .map(|(i, (spec, p))| ParamRecord {
                name: spec.name.clone(),
                shape: p.shape().to_vec(),
                data: p.data().to_vec(),
                mask: self
                    .sparse
                    .as_ref()
                    .and_then(|s| s.mask_for_param(i))
                    .map(|m| m.data().to_vec()),
            })
            .collect();
        let doc = Document {
            format: FORMAT.into(),
            version: VERSION,
            mode: self.model.mode().label().into(),
            config: self.model.config.clone(),
            step_minutes: self.step_minutes,
            graph: GraphRecord {
                node_ids: self.graph.node_ids().to_vec(),
                edges: self.graph.edges().to_vec(),
                omega: self.graph.omega(),
            },
            normalizer: self.normalizer.clone(),
            sparse: self.sparse.as_ref().map(|s| SparseRecord {
                sparsity: s.sparsity,
                drop_rate: s.drop_rate,
                update_freq: s.update_freq,
                iteration: s.iteration,
            }),
            params,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(text)?;
        if doc.format != FORMAT {
            return Err(Error::data(format!("not a checkpoint (format '{}')", doc.format)));
        }
        if doc.version != VERSION {
            return Err(Error::data(format!("unsupported checkpoint version {}", doc.version)));
        }
        let graph = SensorGraph::from_parts(doc.graph.node_ids, doc.graph.edges, doc.graph.omega)?;
        let mut model = StgtModel::new(doc.config, &graph, 0)?;
        let specs = model.param_specs();
        if specs.len() != doc.params.len() {
            return Err(Error::data(format!(
                "checkpoint has {} parameters, model needs {}",
                doc.params.len(),
                specs.len()
            )));
        }
        let mut masks = Vec::new();
        let mut param_indices = Vec::new();
        for (i, ((slot, spec), rec)) in model
            .params_mut()
            .into_iter()
            .zip(&specs)
            .zip(doc.params)
            .enumerate()
        {
            if rec.name != spec.name || rec.shape != spec.shape {
                return Err(Error::data(format!(
                    "parameter {i}: expected {} {:?}, found {} {:?}",
                    spec.name, spec.shape, rec.name, rec.shape
                )));
            }
            *slot = Tensor::new(rec.shape.clone(), rec.data)?;
            if let Some(m) = rec.mask {
                masks.push(Tensor::new(rec.shape, m)?);
                param_indices.push(i);
            }
        }
        let sparse = match doc.sparse {
            Some(s) => {
                let active_counts = masks.iter().map(Tensor::count_nonzero).collect();
                Some(SparseState {
                    masks,
                    param_indices,
                    sparsity: s.sparsity,
                    drop_rate: s.drop_rate,
                    update_freq: s.update_freq,
                    iteration: s.iteration,
                    active_counts,
                })
            }
            None => None,
        };
        Ok(Self {
            model,
            graph,
            normalizer: doc.normalizer,
            step_minutes: doc.step_minutes,
            sparse,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
