//! The spatio-temporal forecasting network and its layers.

mod dense;
mod gat;
mod gcn;
mod loss;
mod lstm;
mod stgt;

pub use dense::Dense;
pub use gat::{GatCache, GatLayer};
pub use gcn::{GcnCache, GcnLayer};
pub use loss::{mse_grad, mse_loss};
pub use lstm::{LstmLayer, LstmLayerCache, LstmStack, LstmStackCache};
pub use stgt::{ForwardCache, Mode, ModelConfig, ParamSpec, Spatial, StgtModel};
