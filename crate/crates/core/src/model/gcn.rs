use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{elementwise, matmul, matmul_nt, matmul_tn, ElementwiseOp, Layer, LayerGrads, Tensor};

/// Graph convolution `relu(P · X · W + b)` with a fixed propagation matrix `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnLayer {
    pub weight: Tensor,
    pub bias: Tensor,
    pub propagation: Tensor,
}

pub struct GcnCache {
    mixed: Tensor,
    pre: Tensor,
}

impl GcnLayer {
    pub fn new(weight: Tensor, bias: Tensor, propagation: Tensor) -> Result<Self> {
        let n = propagation.rows();
        if propagation.shape() != [n, n] {
            return Err(Error::dim(format!(
                "propagation must be square, got {:?}",
                propagation.shape()
            )));
        }
        if bias.shape() != [weight.cols()] {
            return Err(Error::dim(format!(
                "bias {:?} does not match weight {:?}",
                bias.shape(),
                weight.shape()
            )));
        }
        Ok(Self {
            weight,
            bias,
            propagation,
        })
    }
}

impl Layer for GcnLayer {
    type Cache = GcnCache;

    fn forward(&self, x: &Tensor) -> Result<(Tensor, GcnCache)> {
        let mixed = matmul(&self.propagation, x)?;
        let pre = elementwise(ElementwiseOp::Add, &matmul(&mixed, &self.weight)?, Some(&self.bias))?;
        let out = elementwise(ElementwiseOp::Relu, &pre, None)?;
        Ok((out, GcnCache { mixed, pre }))
    }

    fn backward(&self, cache: &GcnCache, grad_out: &Tensor) -> Result<LayerGrads> {
        grad_out.expect_same_shape(&cache.pre)?;
        let mut g_pre = grad_out.clone();
        for (g, &p) in g_pre.data_mut().iter_mut().zip(cache.pre.data()) {
            if p <= 0.0 {
                *g = 0.0;
            }
        }
        let g_mixed = matmul_nt(&g_pre, &self.weight)?;
        Ok(LayerGrads {
            params: vec![matmul_tn(&cache.mixed, &g_pre)?, g_pre.sum_rows()?],
            input: matmul_tn(&self.propagation, &g_mixed)?,
        })
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}
