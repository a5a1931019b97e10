use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tensor::{elementwise, matmul, matmul_nt, matmul_tn, ElementwiseOp, Layer, LayerGrads, Tensor};

/// Fully-connected layer `y = x · W + b` over a batch of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn new(weight: Tensor, bias: Tensor) -> Self {
        Self { weight, bias }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }
}

impl Layer for Dense {
    type Cache = Tensor;

    fn forward(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let y = elementwise(ElementwiseOp::Add, &matmul(x, &self.weight)?, Some(&self.bias))?;
        Ok((y, x.clone()))
    }

    fn backward(&self, x: &Tensor, grad_out: &Tensor) -> Result<LayerGrads> {
        Ok(LayerGrads {
            params: vec![matmul_tn(x, grad_out)?, grad_out.sum_rows()?],
            input: matmul_nt(grad_out, &self.weight)?,
        })
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}
