//! Multi-head graph attention.
//!
//! For head `h`, with `z = x · W_h`:
//!
//! ```text
//! e_ij  = leaky_relu(a_src · z_i + a_dst · z_j)      j ∈ N(i) ∪ {i}
//! α_ij  = softmax_j(e_ij)
//! out_i = elu(Σ_j α_ij z_j)
//! ```
//!
//! and the head outputs are concatenated. `N(i)` are the sources of edges
//! pointing into `i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{matmul, matmul_nt, matmul_tn, Layer, LayerGrads, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatLayer {
    pub heads: usize,
    pub head_dim: usize,
    /// `[in × heads·head_dim]`, head `h` owns columns `h·head_dim..`.
    pub weight: Tensor,
    /// `[heads × 2·head_dim]`: source half then destination half.
    pub attention: Tensor,
    pub slope: f64,
    /// Sorted in-neighbourhood of each node, self included.
    pub neighborhoods: Vec<Vec<usize>>,
}

pub struct GatCache {
    x: Tensor,
    z: Tensor,
    /// `[head][node][k]` attention pre-activations, aligned with `neighborhoods`.
    scores: Vec<Vec<Vec<f64>>>,
    alpha: Vec<Vec<Vec<f64>>>,
    mixed: Tensor,
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

impl GatLayer {
    pub fn new(
        weight: Tensor,
        attention: Tensor,
        heads: usize,
        slope: f64,
        neighborhoods: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if heads == 0 || weight.cols() % heads != 0 {
            return Err(Error::dim(format!(
                "weight {:?} cannot be split into {heads} heads",
                weight.shape()
            )));
        }
        let head_dim = weight.cols() / heads;
        if attention.shape() != [heads, 2 * head_dim] {
            return Err(Error::dim(format!(
                "attention {:?} should be [{heads}, {}]",
                attention.shape(),
                2 * head_dim
            )));
        }
        for (i, nbrs) in neighborhoods.iter().enumerate() {
            if !nbrs.contains(&i) {
                return Err(Error::invalid(format!("node {i} has no self-loop")));
            }
        }
        Ok(Self {
            heads,
            head_dim,
            weight,
            attention,
            slope,
            neighborhoods,
        })
    }

    fn leaky(&self, v: f64) -> f64 {
        if v > 0.0 {
            v
        } else {
            self.slope * v
        }
    }

    /// Attention coefficients `[head][node][k]` for input `x`, aligned with
    /// each node's neighbourhood list.
    pub fn attention_coefficients(&self, x: &Tensor) -> Result<Vec<Vec<Vec<f64>>>> {
        Ok(self.forward(x)?.1.alpha)
    }
}

impl Layer for GatLayer {
    type Cache = GatCache;

    fn forward(&self, x: &Tensor) -> Result<(Tensor, GatCache)> {
        let n = self.neighborhoods.len();
        if x.rows() != n {
            return Err(Error::dim(format!(
                "input has {} rows for a {n}-node graph",
                x.rows()
            )));
        }
        let z = matmul(x, &self.weight)?;
        let (fh, width) = (self.head_dim, self.weight.cols());
        let mut mixed = Tensor::zeros(&[n, width]);
        let mut scores = Vec::with_capacity(self.heads);
        let mut alphas = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let o = h * fh;
            let a = self.attention.row(h);
            let (a_src, a_dst) = a.split_at(fh);
            let proj = |v: &[f64], i: usize| -> f64 {
                z.row(i)[o..o + fh].iter().zip(v).map(|(p, q)| p * q).sum()
            };
            let src: Vec<f64> = (0..n).map(|i| proj(a_src, i)).collect();
            let dst: Vec<f64> = (0..n).map(|j| proj(a_dst, j)).collect();
            let mut head_scores = Vec::with_capacity(n);
            let mut head_alpha = Vec::with_capacity(n);
            for (i, nbrs) in self.neighborhoods.iter().enumerate() {
                let pre: Vec<f64> = nbrs.iter().map(|&j| src[i] + dst[j]).collect();
                let e: Vec<f64> = pre.iter().map(|&v| self.leaky(v)).collect();
                let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = e.iter().map(|v| (v - max).exp()).collect();
                let total: f64 = exps.iter().sum();
                let alpha: Vec<f64> = exps.iter().map(|v| v / total).collect();
                let out = &mut mixed.data_mut()[i * width + o..i * width + o + fh];
                for (&j, &w) in nbrs.iter().zip(&alpha) {
                    for (dst, &src) in out.iter_mut().zip(&z.row(j)[o..o + fh]) {
                        *dst += w * src;
                    }
                }
                head_scores.push(pre);
                head_alpha.push(alpha);
            }
            scores.push(head_scores);
            alphas.push(head_alpha);
        }
        let out = mixed.map(elu);
        Ok((
            out,
            GatCache {
                x: x.clone(),
                z,
                scores,
                alpha: alphas,
                mixed,
            },
        ))
    }

    fn backward(&self, cache: &GatCache, grad_out: &Tensor) -> Result<LayerGrads> {
        grad_out.expect_same_shape(&cache.mixed)?;
        let n = self.neighborhoods.len();
        let (fh, width) = (self.head_dim, self.weight.cols());
        let mut g_mixed = grad_out.clone();
        for (g, &m) in g_mixed.data_mut().iter_mut().zip(cache.mixed.data()) {
            *g *= elu_grad(m);
        }
        let z = &cache.z;
        let mut g_z = Tensor::zeros(&[n, width]);
        let mut g_att = Tensor::zeros(&[self.heads, 2 * fh]);
        for h in 0..self.heads {
            let o = h * fh;
            let mut g_src = vec![0.0; n];
            let mut g_dst = vec![0.0; n];
            for (i, nbrs) in self.neighborhoods.iter().enumerate() {
                let alpha = &cache.alpha[h][i];
                let pre = &cache.scores[h][i];
                let gu = &g_mixed.row(i)[o..o + fh];
                let g_alpha: Vec<f64> = nbrs
                    .iter()
                    .map(|&j| gu.iter().zip(&z.row(j)[o..o + fh]).map(|(a, b)| a * b).sum())
                    .collect();
                for (&j, &w) in nbrs.iter().zip(alpha) {
                    let row = &mut g_z.data_mut()[j * width + o..j * width + o + fh];
                    for (dst, &g) in row.iter_mut().zip(gu) {
                        *dst += w * g;
                    }
                }
                let weighted: f64 = alpha.iter().zip(&g_alpha).map(|(a, g)| a * g).sum();
                for (k, &j) in nbrs.iter().enumerate() {
                    let g_e = alpha[k] * (g_alpha[k] - weighted);
                    let g_pre = if pre[k] > 0.0 { g_e } else { self.slope * g_e };
                    g_src[i] += g_pre;
                    g_dst[j] += g_pre;
                }
            }
            let a = self.attention.row(h).to_vec();
            let (a_src, a_dst) = a.split_at(fh);
            for i in 0..n {
                let zi = z.row(i)[o..o + fh].to_vec();
                let ga = g_att.data_mut();
                for f in 0..fh {
                    ga[h * 2 * fh + f] += g_src[i] * zi[f];
                    ga[h * 2 * fh + fh + f] += g_dst[i] * zi[f];
                }
                let row = &mut g_z.data_mut()[i * width + o..i * width + o + fh];
                for f in 0..fh {
                    row[f] += g_src[i] * a_src[f] + g_dst[i] * a_dst[f];
                }
            }
        }
        Ok(LayerGrads {
            params: vec![matmul_tn(&cache.x, &g_z)?, g_att],
            input: matmul_nt(&g_z, &self.weight)?,
        })
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.weight, &self.attention]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.attention]
    }
}
