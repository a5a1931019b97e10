//! Stacked LSTM with forget gates, backpropagated through time by hand.
//!
//! Gate pre-activations are packed as `[i | f | g | o]` blocks of width
//! `hidden`:
//!
//! ```text
//! c_t = σ(f) ⊙ c_{t-1} + σ(i) ⊙ tanh(g)
//! h_t = σ(o) ⊙ tanh(c_t)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{matmul, matmul_nt, matmul_tn, sigmoid, Layer, LayerGrads, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    /// `[input × 4·hidden]`
    pub w_ih: Tensor,
    /// `[hidden × 4·hidden]`
    pub w_hh: Tensor,
    /// `[4·hidden]`
    pub bias: Tensor,
}

struct StepCache {
    x: Tensor,
    h_prev: Tensor,
    c_prev: Tensor,
    /// Post-activation gates `[batch × 4·hidden]`.
    gates: Tensor,
    tanh_c: Tensor,
}

pub struct LstmLayerCache {
    steps: Vec<StepCache>,
}

impl LstmLayer {
    pub fn new(w_ih: Tensor, w_hh: Tensor, bias: Tensor) -> Result<Self> {
        let h = w_hh.rows();
        if w_hh.shape() != [h, 4 * h] || w_ih.cols() != 4 * h || bias.shape() != [4 * h] {
            return Err(Error::dim(format!(
                "inconsistent LSTM shapes w_ih {:?}, w_hh {:?}, bias {:?}",
                w_ih.shape(),
                w_hh.shape(),
                bias.shape()
            )));
        }
        Ok(Self { w_ih, w_hh, bias })
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.rows()
    }

    /// Runs the sequence from zero state, returning every hidden state.
    pub fn forward_seq(&self, xs: &[Tensor]) -> Result<(Vec<Tensor>, LstmLayerCache)> {
        let hd = self.hidden();
        let batch = xs.first().ok_or_else(|| Error::invalid("empty sequence"))?.rows();
        let mut h = Tensor::zeros(&[batch, hd]);
        let mut c = Tensor::zeros(&[batch, hd]);
        let mut hs = Vec::with_capacity(xs.len());
        let mut steps = Vec::with_capacity(xs.len());
        for x in xs {
            if x.shape() != [batch, self.input_dim()] {
                return Err(Error::dim(format!(
                    "LSTM step input {:?}, expected [{batch}, {}]",
                    x.shape(),
                    self.input_dim()
                )));
            }
            let mut gates = matmul(x, &self.w_ih)?;
            gates.add_assign(&matmul(&h, &self.w_hh)?)?;
            let mut c_new = Tensor::zeros(&[batch, hd]);
            let mut tanh_c = Tensor::zeros(&[batch, hd]);
            let mut h_new = Tensor::zeros(&[batch, hd]);
            let bias = self.bias.data();
            for b in 0..batch {
                let g = &mut gates.data_mut()[b * 4 * hd..(b + 1) * 4 * hd];
                for (k, v) in g.iter_mut().enumerate() {
                    *v += bias[k];
                    *v = if (2 * hd..3 * hd).contains(&k) { v.tanh() } else { sigmoid(*v) };
                }
                for u in 0..hd {
                    let (ig, fg, gg, og) = (g[u], g[hd + u], g[2 * hd + u], g[3 * hd + u]);
                    let cv = fg * c.at(b, u) + ig * gg;
                    let tc = cv.tanh();
                    c_new.set(b, u, cv);
                    tanh_c.set(b, u, tc);
                    h_new.set(b, u, og * tc);
                }
            }
            steps.push(StepCache {
                x: x.clone(),
                h_prev: h,
                c_prev: c,
                gates,
                tanh_c,
            });
            h = h_new;
            c = c_new;
            hs.push(h.clone());
        }
        Ok((hs, LstmLayerCache { steps }))
    }

    /// Given the loss gradient with respect to every emitted hidden state,
    /// returns `[d w_ih, d w_hh, d bias]` and the gradient for every input.
    pub fn backward_seq(
        &self,
        cache: &LstmLayerCache,
        grad_hs: &[Tensor],
    ) -> Result<(Vec<Tensor>, Vec<Tensor>)> {
        if grad_hs.len() != cache.steps.len() {
            return Err(Error::dim("gradient sequence length differs from forward"));
        }
        let hd = self.hidden();
        let batch = cache.steps[0].x.rows();
        let mut g_wih = Tensor::zeros(self.w_ih.shape());
        let mut g_whh = Tensor::zeros(self.w_hh.shape());
        let mut g_bias = Tensor::zeros(self.bias.shape());
        let mut g_xs = vec![Tensor::zeros(&[1]); cache.steps.len()];
        let mut dh_next = Tensor::zeros(&[batch, hd]);
        let mut dc_next = Tensor::zeros(&[batch, hd]);
        for (t, step) in cache.steps.iter().enumerate().rev() {
            let mut dz = Tensor::zeros(&[batch, 4 * hd]);
            let mut dc_prev = Tensor::zeros(&[batch, hd]);
            for b in 0..batch {
                let g = &step.gates.data()[b * 4 * hd..(b + 1) * 4 * hd];
                let d = &mut dz.data_mut()[b * 4 * hd..(b + 1) * 4 * hd];
                for u in 0..hd {
                    let (ig, fg, gg, og) = (g[u], g[hd + u], g[2 * hd + u], g[3 * hd + u]);
                    let tc = step.tanh_c.at(b, u);
                    let dh = grad_hs[t].at(b, u) + dh_next.at(b, u);
                    let dc = dh * og * (1.0 - tc * tc) + dc_next.at(b, u);
                    d[u] = dc * gg * ig * (1.0 - ig);
                    d[hd + u] = dc * step.c_prev.at(b, u) * fg * (1.0 - fg);
                    d[2 * hd + u] = dc * ig * (1.0 - gg * gg);
                    d[3 * hd + u] = dh * tc * og * (1.0 - og);
                    dc_prev.set(b, u, dc * fg);
                }
            }
            g_wih.add_assign(&matmul_tn(&step.x, &dz)?)?;
            g_whh.add_assign(&matmul_tn(&step.h_prev, &dz)?)?;
            g_bias.add_assign(&dz.sum_rows()?)?;
            g_xs[t] = matmul_nt(&dz, &self.w_ih)?;
            dh_next = matmul_nt(&dz, &self.w_hh)?;
            dc_next = dc_prev;
        }
        Ok((vec![g_wih, g_whh, g_bias], g_xs))
    }
}

/// Stacked LSTM consuming `[steps × batch × input]` and emitting the last
/// layer's final hidden state `[batch × hidden]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmStack {
    pub layers: Vec<LstmLayer>,
}

pub struct LstmStackCache {
    layers: Vec<LstmLayerCache>,
    steps: usize,
    batch: usize,
    input_dim: usize,
}

impl LstmStack {
    pub fn new(layers: Vec<LstmLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("LSTM stack needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[1].input_dim() != pair[0].hidden() {
                return Err(Error::dim("stacked LSTM layer widths do not chain"));
            }
        }
        Ok(Self { layers })
    }

    pub fn hidden(&self) -> usize {
        self.layers.last().expect("non-empty stack").hidden()
    }
}

fn split_steps(seq: &Tensor) -> Result<Vec<Tensor>> {
    seq.expect_rank(3)?;
    let (t, b, d) = (seq.shape()[0], seq.shape()[1], seq.shape()[2]);
    seq.data()
        .chunks_exact(b * d)
        .take(t)
        .map(|c| Tensor::new(vec![b, d], c.to_vec()))
        .collect()
}

impl Layer for LstmStack {
    type Cache = LstmStackCache;

    fn forward(&self, seq: &Tensor) -> Result<(Tensor, LstmStackCache)> {
        let mut xs = split_steps(seq)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (hs, cache) = layer.forward_seq(&xs)?;
            caches.push(cache);
            xs = hs;
        }
        let out = xs.pop().expect("sequence is non-empty");
        Ok((
            out,
            LstmStackCache {
                layers: caches,
                steps: seq.shape()[0],
                batch: seq.shape()[1],
                input_dim: seq.shape()[2],
            },
        ))
    }

    fn backward(&self, cache: &LstmStackCache, grad_out: &Tensor) -> Result<LayerGrads> {
        let mut grad_hs = vec![Tensor::zeros(&[cache.batch, self.hidden()]); cache.steps];
        *grad_hs.last_mut().expect("non-empty") = grad_out.clone();
        let mut per_layer = Vec::with_capacity(self.layers.len());
        for (layer, lc) in self.layers.iter().zip(&cache.layers).rev() {
            let (grads, g_xs) = layer.backward_seq(lc, &grad_hs)?;
            per_layer.push(grads);
            grad_hs = g_xs;
        }
        per_layer.reverse();
        let input = Tensor::new(
            vec![cache.steps, cache.batch, cache.input_dim],
            grad_hs.into_iter().flat_map(Tensor::into_data).collect(),
        )?;
        Ok(LayerGrads {
            params: per_layer.into_iter().flatten().collect(),
            input,
        })
    }

    fn params(&self) -> Vec<&Tensor> {
        self.layers
            .iter()
            .flat_map(|l| [&l.w_ih, &l.w_hh, &l.bias])
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.w_ih, &mut l.w_hh, &mut l.bias])
            .collect()
    }
}
