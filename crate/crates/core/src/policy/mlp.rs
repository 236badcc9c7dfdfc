//! Fully connected layers with tanh hidden units and hand-written
//! backpropagation over whole batches.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Linear,
}

/// `y = act(x·W + b)` with `W` stored as (inputs × outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub act: Activation,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn init<R: Rng>(inputs: usize, outputs: usize, act: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let w = Array2::from_shape_fn((inputs, outputs), |_| rng.gen_range(-limit..limit));
        Self { w, b: Array1::zeros(outputs), act }
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.w) + &self.b;
        if self.act == Activation::Tanh {
            z.mapv_inplace(f64::tanh);
        }
        z
    }
}

/// Parameter gradients of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Layer outputs kept from the forward pass; `outputs[0]` is the input.
#[derive(Debug, Clone)]
pub struct Cache {
    pub outputs: Vec<Array2<f64>>,
}

impl Cache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("cache holds at least the input")
    }
}

impl Mlp {
    /// `sizes = [in, h1, …, out]`; hidden layers use tanh, the last layer `out_act`.
    pub fn init<R: Rng>(sizes: &[usize], out_act: Activation, rng: &mut R) -> Self {
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { out_act } else { Activation::Tanh };
                Dense::init(sizes[i], sizes[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    /// Layer widths, `[in, h1, …, out]`.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.inputs()).chain(self.layers.iter().map(Dense::outputs)).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Cache {
        let mut outputs = vec![x.to_owned()];
        for l in &self.layers {
            let y = l.forward(outputs.last().expect("non-empty").view());
            outputs.push(y);
        }
        Cache { outputs }
    }

    /// Gradients given `d_out = ∂L/∂output`; also returns `∂L/∂input`.
    pub fn backward(&self, cache: &Cache, d_out: Array2<f64>) -> (Vec<DenseGrad>, Array2<f64>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d = d_out;
        for (i, l) in self.layers.iter().enumerate().rev() {
            let y = &cache.outputs[i + 1];
            if l.act == Activation::Tanh {
                // tanh' = 1 − tanh²
                d.zip_mut_with(y, |g, &a| *g *= 1.0 - a * a);
            }
            let x = &cache.outputs[i];
            let gw = x.t().dot(&d);
            let gb = d.sum_axis(Axis(0));
            let dx = d.dot(&l.w.t());
            grads.push(DenseGrad { w: gw, b: gb });
            d = dx;
        }
        grads.reverse();
        (grads, d)
    }

    /// Appends parameters layer by layer: `W` row-major, then `b`.
    pub fn write_params(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
    }

    /// Reads parameters in [`Mlp::write_params`] order; returns how many were used.
    pub fn read_params(&mut self, src: &[f64]) -> usize {
        let mut k = 0;
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = src[k];
                k += 1;
            }
        }
        k
    }
}

/// Flattens gradients in the same order as [`Mlp::write_params`].
pub fn write_grads(grads: &[DenseGrad], out: &mut Vec<f64>) {
    for g in grads {
        out.extend(g.w.iter());
        out.extend(g.b.iter());
    }
}
