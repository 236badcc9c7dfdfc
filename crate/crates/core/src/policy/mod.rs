//! Behavior cloning with action chunking.
//!
//! Two tanh encoders (tactile change and end-effector position) feed a
//! concatenated feature into a decoder that predicts `H` future
//! displacements at once. Inputs are standardized per component; targets
//! are divided by their per-axis RMS so that millimeter-scale actions give
//! order-one regression targets.

pub mod dataset;
pub mod expert;
pub mod io;
pub mod mlp;
pub mod rollout;
pub mod train;

use ndarray::{concatenate, s, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use dataset::{ActionChunk, Dataset, Observation, Transition};
pub use expert::{collect_demos, scripted_expert, ExpertConfig, ExpertMode, StateView};
pub use rollout::{rollout, RolloutConfig};
pub use train::{train_bc, TrainHyper, TrainResult};

use crate::error::PolicyError;
use crate::vec3::Vec3;
use mlp::{write_grads, Activation, Mlp};

/// Smallest standard deviation or RMS used as a divisor.
const MIN_SCALE: f64 = 1e-9;

/// Per-component input standardization and per-axis action scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub tactile_mean: [f64; 3],
    pub tactile_std: [f64; 3],
    pub proprio_mean: [f64; 3],
    pub proprio_std: [f64; 3],
    /// RMS of demonstrated displacements per axis (m).
    pub action_scale: [f64; 3],
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            tactile_mean: [0.0; 3],
            tactile_std: [1.0; 3],
            proprio_mean: [0.0; 3],
            proprio_std: [1.0; 3],
            action_scale: [1.0; 3],
        }
    }
}

/// Zero-variance components fall back to a unit scale.
fn floor_scale(v: f64) -> f64 {
    if v.is_finite() && v > MIN_SCALE {
        v
    } else {
        1.0
    }
}

impl Normalization {
    pub fn fit(data: &Dataset) -> Self {
        let n = data.len().max(1) as f64;
        let mut out = Self::default();
        let stats = |get: &dyn Fn(&Transition) -> Vec3| {
            let mut mean = [0.0; 3];
            for t in &data.transitions {
                let v = get(t).to_array();
                for k in 0..3 {
                    mean[k] += v[k] / n;
                }
            }
            let mut var = [0.0; 3];
            for t in &data.transitions {
                let v = get(t).to_array();
                for k in 0..3 {
                    var[k] += (v[k] - mean[k]).powi(2) / n;
                }
            }
            (mean, var.map(|v| floor_scale(v.sqrt())))
        };
        (out.tactile_mean, out.tactile_std) = stats(&|t| t.obs.tactile_delta);
        (out.proprio_mean, out.proprio_std) = stats(&|t| t.obs.ee_position);
        let mut sq = [0.0; 3];
        let mut count = 0.0_f64;
        for t in &data.transitions {
            for d in &t.chunk.deltas {
                let a = d.to_array();
                for k in 0..3 {
                    sq[k] += a[k] * a[k];
                }
                count += 1.0;
            }
        }
        out.action_scale = sq.map(|s| floor_scale((s / count.max(1.0)).sqrt()));
        out
    }

    pub fn is_valid(&self) -> bool {
        let all = [self.tactile_std, self.proprio_std, self.action_scale];
        all.iter().flatten().all(|v| v.is_finite() && *v > 0.0)
            && self.tactile_mean.iter().chain(&self.proprio_mean).all(|v| v.is_finite())
    }

    pub fn normalize_tactile(&self, f: Vec3) -> [f64; 3] {
        let a = f.to_array();
        std::array::from_fn(|k| (a[k] - self.tactile_mean[k]) / self.tactile_std[k])
    }

    pub fn normalize_proprio(&self, p: Vec3) -> [f64; 3] {
        let a = p.to_array();
        std::array::from_fn(|k| (a[k] - self.proprio_mean[k]) / self.proprio_std[k])
    }

    pub fn denormalize_tactile(&self, z: [f64; 3]) -> Vec3 {
        Vec3::from_array(std::array::from_fn(|k| z[k] * self.tactile_std[k] + self.tactile_mean[k]))
    }

    pub fn denormalize_proprio(&self, z: [f64; 3]) -> Vec3 {
        Vec3::from_array(std::array::from_fn(|k| z[k] * self.proprio_std[k] + self.proprio_mean[k]))
    }

    pub fn normalize_action(&self, d: Vec3) -> [f64; 3] {
        let a = d.to_array();
        std::array::from_fn(|k| a[k] / self.action_scale[k])
    }

    pub fn denormalize_action(&self, z: [f64; 3]) -> Vec3 {
        Vec3::from_array(std::array::from_fn(|k| z[k] * self.action_scale[k]))
    }
}

/// Network sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDims {
    /// Chunk horizon `H`.
    pub horizon: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub dims: PolicyDims,
    pub tactile: Mlp,
    pub proprio: Mlp,
    pub decoder: Mlp,
    pub norm: Normalization,
}

/// Dataset as normalized matrices, one row per transition.
#[derive(Debug, Clone)]
pub struct Batch {
    pub tactile: Array2<f64>,
    pub proprio: Array2<f64>,
    pub target: Array2<f64>,
}

impl Policy {
    /// Seeded initialization: encoders `3 → h → h`, decoder `2h → h → 3H`.
    pub fn init(dims: PolicyDims, norm: Normalization, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = dims.hidden;
        let tactile = Mlp::init(&[3, h, h], Activation::Tanh, &mut rng);
        let proprio = Mlp::init(&[3, h, h], Activation::Tanh, &mut rng);
        let decoder = Mlp::init(&[2 * h, h, 3 * dims.horizon], Activation::Linear, &mut rng);
        Self { dims, tactile, proprio, decoder, norm }
    }

    /// Checks layer shapes against `dims` and that all values are finite.
    pub fn validate(&self) -> Result<(), PolicyError> {
        let h = self.dims.hidden;
        let want = [
            ("tactile encoder", self.tactile.sizes(), vec![3, h, h]),
            ("proprio encoder", self.proprio.sizes(), vec![3, h, h]),
            ("decoder", self.decoder.sizes(), vec![2 * h, h, 3 * self.dims.horizon]),
        ];
        for (name, got, expected) in want {
            if got != expected {
                return Err(PolicyError::Shape(format!("{name} has sizes {got:?}, expected {expected:?}")));
            }
        }
        if self.dims.horizon == 0 || h == 0 {
            return Err(PolicyError::Shape("horizon and hidden width must be >= 1".into()));
        }
        if !self.norm.is_valid() {
            return Err(PolicyError::Shape("normalization scales must be finite and > 0".into()));
        }
        if !self.params().iter().all(|v| v.is_finite()) {
            return Err(PolicyError::Shape("non-finite weight".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.tactile.param_count() + self.proprio.param_count() + self.decoder.param_count()
    }

    /// All weights: tactile encoder, proprio encoder, decoder.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.tactile.write_params(&mut out);
        self.proprio.write_params(&mut out);
        self.decoder.write_params(&mut out);
        out
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<(), PolicyError> {
        if p.len() != self.param_count() {
            return Err(PolicyError::Shape(format!("{} weights given, {} expected", p.len(), self.param_count())));
        }
        let mut k = self.tactile.read_params(p);
        k += self.proprio.read_params(&p[k..]);
        self.decoder.read_params(&p[k..]);
        Ok(())
    }

    pub fn make_batch(&self, data: &Dataset) -> Result<Batch, PolicyError> {
        if data.is_empty() {
            return Err(PolicyError::EmptyDataset);
        }
        if data.horizon != self.dims.horizon {
            return Err(PolicyError::Shape(format!(
                "dataset horizon {} differs from policy horizon {}",
                data.horizon, self.dims.horizon
            )));
        }
        let n = data.len();
        let mut tactile = Array2::zeros((n, 3));
        let mut proprio = Array2::zeros((n, 3));
        let mut target = Array2::zeros((n, 3 * self.dims.horizon));
        for (i, t) in data.transitions.iter().enumerate() {
            let a = self.norm.normalize_tactile(t.obs.tactile_delta);
            let b = self.norm.normalize_proprio(t.obs.ee_position);
            for k in 0..3 {
                tactile[[i, k]] = a[k];
                proprio[[i, k]] = b[k];
            }
            for (j, d) in t.chunk.deltas.iter().enumerate() {
                let z = self.norm.normalize_action(*d);
                for k in 0..3 {
                    target[[i, 3 * j + k]] = z[k];
                }
            }
        }
        Ok(Batch { tactile, proprio, target })
    }

    fn forward_batch(&self, tactile: &Array2<f64>, proprio: &Array2<f64>) -> (mlp::Cache, mlp::Cache, mlp::Cache) {
        let ct = self.tactile.forward(tactile.view());
        let cp = self.proprio.forward(proprio.view());
        let feat = concatenate(Axis(1), &[ct.output().view(), cp.output().view()]).expect("same row count");
        let cd = self.decoder.forward(feat.view());
        (ct, cp, cd)
    }

    /// Mean squared error over all samples and outputs, in normalized units.
    pub fn loss(&self, batch: &Batch) -> f64 {
        let (_, _, cd) = self.forward_batch(&batch.tactile, &batch.proprio);
        let diff = cd.output() - &batch.target;
        diff.mapv(|v| v * v).mean().unwrap_or(0.0)
    }

    /// Loss and its gradient with respect to [`Policy::params`].
    pub fn loss_and_grad(&self, batch: &Batch) -> (f64, Vec<f64>) {
        let (ct, cp, cd) = self.forward_batch(&batch.tactile, &batch.proprio);
        let diff = cd.output() - &batch.target;
        let count = diff.len() as f64;
        let loss = diff.mapv(|v| v * v).sum() / count;
        let d_out = diff.mapv(|v| 2.0 * v / count);
        let (g_dec, d_feat) = self.decoder.backward(&cd, d_out);
        let h = self.dims.hidden;
        let (g_t, _) = self.tactile.backward(&ct, d_feat.slice(s![.., ..h]).to_owned());
        let (g_p, _) = self.proprio.backward(&cp, d_feat.slice(s![.., h..]).to_owned());
        let mut grad = Vec::with_capacity(self.param_count());
        write_grads(&g_t, &mut grad);
        write_grads(&g_p, &mut grad);
        write_grads(&g_dec, &mut grad);
        (loss, grad)
    }

    /// Predicted displacements for one observation (m).
    pub fn predict(&self, obs: &Observation) -> ActionChunk {
        let t = Array2::from_shape_vec((1, 3), self.norm.normalize_tactile(obs.tactile_delta).to_vec()).expect("1x3");
        let p = Array2::from_shape_vec((1, 3), self.norm.normalize_proprio(obs.ee_position).to_vec()).expect("1x3");
        let (_, _, cd) = self.forward_batch(&t, &p);
        let out = cd.output();
        let deltas = (0..self.dims.horizon)
            .map(|j| self.norm.denormalize_action([out[[0, 3 * j]], out[[0, 3 * j + 1]], out[[0, 3 * j + 2]]]))
            .collect();
        ActionChunk { deltas }
    }
}
