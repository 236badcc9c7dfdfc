//! Full-batch gradient descent with momentum.

use serde::{Deserialize, Serialize};

use super::{Dataset, Normalization, Policy, PolicyDims};
use crate::error::PolicyError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyper {
    pub hidden: usize,
    /// Chunk horizon `H`.
    pub horizon: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self { hidden: 64, horizon: 10, learning_rate: 1e-3, momentum: 0.9, epochs: 500, seed: 0 }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.hidden == 0 || self.horizon == 0 {
            return Err(PolicyError::Shape("hidden width and horizon must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(PolicyError::Shape(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(PolicyError::Shape(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub policy: Policy,
    /// Loss before each epoch's update, then the final loss.
    pub loss_curve: Vec<f64>,
}

/// Minimizes the chunk MSE. Deterministic for a given dataset and seed.
pub fn train_bc(data: &Dataset, hyper: &TrainHyper) -> Result<TrainResult, PolicyError> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(PolicyError::EmptyDataset);
    }
    let dims = PolicyDims { horizon: hyper.horizon, hidden: hyper.hidden };
    let mut policy = Policy::init(dims, Normalization::fit(data), hyper.seed);
    let batch = policy.make_batch(data)?;
    let mut params = policy.params();
    let mut velocity = vec![0.0; params.len()];
    let mut loss_curve = Vec::with_capacity(hyper.epochs + 1);
    for epoch in 0..hyper.epochs {
        let (loss, grad) = policy.loss_and_grad(&batch);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(PolicyError::Diverged { epoch, loss });
        }
        loss_curve.push(loss);
        for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
            *v = hyper.momentum * *v - hyper.learning_rate * g;
            *p += *v;
        }
        policy.set_params(&params)?;
    }
    let final_loss = policy.loss(&batch);
    if !final_loss.is_finite() {
        return Err(PolicyError::Diverged { epoch: hyper.epochs, loss: final_loss });
    }
    loss_curve.push(final_loss);
    Ok(TrainResult { policy, loss_curve })
}
