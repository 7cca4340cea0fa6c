use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FlowError, FlowModel};
use crate::molgraph::GraphTensors;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { epochs: 5, lr: 1e-3, batch: 16, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch: usize,
    /// Mean training NLL of the epoch in bits per dimension.
    pub nll_bits_per_dim: f64,
    /// Mean L2 norm of the batch gradients.
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Adam with bias correction.
struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

pub fn train(
    model: &FlowModel,
    dataset: &[GraphTensors],
    opts: &TrainOptions,
) -> Result<(FlowModel, Vec<TrainReport>), TrainError> {
    train_with_progress(model, dataset, opts, |_| {})
}

/// Minibatch maximum likelihood with fresh dequantization noise per epoch.
/// Deterministic given `opts.seed`.
pub fn train_with_progress(
    model: &FlowModel,
    dataset: &[GraphTensors],
    opts: &TrainOptions,
    mut on_epoch: impl FnMut(&TrainReport),
) -> Result<(FlowModel, Vec<TrainReport>), TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if opts.lr.is_nan() || opts.lr <= 0.0 || opts.batch == 0 {
        return Err(TrainError::Hyperparameter(format!("lr={} batch={}", opts.lr, opts.batch)));
    }
    let mut model = model.clone();
    let mut reports = Vec::with_capacity(opts.epochs);
    if opts.epochs == 0 {
        return Ok((model, reports));
    }
    let mut params = model.flat_parameters();
    let mut adam = Adam::new(params.len(), opts.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let per_dim = model.dim() as f64 * std::f64::consts::LN_2;
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut nll_sum = 0.0;
        let mut norm_sum = 0.0;
        let batches: Vec<&[usize]> = order.chunks(opts.batch).collect();
        for (b, idx) in batches.iter().enumerate() {
            let mut grads = model.zeros_like();
            let mut batch_nll = 0.0;
            for &i in *idx {
                let noise_seed: u64 = rng.random();
                let x = model.dequantize(&dataset[i], false, noise_seed);
                batch_nll += model.accumulate_gradient(&x, &dataset[i].bonds, &mut grads)?;
            }
            if !batch_nll.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b });
            }
            let scale = 1.0 / idx.len() as f64;
            let grad: Vec<f64> = grads.flat_parameters().into_iter().map(|g| g * scale).collect();
            norm_sum += grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            nll_sum += batch_nll;
            adam.update(&mut params, &grad);
            model.set_flat_parameters(&params);
        }
        let report = TrainReport {
            epoch,
            nll_bits_per_dim: nll_sum / dataset.len() as f64 / per_dim,
            grad_norm: norm_sum / batches.len() as f64,
        };
        on_epoch(&report);
        reports.push(report);
    }
    Ok((model, reports))
}

/// Mean bits per dimension over a dataset under deterministic dequantization.
pub fn mean_bits_per_dim(model: &FlowModel, dataset: &[GraphTensors]) -> Result<f64, FlowError> {
    let mut total = 0.0;
    for t in dataset {
        total += model.bits_per_dim(model.log_likelihood(t, true, 0)?);
    }
    Ok(total / dataset.len().max(1) as f64)
}
