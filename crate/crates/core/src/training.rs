//! Mini-batch gradient descent with Adam.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::models::{check_point, Model};
use crate::rng::{stream_rng, PointSet, Stream};

/// Per-sample regression loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mae,
    Mse,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Mae => "mae",
            LossKind::Mse => "mse",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mae" => Ok(LossKind::Mae),
            "mse" => Ok(LossKind::Mse),
            other => Err(Error::Parse(format!("unknown loss {other:?}"))),
        }
    }
}

/// `(L(p, y), ∂L/∂p)`. For MAE the derivative is `sign(p − y)` with `sign(0) = 0`.
pub fn loss_value_and_dloss(loss: LossKind, prediction: f64, target: f64) -> Result<(f64, f64)> {
    if !prediction.is_finite() || !target.is_finite() {
        return Err(Error::NonFinite);
    }
    let r = prediction - target;
    Ok(match loss {
        LossKind::Mae => {
            let sign = if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            };
            (r.abs(), sign)
        }
        LossKind::Mse => (r * r, 2.0 * r),
    })
}

/// Adam optimizer state sized to one model's parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Fresh state with `β1 = 0.9`, `β2 = 0.999`, `ε = 1e-8`.
    pub fn new(param_count: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One bias-corrected Adam update of `params` with gradient `grad`.
    ///
    /// Moments are updated densely. An index whose gradient and moments are
    /// all zero receives an update of exactly zero, so its parameter is left
    /// bit-identical.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::SizeMismatch {
                expected: self.m.len(),
                got: params.len(),
            });
        }
        if grad.len() != self.m.len() {
            return Err(Error::SizeMismatch {
                expected: self.m.len(),
                got: grad.len(),
            });
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grad[i];
            let m = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            let v = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            self.m[i] = m;
            self.v[i] = v;
            let m_hat = m / bc1;
            let v_hat = v / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Applies one Adam step to a model's parameters.
pub fn adam_step<M: Model + ?Sized>(state: &mut AdamState, model: &mut M, grad: &[f64]) -> Result<()> {
    state.step(model.params_mut(), grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub shuffle_seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Inputs with scalar targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: PointSet,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: PointSet, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::SizeMismatch {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        Ok(Self { inputs, targets })
    }

    /// Labels every input with `f`.
    pub fn labeled(inputs: PointSet, f: impl Fn(&[f64]) -> Result<f64>) -> Result<Self> {
        let targets = inputs.iter().map(f).collect::<Result<Vec<f64>>>()?;
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn append(&mut self, other: &Dataset) {
        self.inputs.extend(&other.inputs);
        self.targets.extend_from_slice(&other.targets);
    }
}

/// Trains `model` in place and returns the mean training loss of each epoch
/// (measured on the pre-update predictions of each batch).
///
/// Each epoch reshuffles with a seed derived from `cfg.shuffle_seed` and the
/// epoch index. The batch gradient is the mean over the batch; the last batch
/// may be short.
pub fn train_epochs<M: Model + ?Sized>(
    model: &mut M,
    data: &Dataset,
    cfg: &TrainConfig,
    state: &mut AdamState,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = model.input_dim();
    for x in data.inputs.iter() {
        check_point(x, n)?;
    }
    if data.targets.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; model.param_count()];
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = stream_rng(cfg.shuffle_seed, Stream::Shuffle, epoch as u64);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let inv = 1.0 / batch.len() as f64;
            for &i in batch {
                let target = data.targets[i];
                // a non-finite prediction contributes nothing here and is
                // reported right after
                let scale = |p: f64| loss_value_and_dloss(cfg.loss, p, target).map_or(0.0, |(_, d)| d * inv);
                let p = model.accumulate_grad(data.inputs.point(i), &scale, &mut grad)?;
                epoch_loss += loss_value_and_dloss(cfg.loss, p, target)?.0;
            }
            adam_step(state, model, &grad)?;
        }
        history.push(epoch_loss / data.len() as f64);
    }
    Ok(history)
}

/// Mean absolute error of `model` over a dataset.
pub fn mean_abs_error<M: Model + ?Sized>(model: &M, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut acc = 0.0;
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        acc += (model.forward(x)? - y).abs();
    }
    Ok(acc / data.len() as f64)
}
