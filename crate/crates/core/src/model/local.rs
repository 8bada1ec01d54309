//! The client-side local training loop.

use serde::{Deserialize, Serialize};

use super::{forward_loss_grad, sgd_step, ModelSpec, OptConfig, Proximal};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::params::ParamVector;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainableMask {
    All,
    GlobalOnly,
    LocalOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTrainSpec {
    pub epochs: usize,
    pub batch_size: usize,
    /// FedProx coefficient; 0 disables the proximal term.
    pub prox_mu: f64,
    pub mask: TrainableMask,
}

impl Default for LocalTrainSpec {
    fn default() -> Self {
        LocalTrainSpec {
            epochs: 1,
            batch_size: 10,
            prox_mu: 0.0,
            mask: TrainableMask::All,
        }
    }
}

impl LocalTrainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !self.prox_mu.is_finite() || self.prox_mu < 0.0 {
            return Err(Error::invalid("prox mu must be non-negative"));
        }
        Ok(())
    }

    /// Optimizer steps taken on `n` samples.
    pub fn steps_for(&self, n: usize) -> usize {
        self.epochs * n.div_ceil(self.batch_size)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalOutcome {
    pub params: ParamVector,
    pub steps: usize,
    /// Mean batch loss over the final epoch; `None` when no step ran.
    pub last_epoch_loss: Option<f64>,
}

/// Runs `train.epochs` passes of minibatch SGD from `start` over `indices`.
///
/// Batches are reshuffled every epoch; the last batch keeps the remainder.
/// `correction` is added to every gradient (Scaffold's `c − c_k`).
#[allow(clippy::too_many_arguments)]
pub fn client_update(
    spec: &ModelSpec,
    start: &ParamVector,
    data: &Dataset,
    indices: &[usize],
    train: &LocalTrainSpec,
    opt: &OptConfig,
    correction: Option<&ParamVector>,
    rng: &mut Rng,
) -> Result<LocalOutcome> {
    if indices.is_empty() {
        return Err(Error::invalid("client has no training data"));
    }
    train.validate()?;
    let mut params = start.clone();
    if train.epochs == 0 {
        return Ok(LocalOutcome {
            params,
            steps: 0,
            last_epoch_loss: None,
        });
    }
    if let Some(c) = correction {
        start.check_layout(c)?;
    }
    let anchor = (train.prox_mu > 0.0).then(|| start.clone());
    let active = spec.trainable(train.mask);
    let mut state = opt.state_for(&params);
    let mut order = indices.to_vec();
    let mut steps = 0;
    let mut last_epoch_loss = None;

    for _ in 0..train.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for batch in order.chunks(train.batch_size) {
            let prox = anchor.as_ref().map(|a| Proximal {
                anchor: a,
                mu: train.prox_mu,
            });
            let (loss, mut grad) = forward_loss_grad(spec, &params, data, batch, prox)?;
            if let Some(c) = correction {
                for (g, ci) in grad.values_mut().iter_mut().zip(c.values()) {
                    *g += ci;
                }
            }
            sgd_step(&mut params, &grad, &mut state, &active)?;
            epoch_loss += loss;
            batches += 1;
            steps += 1;
        }
        last_epoch_loss = Some(epoch_loss / batches as f64);
    }
    Ok(LocalOutcome {
        params,
        steps,
        last_epoch_loss,
    })
}
