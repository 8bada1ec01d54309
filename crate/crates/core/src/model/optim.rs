use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamVector;

/// Optimizer hyperparameters shared by every client.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub lr: f64,
    pub momentum: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            lr: 0.01,
            momentum: 0.9,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }

    pub fn state_for(&self, params: &ParamVector) -> OptState {
        OptState {
            lr: self.lr,
            momentum: self.momentum,
            velocity: ParamVector::zeros(params.layout().clone()),
        }
    }
}

/// SGD with heavy-ball momentum.
#[derive(Clone, Debug, PartialEq)]
pub struct OptState {
    pub lr: f64,
    pub momentum: f64,
    pub velocity: ParamVector,
}

/// `v ← m·v + g; θ ← θ − η·v` on the segments flagged in `active`.
pub fn sgd_step(
    params: &mut ParamVector,
    grad: &ParamVector,
    opt: &mut OptState,
    active: &[bool],
) -> Result<()> {
    params.check_layout(grad)?;
    params.check_layout(&opt.velocity)?;
    let layout = params.layout().clone();
    if active.len() != layout.segments().len() {
        return Err(Error::shape(format!(
            "mask has {} entries for {} segments",
            active.len(),
            layout.segments().len()
        )));
    }
    let (lr, momentum) = (opt.lr, opt.momentum);
    let v = opt.velocity.values_mut();
    let p = params.values_mut();
    let g = grad.values();
    for (seg, _) in layout.segments().iter().zip(active).filter(|(_, &on)| on) {
        for i in seg.offset..seg.offset + seg.len {
            v[i] = momentum * v[i] + g[i];
            p[i] -= lr * v[i];
        }
    }
    params.ensure_finite("sgd step")
}
