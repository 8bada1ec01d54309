//! Server-side model fusion rules.

use crate::error::{Error, Result};
use crate::params::{weighted_mean, ParamVector};

/// Data-size weighted average of client models.
pub fn fuse_fedavg(updates: &[(&ParamVector, usize)]) -> Result<ParamVector> {
    if updates.is_empty() {
        return Err(Error::invalid("no client updates to fuse"));
    }
    let vectors: Vec<&ParamVector> = updates.iter().map(|(p, _)| *p).collect();
    let weights: Vec<f64> = updates.iter().map(|(_, n)| *n as f64).collect();
    weighted_mean(&vectors, &weights)
}

/// One client's contribution to normalized averaging.
#[derive(Clone, Copy, Debug)]
pub struct NovaUpdate<'a> {
    /// `θ_k − θ_g` after local training.
    pub delta: &'a ParamVector,
    pub data_size: usize,
    pub steps: usize,
}

/// Effective step count of `steps` momentum-SGD updates:
/// `Σ_{j<τ} (1 − ρ^(τ−j)) / (1 − ρ)`, which is `τ` when `ρ = 0`.
pub fn effective_steps(steps: usize, momentum: f64) -> f64 {
    if momentum == 0.0 {
        return steps as f64;
    }
    (0..steps)
        .map(|j| (1.0 - momentum.powi((steps - j) as i32)) / (1.0 - momentum))
        .sum()
}

/// FedNova: average the per-step-normalized deltas with data weights, then
/// rescale by the data-weighted mean effective step count.
pub fn fuse_fednova(
    updates: &[NovaUpdate<'_>],
    global: &ParamVector,
    momentum: f64,
) -> Result<ParamVector> {
    if updates.is_empty() {
        return Err(Error::invalid("no client updates to fuse"));
    }
    if let Some(u) = updates.iter().find(|u| u.steps == 0) {
        return Err(Error::invalid(format!(
            "client with {} samples took zero local steps",
            u.data_size
        )));
    }
    let total: f64 = updates.iter().map(|u| u.data_size as f64).sum();
    if total <= 0.0 {
        return Err(Error::invalid("all clients report zero data"));
    }
    let mut direction = vec![0.0; global.len()];
    let mut tau_eff = 0.0;
    for u in updates {
        global.check_layout(u.delta)?;
        let weight = u.data_size as f64 / total;
        let a = effective_steps(u.steps, momentum);
        tau_eff += weight * a;
        let scale = weight / a;
        for (d, x) in direction.iter_mut().zip(u.delta.values()) {
            *d += scale * x;
        }
    }
    let values = global
        .values()
        .iter()
        .zip(&direction)
        .map(|(g, d)| g + tau_eff * d)
        .collect();
    ParamVector::from_values(global.layout().clone(), values)
}
