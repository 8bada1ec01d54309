//! Evaluation metrics over finished runs: windowed global accuracy, average
//! personalized accuracy on full local test sets, fairness, and newcomer
//! generalization.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::federation::{
    clients_per_round, fine_tune, run_federation, FederationConfig, FederationInputs, RunResult,
};
use crate::model::{evaluate, ModelSpec};
use crate::partition::ClientPartition;
use crate::rng::{purpose, Rng};

/// Number of final rounds averaged by [`gfl_metric`]: `max(⌊C·N⌋, 1)`.
pub fn gfl_window(sample_rate: f64, n_clients: usize) -> usize {
    clients_per_round(n_clients, sample_rate)
}

/// Mean of the last `max(⌊C·N⌋, 1)` per-round global accuracies.
pub fn gfl_metric(round_accuracies: &[f64], sample_rate: f64, n_clients: usize) -> Result<f64> {
    let window = gfl_window(sample_rate, n_clients);
    if round_accuracies.len() < window {
        return Err(Error::invalid(format!(
            "global metric needs the last {window} rounds but only {} were logged",
            round_accuracies.len()
        )));
    }
    let tail = &round_accuracies[round_accuracies.len() - window..];
    Ok(tail.iter().sum::<f64>() / window as f64)
}

/// Unweighted mean accuracy over `clients`; every client must be present.
pub fn pfl_metric(per_client: &BTreeMap<usize, f64>, clients: &[usize]) -> Result<f64> {
    if clients.is_empty() {
        return Err(Error::invalid("personalized metric over zero clients"));
    }
    let mut sum = 0.0;
    for c in clients {
        sum += per_client
            .get(c)
            .ok_or_else(|| Error::invalid(format!("no local accuracy for client {c}")))?;
    }
    Ok(sum / clients.len() as f64)
}

/// Population standard deviation of accuracies, in percentage points.
pub fn fairness_metric(accuracies: &[f64]) -> Result<f64> {
    if accuracies.len() < 2 {
        return Err(Error::invalid("fairness needs at least two clients"));
    }
    // exact zero for identical values; the mean can round away from them
    if accuracies.iter().all(|&a| a == accuracies[0]) {
        return Ok(0.0);
    }
    let n = accuracies.len() as f64;
    let mean = accuracies.iter().sum::<f64>() / n;
    let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    Ok(100.0 * var.sqrt())
}

/// Sample mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Each client's accuracy on its full local test set, using its personal
/// model when one exists and the final global model otherwise.
pub fn local_accuracies(
    model: &ModelSpec,
    result: &RunResult,
    partitions: &[ClientPartition],
    test: &Dataset,
) -> Result<BTreeMap<usize, f64>> {
    partitions
        .iter()
        .map(|p| {
            let params = result
                .final_personal
                .get(&p.client)
                .unwrap_or(&result.final_global);
            Ok((p.client, evaluate(model, params, test, &p.test)?))
        })
        .collect()
}

/// Deterministic hold-out of `⌊0.2·N⌋` client positions, sorted.
pub fn select_newcomers(n_clients: usize, seed: u64) -> Result<Vec<usize>> {
    let count = n_clients / 5;
    if count == 0 {
        return Err(Error::invalid(format!(
            "newcomer protocol needs at least 5 clients, got {n_clients}"
        )));
    }
    let mut rng = Rng::new(seed).derive(&[purpose::NEWCOMER]);
    let mut picked = rng.choose_distinct(n_clients, count);
    picked.sort_unstable();
    Ok(picked)
}

#[derive(Clone, Debug)]
pub struct NewcomerOutcome {
    pub newcomers: Vec<usize>,
    pub trainers: Vec<usize>,
    pub accuracy: f64,
    pub per_newcomer: BTreeMap<usize, f64>,
    /// The federation trained on the remaining clients only.
    pub trainer_run: RunResult,
}

/// Trains on 80% of the clients, then lets the held-out 20% fine-tune the
/// trained server model on their own data and scores them.
pub fn newcomer_protocol(
    config: &FederationConfig,
    model: &ModelSpec,
    partitions: &[ClientPartition],
    train: &Dataset,
    test: &Dataset,
) -> Result<NewcomerOutcome> {
    if partitions.len() < 5 {
        return Err(Error::invalid(format!(
            "newcomer protocol needs at least 5 clients, got {}",
            partitions.len()
        )));
    }
    let held: BTreeSet<usize> = select_newcomers(partitions.len(), config.seed)?
        .into_iter()
        .collect();
    let (newcomer_parts, trainer_parts): (Vec<ClientPartition>, Vec<ClientPartition>) = partitions
        .iter()
        .cloned()
        .partition(|p| held.contains(&p.client));
    let trainer_cfg = FederationConfig {
        n_clients: trainer_parts.len(),
        ..config.clone()
    };
    let trainer_run = run_federation(
        &trainer_cfg,
        FederationInputs {
            model,
            partitions: &trainer_parts,
            train,
            test,
        },
    )?;
    let root = Rng::new(config.seed).derive(&[purpose::NEWCOMER]);
    let newcomer_inputs = FederationInputs {
        model,
        partitions: &newcomer_parts,
        train,
        test,
    };
    let tuned = fine_tune(
        newcomer_inputs,
        &trainer_run.final_global,
        config.params.ft_epochs,
        &config.local,
        &config.opt,
        &root,
        None,
    )?;
    let per_newcomer: BTreeMap<usize, f64> = newcomer_parts
        .iter()
        .map(|p| Ok((p.client, evaluate(model, &tuned[&p.client], test, &p.test)?)))
        .collect::<Result<_>>()?;
    let ids: Vec<usize> = newcomer_parts.iter().map(|p| p.client).collect();
    let accuracy = pfl_metric(&per_newcomer, &ids)?;
    Ok(NewcomerOutcome {
        newcomers: ids,
        trainers: trainer_parts.iter().map(|p| p.client).collect(),
        accuracy,
        per_newcomer,
        trainer_run,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_digest: String,
    pub runs_averaged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub gfl_accuracy: Option<f64>,
    pub pfl_accuracy: f64,
    pub fairness: f64,
    pub newcomer_accuracy: Option<f64>,
    pub per_client_accuracies: BTreeMap<usize, f64>,
    pub window: usize,
    pub provenance: Provenance,
}

/// Scores a finished run. The global metric is omitted when the algorithm
/// has no single server model.
pub fn metric_report(
    config: &FederationConfig,
    model: &ModelSpec,
    result: &RunResult,
    partitions: &[ClientPartition],
    test: &Dataset,
    newcomer_accuracy: Option<f64>,
    provenance: Provenance,
) -> Result<MetricReport> {
    let window = gfl_window(config.sample_rate, config.n_clients);
    let gfl_accuracy = if config.algorithm.has_global_model() {
        Some(gfl_metric(
            &result.global_accuracies(),
            config.sample_rate,
            config.n_clients,
        )?)
    } else {
        None
    };
    let per_client = local_accuracies(model, result, partitions, test)?;
    let ids: Vec<usize> = partitions.iter().map(|p| p.client).collect();
    let pfl_accuracy = pfl_metric(&per_client, &ids)?;
    let accs: Vec<f64> = per_client.values().copied().collect();
    let fairness = if accs.len() >= 2 {
        fairness_metric(&accs)?
    } else {
        0.0
    };
    Ok(MetricReport {
        gfl_accuracy,
        pfl_accuracy,
        fairness,
        newcomer_accuracy,
        per_client_accuracies: per_client,
        window,
        provenance,
    })
}
