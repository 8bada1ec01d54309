//! The federated round protocol and the algorithms built on it.
//!
//! A [`Federation`] owns the server state for one run. Each call to
//! [`Federation::step`] samples clients, trains them (optionally in
//! parallel), fuses the results and records a [`RoundLog`].

mod fusion;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{
    client_update, evaluate_all, init_params, mean_loss, LocalOutcome, LocalTrainSpec, ModelSpec,
    OptConfig,
};
use crate::params::ParamVector;
use crate::partition::ClientPartition;
use crate::rng::{purpose, Rng};

pub use fusion::{effective_steps, fuse_fedavg, fuse_fednova, NovaUpdate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Fedavg,
    Fedprox,
    Fednova,
    Scaffold,
    FedavgFt,
    Decoupled,
    Clustered,
    Solo,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Fedavg,
        Algorithm::Fedprox,
        Algorithm::Fednova,
        Algorithm::Scaffold,
        Algorithm::FedavgFt,
        Algorithm::Decoupled,
        Algorithm::Clustered,
        Algorithm::Solo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fedavg => "fedavg",
            Algorithm::Fedprox => "fedprox",
            Algorithm::Fednova => "fednova",
            Algorithm::Scaffold => "scaffold",
            Algorithm::FedavgFt => "fedavg_ft",
            Algorithm::Decoupled => "decoupled",
            Algorithm::Clustered => "clustered",
            Algorithm::Solo => "solo",
        }
    }

    /// Personalized algorithms produce one model per client.
    pub fn is_personalized(self) -> bool {
        matches!(
            self,
            Algorithm::FedavgFt | Algorithm::Decoupled | Algorithm::Clustered | Algorithm::Solo
        )
    }

    /// Whether a single server model exists whose accuracy is meaningful.
    pub fn has_global_model(self) -> bool {
        !matches!(
            self,
            Algorithm::Solo | Algorithm::Decoupled | Algorithm::Clustered
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::config(format!(
                    "unknown algorithm `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmParams {
    /// FedProx proximal coefficient.
    pub mu: f64,
    /// Fine-tuning epochs for FedAvg+FT and newcomers.
    pub ft_epochs: usize,
    pub n_clusters: usize,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        AlgorithmParams {
            mu: 0.001,
            ft_epochs: 20,
            n_clusters: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FederationConfig {
    pub n_clients: usize,
    pub sample_rate: f64,
    pub rounds: usize,
    pub local: LocalTrainSpec,
    pub opt: OptConfig,
    pub algorithm: Algorithm,
    pub params: AlgorithmParams,
    pub seed: u64,
    /// Threads used for client updates within a round; 1 runs serially.
    pub workers: usize,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            n_clients: 100,
            sample_rate: 0.1,
            rounds: 100,
            local: LocalTrainSpec {
                epochs: 10,
                ..LocalTrainSpec::default()
            },
            opt: OptConfig::default(),
            algorithm: Algorithm::Fedavg,
            params: AlgorithmParams::default(),
            seed: 0,
            workers: 1,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 {
            return Err(Error::invalid("federation needs at least one client"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return Err(Error::invalid(format!(
                "sample rate must be in (0, 1], got {}",
                self.sample_rate
            )));
        }
        if self.rounds == 0 {
            return Err(Error::invalid("federation needs at least one round"));
        }
        self.local.validate()?;
        self.opt.validate()?;
        if self.algorithm == Algorithm::Clustered && self.params.n_clusters == 0 {
            return Err(Error::invalid("clustered needs at least one cluster"));
        }
        if self.params.mu.is_nan() || self.params.mu < 0.0 {
            return Err(Error::invalid("fedprox mu must be non-negative"));
        }
        Ok(())
    }

    pub fn clients_per_round(&self) -> usize {
        clients_per_round(self.n_clients, self.sample_rate)
    }

    /// Local training settings with the algorithm's proximal term applied.
    pub fn train_spec(&self) -> LocalTrainSpec {
        LocalTrainSpec {
            prox_mu: if self.algorithm == Algorithm::Fedprox {
                self.params.mu
            } else {
                0.0
            },
            ..self.local
        }
    }
}

/// `max(⌊C·N⌋, 1)`, robust to products like `0.29 · 100 = 28.999…`.
pub fn clients_per_round(n_clients: usize, sample_rate: f64) -> usize {
    (((sample_rate * n_clients as f64) + 1e-9).floor() as usize).clamp(1, n_clients.max(1))
}

/// Uniform without-replacement sample of `max(⌊C·N⌋, 1)` client positions, sorted.
pub fn sample_clients(rng: &mut Rng, n_clients: usize, sample_rate: f64) -> Vec<usize> {
    let m = clients_per_round(n_clients, sample_rate);
    let mut picked = rng.choose_distinct(n_clients, m);
    picked.sort_unstable();
    picked
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientStat {
    pub client: usize,
    pub samples: usize,
    pub steps: usize,
    pub loss: Option<f64>,
    pub cluster: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub selected: Vec<usize>,
    pub m: usize,
    /// Server-model accuracy on the full test split after fusion.
    pub global_accuracy: Option<f64>,
    pub clients: Vec<ClientStat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub round_logs: Vec<RoundLog>,
    pub final_global: ParamVector,
    pub final_personal: BTreeMap<usize, ParamVector>,
}

impl RunResult {
    pub fn global_accuracies(&self) -> Vec<f64> {
        self.round_logs
            .iter()
            .filter_map(|r| r.global_accuracy)
            .collect()
    }

    /// Hash over every float bit pattern and index in the result.
    pub fn digest(&self) -> u64 {
        let mut words: Vec<u64> = Vec::new();
        for log in &self.round_logs {
            words.push(log.round as u64);
            words.extend(log.selected.iter().map(|&s| s as u64));
            words.push(log.global_accuracy.map_or(u64::MAX, f64::to_bits));
            for c in &log.clients {
                words.extend([
                    c.client as u64,
                    c.steps as u64,
                    c.loss.map_or(u64::MAX, f64::to_bits),
                ]);
            }
        }
        words.extend(self.final_global.values().iter().map(|v| v.to_bits()));
        for (k, p) in &self.final_personal {
            words.push(*k as u64);
            words.extend(p.values().iter().map(|v| v.to_bits()));
        }
        crate::rng::hash64(&words)
    }
}

/// Read-only inputs shared by every round.
#[derive(Clone, Copy)]
pub struct FederationInputs<'a> {
    pub model: &'a ModelSpec,
    pub partitions: &'a [ClientPartition],
    pub train: &'a Dataset,
    pub test: &'a Dataset,
}

#[derive(Clone, Debug)]
pub struct ScaffoldVariates {
    pub server: ParamVector,
    pub clients: Vec<ParamVector>,
}

enum ServerState {
    Single {
        global: ParamVector,
    },
    Scaffold {
        global: ParamVector,
        variates: ScaffoldVariates,
    },
    Decoupled {
        global: ParamVector,
        personal: Vec<ParamVector>,
    },
    Clustered {
        clusters: Vec<ParamVector>,
        assignment: Vec<Option<usize>>,
    },
    Solo {
        models: Vec<ParamVector>,
    },
}

pub struct Federation<'a> {
    config: FederationConfig,
    inputs: FederationInputs<'a>,
    root: Rng,
    pool: Option<ThreadPool>,
    state: ServerState,
    logs: Vec<RoundLog>,
    init: ParamVector,
}

fn build_pool(workers: usize) -> Result<Option<ThreadPool>> {
    if workers <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(Some)
        .map_err(|e| Error::invalid(format!("could not start {workers} worker threads: {e}")))
}

fn par_map<T, R, F>(pool: Option<&ThreadPool>, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match pool {
        Some(p) => p.install(|| items.par_iter().map(&f).collect()),
        None => items.iter().map(f).collect(),
    }
}

fn lowest_loss_cluster(
    inputs: &FederationInputs<'_>,
    clusters: &[ParamVector],
    part: &ClientPartition,
) -> Result<usize> {
    let mut best = (0, f64::INFINITY);
    for (j, c) in clusters.iter().enumerate() {
        let loss = mean_loss(inputs.model, c, inputs.train, &part.train)?;
        if loss < best.1 {
            best = (j, loss);
        }
    }
    Ok(best.0)
}

/// Cluster serving the most clients; ties go to the lowest id.
fn dominant_cluster(assignment: &[Option<usize>], n_clusters: usize) -> usize {
    let mut counts = vec![0usize; n_clusters];
    for a in assignment.iter().flatten() {
        counts[*a] += 1;
    }
    let mut best = 0;
    for (j, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = j;
        }
    }
    best
}

impl<'a> Federation<'a> {
    pub fn new(config: FederationConfig, inputs: FederationInputs<'a>) -> Result<Self> {
        config.validate()?;
        inputs.model.validate()?;
        if inputs.partitions.len() != config.n_clients {
            return Err(Error::invalid(format!(
                "{} partitions for {} clients",
                inputs.partitions.len(),
                config.n_clients
            )));
        }
        if let Some(p) = inputs.partitions.iter().find(|p| p.train.is_empty()) {
            return Err(Error::invalid(format!(
                "client {} has no training data",
                p.client
            )));
        }
        if inputs.train.n_features() != inputs.model.n_features
            || inputs.train.n_classes() != inputs.model.n_classes
        {
            return Err(Error::shape(format!(
                "model {} does not match data with {} features and {} classes",
                inputs.model.describe(),
                inputs.train.n_features(),
                inputs.train.n_classes()
            )));
        }
        let root = Rng::new(config.seed);
        let init = init_params(inputs.model, &mut root.derive(&[purpose::INIT]))?;
        let n = config.n_clients;
        let state = match config.algorithm {
            Algorithm::Fedavg | Algorithm::Fedprox | Algorithm::Fednova | Algorithm::FedavgFt => {
                ServerState::Single {
                    global: init.clone(),
                }
            }
            Algorithm::Scaffold => {
                let zero = ParamVector::zeros(init.layout().clone());
                ServerState::Scaffold {
                    global: init.clone(),
                    variates: ScaffoldVariates {
                        server: zero.clone(),
                        clients: vec![zero; n],
                    },
                }
            }
            Algorithm::Decoupled => ServerState::Decoupled {
                global: init.clone(),
                personal: vec![init.clone(); n],
            },
            Algorithm::Clustered => {
                let mut clusters = vec![init.clone()];
                for j in 1..config.params.n_clusters {
                    clusters.push(init_params(
                        inputs.model,
                        &mut root.derive(&[purpose::CLUSTER_INIT, j as u64]),
                    )?);
                }
                ServerState::Clustered {
                    clusters,
                    assignment: vec![None; n],
                }
            }
            Algorithm::Solo => ServerState::Solo {
                models: vec![init.clone(); n],
            },
        };
        let pool = build_pool(config.workers)?;
        Ok(Federation {
            config,
            inputs,
            root,
            pool,
            state,
            logs: Vec::new(),
            init,
        })
    }

    pub fn round(&self) -> usize {
        self.logs.len()
    }

    pub fn logs(&self) -> &[RoundLog] {
        &self.logs
    }

    pub fn scaffold_variates(&self) -> Option<&ScaffoldVariates> {
        match &self.state {
            ServerState::Scaffold { variates, .. } => Some(variates),
            _ => None,
        }
    }

    /// The current server model (dominant cluster for clustered, init for solo).
    pub fn server_model(&self) -> &ParamVector {
        match &self.state {
            ServerState::Single { global }
            | ServerState::Scaffold { global, .. }
            | ServerState::Decoupled { global, .. } => global,
            ServerState::Clustered {
                clusters,
                assignment,
            } => &clusters[dominant_cluster(assignment, clusters.len())],
            ServerState::Solo { .. } => &self.init,
        }
    }

    fn local_rng(&self, client: usize, round: usize) -> Rng {
        self.root
            .derive(&[purpose::LOCAL, client as u64, round as u64])
    }

    fn train_one(
        &self,
        pos: usize,
        start: &ParamVector,
        correction: Option<&ParamVector>,
        round: usize,
    ) -> Result<LocalOutcome> {
        let part = &self.inputs.partitions[pos];
        client_update(
            self.inputs.model,
            start,
            self.inputs.train,
            &part.train,
            &self.config.train_spec(),
            &self.config.opt,
            correction,
            &mut self.local_rng(part.client, round),
        )
        .map_err(|e| Error::ClientFailure {
            round,
            client: part.client,
            source: Box::new(e),
        })
    }

    fn stat(&self, pos: usize, out: &LocalOutcome, cluster: Option<usize>) -> ClientStat {
        ClientStat {
            client: self.inputs.partitions[pos].client,
            samples: self.inputs.partitions[pos].train.len(),
            steps: out.steps,
            loss: out.last_epoch_loss,
            cluster,
        }
    }

    /// Runs one communication round.
    pub fn step(&mut self) -> Result<&RoundLog> {
        let t = self.logs.len();
        let n = self.config.n_clients;
        let selected = if self.config.algorithm == Algorithm::Solo {
            (0..n).collect()
        } else {
            sample_clients(
                &mut self.root.derive(&[purpose::SAMPLE, t as u64]),
                n,
                self.config.sample_rate,
            )
        };
        let sizes: Vec<usize> = selected
            .iter()
            .map(|&k| self.inputs.partitions[k].train.len())
            .collect();
        let pool = self.pool.as_ref();
        let mut stats = Vec::with_capacity(selected.len());

        // Phase 1: local training against an immutable view of the server.
        let next_state = match &self.state {
            ServerState::Single { global } => {
                let outs: Vec<Result<LocalOutcome>> =
                    par_map(pool, &selected, |&k| self.train_one(k, global, None, t));
                let outs = outs.into_iter().collect::<Result<Vec<_>>>()?;
                for (&k, o) in selected.iter().zip(&outs) {
                    stats.push(self.stat(k, o, None));
                }
                let fused = if self.config.algorithm == Algorithm::Fednova {
                    let deltas: Vec<ParamVector> = outs
                        .iter()
                        .map(|o| o.params.sub(global))
                        .collect::<Result<_>>()?;
                    let updates: Vec<NovaUpdate> = deltas
                        .iter()
                        .zip(&outs)
                        .zip(&sizes)
                        .map(|((d, o), &s)| NovaUpdate {
                            delta: d,
                            data_size: s,
                            steps: o.steps,
                        })
                        .collect();
                    fuse_fednova(&updates, global, self.config.opt.momentum)?
                } else {
                    let updates: Vec<(&ParamVector, usize)> = outs
                        .iter()
                        .map(|o| &o.params)
                        .zip(sizes.iter().copied())
                        .collect();
                    fuse_fedavg(&updates)?
                };
                ServerState::Single { global: fused }
            }
            ServerState::Scaffold { global, variates } => {
                let corrections: Vec<ParamVector> = selected
                    .iter()
                    .map(|&k| variates.server.sub(&variates.clients[k]))
                    .collect::<Result<_>>()?;
                let jobs: Vec<(usize, &ParamVector)> =
                    selected.iter().copied().zip(&corrections).collect();
                let outs: Vec<Result<LocalOutcome>> =
                    par_map(pool, &jobs, |&(k, c)| self.train_one(k, global, Some(c), t));
                let outs = outs.into_iter().collect::<Result<Vec<_>>>()?;
                let lr = self.config.opt.lr;
                let mut new_variates = variates.clone();
                let mut variate_delta_sum = ParamVector::zeros(global.layout().clone());
                for (&k, o) in selected.iter().zip(&outs) {
                    stats.push(self.stat(k, o, None));
                    if o.steps == 0 {
                        continue;
                    }
                    // c_k+ = c_k − c + (θ_g − θ_k) / (K·η)
                    let drift = global.sub(&o.params)?.scale(1.0 / (o.steps as f64 * lr));
                    let updated = drift
                        .sub(&variates.server)?
                        .sub(&variates.clients[k].scale(-1.0))?;
                    variate_delta_sum = crate::params::axpy(
                        1.0,
                        &updated.sub(&variates.clients[k])?,
                        &variate_delta_sum,
                    )?;
                    new_variates.clients[k] = updated;
                }
                new_variates.server =
                    crate::params::axpy(1.0 / n as f64, &variate_delta_sum, &variates.server)?;
                let updates: Vec<(&ParamVector, usize)> = outs
                    .iter()
                    .map(|o| &o.params)
                    .zip(sizes.iter().copied())
                    .collect();
                ServerState::Scaffold {
                    global: fuse_fedavg(&updates)?,
                    variates: new_variates,
                }
            }
            ServerState::Decoupled { global, personal } => {
                let local_mask = self.inputs.model.local_mask();
                let starts: Vec<ParamVector> = selected
                    .iter()
                    .map(|&k| {
                        let mut s = global.clone();
                        s.copy_segments_from(&personal[k], &local_mask)?;
                        Ok(s)
                    })
                    .collect::<Result<_>>()?;
                let jobs: Vec<(usize, &ParamVector)> =
                    selected.iter().copied().zip(&starts).collect();
                let outs: Vec<Result<LocalOutcome>> =
                    par_map(pool, &jobs, |&(k, s)| self.train_one(k, s, None, t));
                let outs = outs.into_iter().collect::<Result<Vec<_>>>()?;
                let updates: Vec<(&ParamVector, usize)> = outs
                    .iter()
                    .map(|o| &o.params)
                    .zip(sizes.iter().copied())
                    .collect();
                let fused = fuse_fedavg(&updates)?;
                let mut new_global = global.clone();
                new_global.copy_segments_from(&fused, &self.inputs.model.global_mask())?;
                let mut new_personal = personal.clone();
                for (&k, o) in selected.iter().zip(outs) {
                    stats.push(self.stat(k, &o, None));
                    new_personal[k] = o.params;
                }
                ServerState::Decoupled {
                    global: new_global,
                    personal: new_personal,
                }
            }
            ServerState::Clustered {
                clusters,
                assignment,
            } => {
                let picks: Vec<Result<usize>> = par_map(pool, &selected, |&k| {
                    lowest_loss_cluster(&self.inputs, clusters, &self.inputs.partitions[k])
                });
                let picks = picks.into_iter().collect::<Result<Vec<_>>>()?;
                let jobs: Vec<(usize, usize)> = selected
                    .iter()
                    .copied()
                    .zip(picks.iter().copied())
                    .collect();
                let outs: Vec<Result<LocalOutcome>> = par_map(pool, &jobs, |&(k, j)| {
                    self.train_one(k, &clusters[j], None, t)
                });
                let outs = outs.into_iter().collect::<Result<Vec<_>>>()?;
                let mut new_clusters = clusters.clone();
                for (j, cluster) in new_clusters.iter_mut().enumerate() {
                    let members: Vec<(&ParamVector, usize)> = outs
                        .iter()
                        .zip(&picks)
                        .zip(&sizes)
                        .filter(|((_, &p), _)| p == j)
                        .map(|((o, _), &s)| (&o.params, s))
                        .collect();
                    if !members.is_empty() {
                        *cluster = fuse_fedavg(&members)?;
                    }
                }
                let mut new_assignment = assignment.clone();
                for ((&k, o), &j) in selected.iter().zip(&outs).zip(&picks) {
                    stats.push(self.stat(k, o, Some(j)));
                    new_assignment[k] = Some(j);
                }
                ServerState::Clustered {
                    clusters: new_clusters,
                    assignment: new_assignment,
                }
            }
            ServerState::Solo { models } => {
                let jobs: Vec<(usize, &ParamVector)> =
                    selected.iter().copied().zip(models.iter()).collect();
                let outs: Vec<Result<LocalOutcome>> =
                    par_map(pool, &jobs, |&(k, s)| self.train_one(k, s, None, t));
                let outs = outs.into_iter().collect::<Result<Vec<_>>>()?;
                let mut new_models = Vec::with_capacity(n);
                for (&k, o) in selected.iter().zip(outs) {
                    stats.push(self.stat(k, &o, None));
                    new_models.push(o.params);
                }
                ServerState::Solo { models: new_models }
            }
        };
        self.state = next_state;

        let global_accuracy = match self.state {
            ServerState::Solo { .. } => None,
            _ => Some(evaluate_all(
                self.inputs.model,
                self.server_model(),
                self.inputs.test,
            )?),
        };
        let m = selected.len();
        self.logs.push(RoundLog {
            round: t,
            selected: selected
                .iter()
                .map(|&k| self.inputs.partitions[k].client)
                .collect(),
            m,
            global_accuracy,
            clients: stats,
        });
        Ok(self.logs.last().expect("just pushed"))
    }

    /// Consumes the federation, producing final global and personal models.
    pub fn finish(self) -> Result<RunResult> {
        let parts = self.inputs.partitions;
        let final_global = self.server_model().clone();
        let final_personal: BTreeMap<usize, ParamVector> = match &self.state {
            ServerState::Single { global } if self.config.algorithm == Algorithm::FedavgFt => {
                fine_tune(
                    self.inputs,
                    global,
                    self.config.params.ft_epochs,
                    &self.config.local,
                    &self.config.opt,
                    &self.root,
                    self.pool.as_ref(),
                )?
            }
            ServerState::Single { .. } | ServerState::Scaffold { .. } => BTreeMap::new(),
            ServerState::Decoupled { global, personal } => {
                let local_mask = self.inputs.model.local_mask();
                parts
                    .iter()
                    .zip(personal)
                    .map(|(p, own)| {
                        let mut model = global.clone();
                        model.copy_segments_from(own, &local_mask)?;
                        Ok((p.client, model))
                    })
                    .collect::<Result<_>>()?
            }
            ServerState::Clustered { clusters, .. } => {
                let picks: Vec<Result<usize>> = par_map(self.pool.as_ref(), parts, |p| {
                    lowest_loss_cluster(&self.inputs, clusters, p)
                });
                parts
                    .iter()
                    .zip(picks)
                    .map(|(p, j)| Ok((p.client, clusters[j?].clone())))
                    .collect::<Result<_>>()?
            }
            ServerState::Solo { models } => parts
                .iter()
                .map(|p| p.client)
                .zip(models.iter().cloned())
                .collect(),
        };
        Ok(RunResult {
            round_logs: self.logs,
            final_global,
            final_personal,
        })
    }
}

/// Runs `config.rounds` rounds and finalizes.
pub fn run_federation(
    config: &FederationConfig,
    inputs: FederationInputs<'_>,
) -> Result<RunResult> {
    let mut fed = Federation::new(config.clone(), inputs)?;
    for _ in 0..config.rounds {
        fed.step()?;
    }
    fed.finish()
}

/// Every client fine-tunes `global` on its own train split for `ft_epochs`.
pub fn fine_tune(
    inputs: FederationInputs<'_>,
    global: &ParamVector,
    ft_epochs: usize,
    local: &LocalTrainSpec,
    opt: &OptConfig,
    root: &Rng,
    pool: Option<&ThreadPool>,
) -> Result<BTreeMap<usize, ParamVector>> {
    let spec = LocalTrainSpec {
        epochs: ft_epochs,
        prox_mu: 0.0,
        ..*local
    };
    let outs: Vec<Result<(usize, ParamVector)>> = par_map(pool, inputs.partitions, |p| {
        let mut rng = root.derive(&[purpose::FINE_TUNE, p.client as u64]);
        client_update(
            inputs.model,
            global,
            inputs.train,
            &p.train,
            &spec,
            opt,
            None,
            &mut rng,
        )
        .map(|o| (p.client, o.params))
        .map_err(|e| Error::ClientFailure {
            round: usize::MAX,
            client: p.client,
            source: Box::new(e),
        })
    });
    outs.into_iter().collect()
}
