#![allow(dead_code)]

pub mod gradcheck;

use fedsim::data::{generate_synthetic, Dataset, SyntheticSpec};
use fedsim::federation::{Algorithm, FederationConfig, FederationInputs};
use fedsim::metrics::{newcomer_protocol, select_newcomers};
use fedsim::model::evaluate;
use fedsim::model::{LocalTrainSpec, ModelSpec};
use fedsim::partition::{partition, ClientPartition, PartitionKind, PartitionSpec};
use fedsim::rng::{purpose, Rng};

pub struct Setup {
    pub train: Dataset,
    pub test: Dataset,
    pub parts: Vec<ClientPartition>,
    pub model: ModelSpec,
}

impl Setup {
    pub fn inputs(&self) -> FederationInputs<'_> {
        FederationInputs {
            model: &self.model,
            partitions: &self.parts,
            train: &self.train,
            test: &self.test,
        }
    }
}

pub fn synthetic(
    n_classes: usize,
    n_features: usize,
    train_per_class: usize,
    test_per_class: usize,
) -> SyntheticSpec {
    SyntheticSpec {
        n_classes,
        n_features,
        train_per_class,
        test_per_class,
        ..SyntheticSpec::default()
    }
}

/// Data and partitions drawn from the standard per-seed streams.
pub fn setup(
    spec: &SyntheticSpec,
    kind: PartitionKind,
    n_clients: usize,
    model: ModelSpec,
    seed: u64,
) -> Setup {
    let (train, test) =
        generate_synthetic(spec, &mut Rng::new(seed).derive(&[purpose::DATA])).unwrap();
    let parts = partition(
        &train,
        &test,
        &PartitionSpec { kind, n_clients },
        &mut Rng::new(seed).derive(&[purpose::PARTITION]),
    )
    .unwrap();
    Setup {
        train,
        test,
        parts,
        model,
    }
}

pub fn mlp(spec: &SyntheticSpec, hidden: usize) -> ModelSpec {
    ModelSpec {
        init_scale: 0.3,
        ..ModelSpec::mlp(spec.n_features, hidden, spec.n_classes)
    }
}

pub fn fed_config(
    algorithm: Algorithm,
    n_clients: usize,
    sample_rate: f64,
    rounds: usize,
    epochs: usize,
    seed: u64,
) -> FederationConfig {
    FederationConfig {
        n_clients,
        sample_rate,
        rounds,
        local: LocalTrainSpec {
            epochs,
            batch_size: 10,
            ..LocalTrainSpec::default()
        },
        algorithm,
        seed,
        workers: 1,
        ..FederationConfig::default()
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Gives every newcomer the exact data of one trainer and returns the mean
/// newcomer accuracy minus the mean personalized accuracy of those trainers.
pub fn newcomer_twin_gap(seed: u64) -> f64 {
    let spec = synthetic(10, 20, 60, 30);
    let mut s = setup(
        &spec,
        PartitionKind::LabelDir { alpha: 0.3 },
        10,
        mlp(&spec, 16),
        seed,
    );
    let mut cfg = fed_config(Algorithm::FedavgFt, 10, 0.3, 10, 2, seed);
    cfg.params.ft_epochs = 5;
    let held = select_newcomers(10, seed).unwrap();
    let trainers: Vec<usize> = (0..10).filter(|k| !held.contains(k)).collect();
    let twins: Vec<(usize, usize)> = held.iter().copied().zip(trainers.iter().copied()).collect();
    for &(n, t) in &twins {
        let src = s.parts[t].clone();
        s.parts[n].train = src.train;
        s.parts[n].test = src.test;
        s.parts[n].owned_classes = src.owned_classes;
    }
    let out = newcomer_protocol(&cfg, &s.model, &s.parts, &s.train, &s.test).unwrap();
    assert_eq!(out.newcomers, held);
    let twin_acc: f64 = twins
        .iter()
        .map(|&(_, t)| {
            evaluate(
                &s.model,
                &out.trainer_run.final_personal[&t],
                &s.test,
                &s.parts[t].test,
            )
            .unwrap()
        })
        .sum::<f64>()
        / twins.len() as f64;
    out.accuracy - twin_acc
}
