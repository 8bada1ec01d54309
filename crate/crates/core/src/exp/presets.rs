//! Named settings mirroring the four reference training settings at desk scale.
//!
//! Client counts, sample rates, local epochs, rounds and partitioning are kept
//! as-is; the datasets become 10- or 20-class synthetic blobs and the
//! architecture a one-hidden-layer MLP.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

struct Preset {
    name: &'static str,
    classes: usize,
    features: usize,
    clients: usize,
    sample_rate: &'static str,
    epochs: usize,
    partition: (&'static str, &'static str, &'static str),
    rounds: usize,
    algorithm: &'static str,
}

const PRESETS: [Preset; 4] = [
    Preset {
        name: "gfl1",
        classes: 10,
        features: 20,
        clients: 100,
        sample_rate: "0.1",
        epochs: 5,
        partition: ("label-skew", "partition.p", "0.8"),
        rounds: 100,
        algorithm: "fedavg",
    },
    Preset {
        name: "gfl2",
        classes: 20,
        features: 40,
        clients: 20,
        sample_rate: "0.2",
        epochs: 10,
        partition: ("label-dir", "partition.alpha", "0.5"),
        rounds: 100,
        algorithm: "fedavg",
    },
    Preset {
        name: "pfl1",
        classes: 10,
        features: 20,
        clients: 100,
        sample_rate: "0.1",
        epochs: 10,
        partition: ("label-skew", "partition.p", "0.3"),
        rounds: 100,
        algorithm: "fedavg_ft",
    },
    Preset {
        name: "pfl2",
        classes: 20,
        features: 40,
        clients: 20,
        sample_rate: "0.2",
        epochs: 10,
        partition: ("label-dir", "partition.alpha", "0.1"),
        rounds: 100,
        algorithm: "fedavg_ft",
    },
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

/// The `key = value` block a preset expands to.
pub fn preset_entries(name: &str) -> Result<BTreeMap<String, String>> {
    let p = PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        Error::config(format!(
            "unknown preset `{name}` (expected one of {})",
            preset_names().join(", ")
        ))
    })?;
    let entries = [
        ("dataset", "synthetic".to_string()),
        ("synthetic.classes", p.classes.to_string()),
        ("synthetic.features", p.features.to_string()),
        ("synthetic.train_per_class", "500".to_string()),
        ("synthetic.test_per_class", "100".to_string()),
        ("model.kind", "mlp".to_string()),
        ("model.hidden", "32".to_string()),
        ("clients", p.clients.to_string()),
        ("sample_rate", p.sample_rate.to_string()),
        ("local_epochs", p.epochs.to_string()),
        ("batch_size", "10".to_string()),
        ("lr", "0.01".to_string()),
        ("momentum", "0.9".to_string()),
        ("partition.kind", p.partition.0.to_string()),
        (p.partition.1, p.partition.2.to_string()),
        ("rounds", p.rounds.to_string()),
        ("algorithm", p.algorithm.to_string()),
    ];
    Ok(entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect())
}
