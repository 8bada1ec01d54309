//! The `key = value` experiment configuration format.
//!
//! Lines are `key = value`; `#` starts a comment. A `preset` line expands to
//! a block of defaults first, then every other line in the file overrides it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::SyntheticSpec;
use crate::error::{Error, Result};
use crate::federation::{Algorithm, AlgorithmParams, FederationConfig};
use crate::model::{LocalTrainSpec, ModelKind, ModelSpec, OptConfig, TrainableMask};
use crate::partition::{PartitionKind, PartitionSpec};
use crate::rng::hash_bytes;

use super::presets::preset_entries;

/// Default cap on the number of clients; raise with `max_clients`.
pub const DEFAULT_MAX_CLIENTS: usize = 200;
pub const DEFAULT_MAX_CELLS: usize = 512;
/// Recommended sample-rate band for experimental design.
pub const RECOMMENDED_SAMPLE_RATE: (f64, f64) = (0.1, 0.4);
pub const RECOMMENDED_EPOCHS: [usize; 4] = [1, 5, 10, 20];
pub const RECOMMENDED_CLIENTS: [usize; 3] = [20, 100, 500];

/// Keys that must be stated explicitly (or come from a preset).
pub const REQUIRED_KEYS: [&str; 6] = [
    "algorithm",
    "partition.kind",
    "clients",
    "sample_rate",
    "rounds",
    "local_epochs",
];

const KNOWN_KEYS: &[&str] = &[
    "preset",
    "seed",
    "runs",
    "workers",
    "output",
    "enforce_recommended",
    "newcomers",
    "max_clients",
    "dataset",
    "mnist_dir",
    "synthetic.classes",
    "synthetic.features",
    "synthetic.train_per_class",
    "synthetic.test_per_class",
    "synthetic.separation",
    "synthetic.sigma",
    "partition.kind",
    "partition.alpha",
    "partition.p",
    "partition.shards",
    "model.kind",
    "model.hidden",
    "model.init_scale",
    "model.layer_split",
    "clients",
    "sample_rate",
    "rounds",
    "local_epochs",
    "batch_size",
    "lr",
    "momentum",
    "algorithm",
    "algo.mu",
    "algo.ft_epochs",
    "algo.clusters",
    "sweep.alpha",
    "sweep.p",
    "sweep.E",
    "sweep.C",
    "sweep.N",
    "sweep.algorithm",
    "sweep.max_cells",
];

const PARTITION_LEVEL_KEYS: [&str; 3] = ["partition.alpha", "partition.p", "partition.shards"];

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Mnist { dir: PathBuf },
}

impl DatasetSource {
    pub fn describe(&self) -> String {
        match self {
            DatasetSource::Synthetic(s) => format!(
                "synthetic({} classes, {} features, {}/{} train/test per class, separation {}, sigma {})",
                s.n_classes, s.n_features, s.train_per_class, s.test_per_class, s.separation, s.sigma
            ),
            DatasetSource::Mnist { dir } => format!("idx({})", dir.display()),
        }
    }
}

/// Architecture choice before the data fixes feature and class counts.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSettings {
    pub kind: String,
    pub hidden: usize,
    pub init_scale: f64,
    pub layer_split: Option<usize>,
}

impl ModelSettings {
    pub fn build(
        &self,
        n_features: usize,
        n_classes: usize,
        algorithm: Algorithm,
    ) -> Result<ModelSpec> {
        let kind = match self.kind.as_str() {
            "logreg" => ModelKind::Logreg,
            "mlp" => ModelKind::Mlp {
                hidden: self.hidden,
            },
            other => {
                return Err(Error::config(format!(
                    "model.kind must be logreg or mlp, got `{other}`"
                )))
            }
        };
        let mut spec = ModelSpec {
            kind,
            n_features,
            n_classes,
            init_scale: self.init_scale,
            local_segments: 0,
        };
        // Only the decoupled algorithm keeps segments local; default is the output layer.
        if algorithm == Algorithm::Decoupled {
            spec.local_segments = self.layer_split.unwrap_or(match kind {
                ModelKind::Logreg => 1,
                ModelKind::Mlp { .. } => 2,
            });
        }
        spec.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    P,
    Epochs,
    SampleRate,
    Clients,
    Algorithm,
}

impl SweepAxis {
    pub fn key(&self) -> &'static str {
        match self {
            SweepAxis::Alpha => "partition.alpha",
            SweepAxis::P => "partition.p",
            SweepAxis::Epochs => "local_epochs",
            SweepAxis::SampleRate => "sample_rate",
            SweepAxis::Clients => "clients",
            SweepAxis::Algorithm => "algorithm",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::P => "p",
            SweepAxis::Epochs => "E",
            SweepAxis::SampleRate => "C",
            SweepAxis::Clients => "N",
            SweepAxis::Algorithm => "algorithm",
        }
    }

    fn from_key(key: &str) -> Option<Self> {
        Some(match key {
            "sweep.alpha" => SweepAxis::Alpha,
            "sweep.p" => SweepAxis::P,
            "sweep.E" => SweepAxis::Epochs,
            "sweep.C" => SweepAxis::SampleRate,
            "sweep.N" => SweepAxis::Clients,
            "sweep.algorithm" => SweepAxis::Algorithm,
            _ => return None,
        })
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub partition: PartitionKind,
    pub model: ModelSettings,
    pub federation: FederationConfig,
    pub runs: usize,
    pub output: Option<PathBuf>,
    pub preset: Option<String>,
    pub newcomers: bool,
    pub enforce_recommended: bool,
    pub max_clients: usize,
    pub sweep: Vec<(SweepAxis, Vec<String>)>,
    pub max_cells: usize,
    pub warnings: Vec<String>,
    preset_layer: BTreeMap<String, String>,
    user_layer: BTreeMap<String, String>,
}

fn parse_lines(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!(
                "line {}: expected `key = value`, got `{line}`",
                n + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::config(format!("line {}: empty key", n + 1)));
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::config(format!(
                "line {}: unknown key `{key}`",
                n + 1
            )));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::config(format!(
                "line {}: duplicate key `{key}`",
                n + 1
            )));
        }
    }
    Ok(out)
}

struct Lookup<'a>(&'a BTreeMap<String, String>);

impl Lookup<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, expected: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(format!("`{key}` expects {expected}, got `{v}`"))),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parse(key, "an unsigned integer")?.unwrap_or(default))
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.parse(key, "an unsigned integer")?.unwrap_or(default))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.parse(key, "a number")?.unwrap_or(default);
        if !v.is_finite() {
            return Err(Error::config(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        Ok(self.parse(key, "true or false")?.unwrap_or(default))
    }
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let user = parse_lines(text)?;
        Self::resolve(user)
    }

    /// Applies `key = value` overrides on top of the explicit settings.
    pub fn with_overrides(&self, overrides: &[(&str, String)]) -> Result<Self> {
        let mut user = self.user_layer.clone();
        for (k, v) in overrides {
            if !KNOWN_KEYS.contains(k) {
                return Err(Error::config(format!("unknown key `{k}`")));
            }
            // switching partition kind drops level parameters the old kind needed
            if *k == "partition.kind" {
                for lk in PARTITION_LEVEL_KEYS {
                    user.remove(lk);
                }
            }
            // switching the data source drops the other source's settings
            if *k == "dataset" {
                user.retain(|key, _| !key.starts_with("synthetic.") && key != "mnist_dir");
            }
            user.insert(k.to_string(), v.clone());
        }
        Self::resolve(user)
    }

    fn resolve(user: BTreeMap<String, String>) -> Result<Self> {
        let preset = user.get("preset").cloned();
        let preset_layer = match &preset {
            Some(name) => preset_entries(name)?,
            None => BTreeMap::new(),
        };
        let mut merged = preset_layer.clone();
        if user.contains_key("partition.kind") {
            for k in PARTITION_LEVEL_KEYS {
                merged.remove(k);
            }
        }
        for (k, v) in &user {
            merged.insert(k.clone(), v.clone());
        }

        let missing: Vec<&str> = REQUIRED_KEYS
            .iter()
            .copied()
            .filter(|k| !merged.contains_key(*k))
            .collect();
        if !missing.is_empty() {
            return Err(Error::config(format!(
                "missing required keys: {} (or set `preset`)",
                missing.join(", ")
            )));
        }
        let get = Lookup(&merged);

        let dataset = match get.raw("dataset").unwrap_or("synthetic") {
            "synthetic" => {
                if merged.contains_key("mnist_dir") {
                    return Err(Error::config("`mnist_dir` given but `dataset = synthetic`"));
                }
                let d = SyntheticSpec::default();
                let spec = SyntheticSpec {
                    n_classes: get.usize_or("synthetic.classes", d.n_classes)?,
                    n_features: get.usize_or("synthetic.features", d.n_features)?,
                    train_per_class: get
                        .usize_or("synthetic.train_per_class", d.train_per_class)?,
                    test_per_class: get.usize_or("synthetic.test_per_class", d.test_per_class)?,
                    separation: get.f64_or("synthetic.separation", d.separation)?,
                    sigma: get.f64_or("synthetic.sigma", d.sigma)?,
                };
                spec.validate().map_err(|e| Error::config(e.to_string()))?;
                DatasetSource::Synthetic(spec)
            }
            "mnist" => {
                if user.keys().any(|k| k.starts_with("synthetic.")) {
                    return Err(Error::config(
                        "synthetic.* keys given but `dataset = mnist`",
                    ));
                }
                let dir = get
                    .raw("mnist_dir")
                    .ok_or_else(|| Error::config("`dataset = mnist` needs `mnist_dir`"))?;
                DatasetSource::Mnist {
                    dir: PathBuf::from(dir),
                }
            }
            other => {
                return Err(Error::config(format!(
                    "`dataset` must be synthetic or mnist, got `{other}`"
                )))
            }
        };

        let kind_name = get.raw("partition.kind").unwrap_or("iid");
        let level_key = match kind_name {
            "iid" => None,
            "label-skew" => Some("partition.p"),
            "label-dir" | "quantity-dir" => Some("partition.alpha"),
            "random-shard" => Some("partition.shards"),
            other => {
                return Err(Error::config(format!(
                    "unknown partition.kind `{other}` (expected iid, label-skew, label-dir, random-shard, quantity-dir)"
                )))
            }
        };
        for k in PARTITION_LEVEL_KEYS {
            if merged.contains_key(k) && Some(k) != level_key {
                return Err(Error::config(format!(
                    "`{k}` does not apply to partition.kind = {kind_name}"
                )));
            }
        }
        if let Some(k) = level_key {
            if !merged.contains_key(k) {
                return Err(Error::config(format!(
                    "partition.kind = {kind_name} requires `{k}`"
                )));
            }
        }
        let partition = match kind_name {
            "iid" => PartitionKind::Iid,
            "label-skew" => PartitionKind::LabelSkew {
                p: get.f64_or("partition.p", 0.0)?,
            },
            "label-dir" => PartitionKind::LabelDir {
                alpha: get.f64_or("partition.alpha", 0.0)?,
            },
            "quantity-dir" => PartitionKind::QuantityDir {
                alpha: get.f64_or("partition.alpha", 0.0)?,
            },
            _ => PartitionKind::RandomShard {
                shards_per_client: get.usize_or("partition.shards", 0)?,
            },
        };

        let algorithm: Algorithm = get.raw("algorithm").unwrap_or("fedavg").parse()?;
        let defaults = AlgorithmParams::default();
        let federation = FederationConfig {
            n_clients: get.usize_or("clients", 0)?,
            sample_rate: get.f64_or("sample_rate", 0.0)?,
            rounds: get.usize_or("rounds", 0)?,
            local: LocalTrainSpec {
                epochs: get.usize_or("local_epochs", 0)?,
                batch_size: get.usize_or("batch_size", 10)?,
                prox_mu: 0.0,
                mask: TrainableMask::All,
            },
            opt: OptConfig {
                lr: get.f64_or("lr", 0.01)?,
                momentum: get.f64_or("momentum", 0.9)?,
            },
            algorithm,
            params: AlgorithmParams {
                mu: get.f64_or("algo.mu", defaults.mu)?,
                ft_epochs: get.usize_or("algo.ft_epochs", defaults.ft_epochs)?,
                n_clusters: get.usize_or("algo.clusters", defaults.n_clusters)?,
            },
            seed: get.u64_or("seed", 0)?,
            workers: 1,
        };

        let model = ModelSettings {
            kind: get.raw("model.kind").unwrap_or("mlp").to_string(),
            hidden: get.usize_or("model.hidden", 32)?,
            init_scale: get.f64_or("model.init_scale", 0.3)?,
            layer_split: get.parse("model.layer_split", "an unsigned integer")?,
        };

        let mut sweep = Vec::new();
        for (k, v) in &merged {
            if let Some(axis) = SweepAxis::from_key(k) {
                let values: Vec<String> = v
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if values.is_empty() {
                    return Err(Error::config(format!("`{k}` lists no values")));
                }
                sweep.push((axis, values));
            }
        }
        // canonical axis order: declaration order of SweepAxis
        sweep.sort_by_key(|(a, _)| *a as u8);

        let mut config = ExperimentConfig {
            dataset,
            partition,
            model,
            federation,
            runs: get.usize_or("runs", 3)?,
            output: get.raw("output").map(PathBuf::from),
            preset,
            newcomers: get.bool_or("newcomers", false)?,
            enforce_recommended: get.bool_or("enforce_recommended", false)?,
            max_clients: get.usize_or("max_clients", DEFAULT_MAX_CLIENTS)?,
            sweep,
            max_cells: get.usize_or("sweep.max_cells", DEFAULT_MAX_CELLS)?,
            warnings: Vec::new(),
            preset_layer,
            user_layer: user,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&mut self) -> Result<()> {
        let cfg = |e: Error| Error::config(e.to_string());
        if self.runs == 0 {
            return Err(Error::config("`runs` must be at least 1"));
        }
        if self.federation.n_clients > self.max_clients {
            return Err(Error::config(format!(
                "{} clients exceeds the cap of {} (raise `max_clients`)",
                self.federation.n_clients, self.max_clients
            )));
        }
        self.federation.validate().map_err(cfg)?;
        PartitionSpec {
            kind: self.partition,
            n_clients: self.federation.n_clients,
        }
        .validate()
        .map_err(cfg)?;
        if !matches!(self.model.kind.as_str(), "logreg" | "mlp") {
            return Err(Error::config(format!(
                "model.kind must be logreg or mlp, got `{}`",
                self.model.kind
            )));
        }
        let window =
            crate::metrics::gfl_window(self.federation.sample_rate, self.federation.n_clients);
        if self.federation.algorithm.has_global_model() && self.federation.rounds < window {
            return Err(Error::config(format!(
                "rounds = {} is shorter than the global-metric window of {window} rounds",
                self.federation.rounds
            )));
        }
        if self.newcomers && self.federation.n_clients < 5 {
            return Err(Error::config("`newcomers = true` needs at least 5 clients"));
        }
        self.warnings = self.recommendation_warnings();
        Ok(())
    }

    /// Deviations from the recommended experimental settings; only reported
    /// when `enforce_recommended` is on.
    pub fn recommendation_warnings(&self) -> Vec<String> {
        if !self.enforce_recommended {
            return Vec::new();
        }
        let mut w = Vec::new();
        let c = self.federation.sample_rate;
        let (lo, hi) = RECOMMENDED_SAMPLE_RATE;
        if c < lo || c > hi {
            w.push(format!(
                "sample_rate = {c} is outside the recommended band {lo} <= C <= {hi}"
            ));
        }
        if !RECOMMENDED_EPOCHS.contains(&self.federation.local.epochs) {
            w.push(format!(
                "local_epochs = {} is not one of the recommended values {:?}",
                self.federation.local.epochs, RECOMMENDED_EPOCHS
            ));
        }
        if !RECOMMENDED_CLIENTS.contains(&self.federation.n_clients) {
            w.push(format!(
                "clients = {} is not one of the recommended values {:?}",
                self.federation.n_clients, RECOMMENDED_CLIENTS
            ));
        }
        w
    }

    /// Resolved settings as canonical `key = value` text (sorted, no sweep keys).
    pub fn canonical_text(&self) -> String {
        let mut merged = self.preset_layer.clone();
        if self.user_layer.contains_key("partition.kind") {
            for k in PARTITION_LEVEL_KEYS {
                merged.remove(k);
            }
        }
        for (k, v) in &self.user_layer {
            merged.insert(k.clone(), v.clone());
        }
        let mut out = String::new();
        for (k, v) in merged
            .iter()
            .filter(|(k, _)| !k.starts_with("sweep.") && k.as_str() != "output")
        {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn digest(&self) -> String {
        format!("{:016x}", hash_bytes(self.canonical_text().as_bytes()))
    }

    pub fn partition_spec(&self) -> PartitionSpec {
        PartitionSpec {
            kind: self.partition,
            n_clients: self.federation.n_clients,
        }
    }

    pub fn set_workers(&mut self, workers: usize) {
        self.federation.workers = workers.max(1);
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
        algorithm = fedavg
        partition.kind = label-dir
        partition.alpha = 0.1   # trailing comment
        clients = 20
        sample_rate = 0.2
        rounds = 10
        local_epochs = 5
    ";

    #[test]
    fn minimal_file_parses() {
        let c = ExperimentConfig::from_text(MINIMAL).unwrap();
        assert_eq!(c.partition, PartitionKind::LabelDir { alpha: 0.1 });
        assert_eq!(c.federation.n_clients, 20);
        assert_eq!(c.federation.local.epochs, 5);
        assert_eq!(c.federation.local.batch_size, 10);
        assert_eq!(c.runs, 3);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn empty_file_lists_required_keys() {
        let err = ExperimentConfig::from_text("# nothing\n").unwrap_err();
        let msg = err.to_string();
        assert!(err.is_config());
        for k in REQUIRED_KEYS {
            assert!(msg.contains(k), "{msg}");
        }
    }

    #[test]
    fn unknown_key_names_the_key() {
        let err =
            ExperimentConfig::from_text(&format!("{MINIMAL}\nlearning_rate = 0.1\n")).unwrap_err();
        assert!(err.to_string().contains("learning_rate"));
    }

    #[test]
    fn type_mismatch_names_expected_type() {
        let text = MINIMAL.replace("clients = 20", "clients = twenty");
        let err = ExperimentConfig::from_text(&text).unwrap_err();
        assert!(err.to_string().contains("unsigned integer"), "{err}");
    }

    #[test]
    fn level_key_must_match_kind() {
        let text = MINIMAL.replace("partition.alpha = 0.1", "partition.p = 0.3");
        assert!(ExperimentConfig::from_text(&text).is_err());
        let text = MINIMAL.replace("partition.alpha = 0.1", "");
        assert!(ExperimentConfig::from_text(&text).is_err());
    }

    #[test]
    fn recommended_band_warning() {
        let text = MINIMAL.replace("sample_rate = 0.2", "sample_rate = 0.5");
        let quiet = ExperimentConfig::from_text(&text).unwrap();
        assert!(quiet.warnings.is_empty());
        let loud =
            ExperimentConfig::from_text(&format!("{text}\nenforce_recommended = true\n")).unwrap();
        assert!(
            loud.warnings.iter().any(|w| w.contains("0.1 <= C <= 0.4")),
            "{:?}",
            loud.warnings
        );
    }

    #[test]
    fn client_cap() {
        let text = MINIMAL.replace("clients = 20", "clients = 500").replace("rounds = 10", "rounds = 100");
        assert!(ExperimentConfig::from_text(&text)
            .unwrap_err()
            .to_string()
            .contains("max_clients"));
        let ok = ExperimentConfig::from_text(&format!("{text}\nmax_clients = 500\n")).unwrap();
        assert_eq!(ok.federation.n_clients, 500);
    }

    #[test]
    fn preset_expands_then_overrides() {
        let c = ExperimentConfig::from_text("preset = pfl1\n").unwrap();
        assert_eq!(c.federation.n_clients, 100);
        assert_eq!(c.federation.sample_rate, 0.1);
        assert_eq!(c.federation.local.epochs, 10);
        assert_eq!(c.federation.rounds, 100);
        assert_eq!(c.partition, PartitionKind::LabelSkew { p: 0.3 });
        match &c.dataset {
            DatasetSource::Synthetic(s) => assert_eq!(s.n_classes, 10),
            other => panic!("{other:?}"),
        }

        let o = ExperimentConfig::from_text(
            "preset = pfl1\nrounds = 12\npartition.kind = label-dir\npartition.alpha = 0.2\n",
        )
        .unwrap();
        assert_eq!(o.federation.rounds, 12);
        assert_eq!(o.partition, PartitionKind::LabelDir { alpha: 0.2 });
        assert!(ExperimentConfig::from_text("preset = pfl9\n").is_err());
    }

    #[test]
    fn every_preset_resolves() {
        for name in super::super::presets::preset_names() {
            let c = ExperimentConfig::from_text(&format!("preset = {name}\n")).unwrap();
            assert_eq!(c.preset.as_deref(), Some(name));
            assert_eq!(c.federation.rounds, 100);
            let DatasetSource::Synthetic(s) = &c.dataset else {
                panic!("{name}")
            };
            assert!(s.n_classes == 10 || s.n_classes == 20);
            c.model
                .build(s.n_features, s.n_classes, c.federation.algorithm)
                .unwrap();
        }
    }

    #[test]
    fn overrides_reresolve() {
        let c = ExperimentConfig::from_text(MINIMAL).unwrap();
        let o = c
            .with_overrides(&[
                ("local_epochs", "1".into()),
                ("partition.alpha", "0.5".into()),
            ])
            .unwrap();
        assert_eq!(o.federation.local.epochs, 1);
        assert_eq!(o.partition, PartitionKind::LabelDir { alpha: 0.5 });
        assert_ne!(c.digest(), o.digest());
        assert!(c.with_overrides(&[("bogus", "1".into())]).is_err());
    }

    #[test]
    fn sweep_axes_parse() {
        let c = ExperimentConfig::from_text(&format!(
            "{MINIMAL}\nsweep.E = 1, 10\nsweep.alpha = 0.05,0.1,0.3,1.0\n"
        ))
        .unwrap();
        assert_eq!(c.sweep.len(), 2);
        assert_eq!(c.sweep[0].0, SweepAxis::Alpha);
        assert_eq!(c.sweep[1].1, vec!["1".to_string(), "10".to_string()]);
    }

    #[test]
    fn decoupled_default_split_is_output_layer() {
        let m = ModelSettings {
            kind: "mlp".into(),
            hidden: 8,
            init_scale: 0.1,
            layer_split: None,
        };
        assert_eq!(
            m.build(4, 3, Algorithm::Decoupled).unwrap().local_segments,
            2
        );
        assert_eq!(m.build(4, 3, Algorithm::Fedavg).unwrap().local_segments, 0);
    }
}
