//! Client data partitioners: IID, label skew, label Dirichlet, random shards
//! and quantity skew. Every partitioner is an exact cover of the train split.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{allocate_local_test, Dataset};
use crate::error::{Error, Result};
use crate::rng::{dirichlet_sample, Rng};

const MAX_REPAIR_ATTEMPTS: u64 = 100;

// stream tags local to partitioning
const TAG_PERMUTE: u64 = 0x10;
const TAG_CLASSES: u64 = 0x11;
const TAG_PROPORTIONS: u64 = 0x12;
const TAG_CLASS_SHUFFLE: u64 = 0x13;
const TAG_REPAIR: u64 = 0x14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PartitionKind {
    Iid,
    LabelSkew { p: f64 },
    LabelDir { alpha: f64 },
    RandomShard { shards_per_client: usize },
    QuantityDir { alpha: f64 },
}

impl PartitionKind {
    pub fn name(&self) -> &'static str {
        match self {
            PartitionKind::Iid => "iid",
            PartitionKind::LabelSkew { .. } => "label-skew",
            PartitionKind::LabelDir { .. } => "label-dir",
            PartitionKind::RandomShard { .. } => "random-shard",
            PartitionKind::QuantityDir { .. } => "quantity-dir",
        }
    }

    /// The heterogeneity level: `alpha`, `p`, or the shard count.
    pub fn level(&self) -> Option<f64> {
        match *self {
            PartitionKind::Iid => None,
            PartitionKind::LabelSkew { p } => Some(p),
            PartitionKind::LabelDir { alpha } | PartitionKind::QuantityDir { alpha } => Some(alpha),
            PartitionKind::RandomShard { shards_per_client } => Some(shards_per_client as f64),
        }
    }
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level() {
            Some(l) => write!(f, "{}({l})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub kind: PartitionKind,
    pub n_clients: usize,
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 {
            return Err(Error::invalid("partition needs at least one client"));
        }
        match self.kind {
            PartitionKind::LabelSkew { p } if !(p > 0.0 && p <= 1.0) => Err(Error::invalid(
                format!("label-skew p must be in (0, 1], got {p}"),
            )),
            PartitionKind::LabelDir { alpha } | PartitionKind::QuantityDir { alpha }
                if !(alpha > 0.0 && alpha.is_finite()) =>
            {
                Err(Error::invalid(format!(
                    "dirichlet alpha must be positive, got {alpha}"
                )))
            }
            PartitionKind::RandomShard {
                shards_per_client: 0,
            } => Err(Error::invalid(
                "random-shard needs at least one shard per client",
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientPartition {
    pub client: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub owned_classes: BTreeSet<usize>,
}

impl ClientPartition {
    fn from_indices(client: usize, mut train: Vec<usize>, data: &Dataset) -> Self {
        train.sort_unstable();
        let owned_classes = train.iter().map(|&i| data.label(i)).collect();
        ClientPartition {
            client,
            train,
            test: Vec::new(),
            owned_classes,
        }
    }

    pub fn train_len(&self) -> usize {
        self.train.len()
    }
}

/// Partitions `train` and attaches each client's full local test set from `test`.
pub fn partition(
    train: &Dataset,
    test: &Dataset,
    spec: &PartitionSpec,
    rng: &mut Rng,
) -> Result<Vec<ClientPartition>> {
    let mut parts = partition_train(train, spec, rng)?;
    attach_local_tests(&mut parts, test)?;
    Ok(parts)
}

pub fn partition_train(
    train: &Dataset,
    spec: &PartitionSpec,
    rng: &mut Rng,
) -> Result<Vec<ClientPartition>> {
    spec.validate()?;
    let n = spec.n_clients;
    match spec.kind {
        PartitionKind::Iid => partition_iid(train, n, rng),
        PartitionKind::LabelSkew { p } => partition_label_skew(train, n, p, rng),
        PartitionKind::LabelDir { alpha } => partition_label_dir(train, n, alpha, rng),
        PartitionKind::RandomShard { shards_per_client } => {
            partition_random_shard(train, n, shards_per_client, rng)
        }
        PartitionKind::QuantityDir { alpha } => partition_quantity_dir(train, n, alpha, rng),
    }
}

pub fn attach_local_tests(parts: &mut [ClientPartition], test: &Dataset) -> Result<()> {
    for p in parts {
        p.test = allocate_local_test(test, &p.owned_classes)?;
    }
    Ok(())
}

/// Splits `items` into `n` consecutive chunks whose sizes differ by at most one.
fn near_equal_chunks(items: &[usize], n: usize) -> Vec<Vec<usize>> {
    let base = items.len() / n;
    let extra = items.len() % n;
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let len = base + usize::from(i < extra);
        out.push(items[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Integer apportionment of `total` by `shares` with largest remainders;
/// ties go to the lowest index.
pub fn largest_remainder(total: usize, shares: &[f64]) -> Vec<usize> {
    let sum: f64 = shares.iter().sum();
    if shares.is_empty() {
        return Vec::new();
    }
    let normalized: Vec<f64> = if sum > 0.0 && sum.is_finite() {
        shares.iter().map(|s| s / sum).collect()
    } else {
        vec![1.0 / shares.len() as f64; shares.len()]
    };
    let quotas: Vec<f64> = normalized.iter().map(|s| s * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = total.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts
}

fn indices_by_class(train: &Dataset) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); train.n_classes()];
    for i in 0..train.len() {
        by_class[train.label(i)].push(i);
    }
    by_class
}

fn check_client_count(train: &Dataset, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("partition needs at least one client"));
    }
    if n > train.len() {
        return Err(Error::invalid(format!(
            "{n} clients but only {} training samples",
            train.len()
        )));
    }
    Ok(())
}

pub fn partition_iid(train: &Dataset, n: usize, rng: &mut Rng) -> Result<Vec<ClientPartition>> {
    check_client_count(train, n)?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    rng.derive(&[TAG_PERMUTE]).shuffle(&mut order);
    Ok(near_equal_chunks(&order, n)
        .into_iter()
        .enumerate()
        .map(|(k, idx)| ClientPartition::from_indices(k, idx, train))
        .collect())
}

/// Classes per client for a label-skew fraction `p`.
pub fn classes_per_client(p: f64, n_classes: usize) -> usize {
    // 0.3 * 10 must give 3, not 4
    let raw = p * n_classes as f64;
    let k = (raw - 1e-9).ceil();
    k.max(0.0) as usize
}

pub fn partition_label_skew(
    train: &Dataset,
    n: usize,
    p: f64,
    rng: &mut Rng,
) -> Result<Vec<ClientPartition>> {
    check_client_count(train, n)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!(
            "label-skew p must be in (0, 1], got {p}"
        )));
    }
    let n_classes = train.n_classes();
    let k = classes_per_client(p, n_classes);
    if k < 1 {
        return Err(Error::invalid(format!(
            "p = {p} gives fewer than one class per client"
        )));
    }
    if n * k < n_classes {
        return Err(Error::invalid(format!(
            "{n} clients owning {k} classes each cannot cover {n_classes} classes"
        )));
    }

    let mut class_rng = rng.derive(&[TAG_CLASSES]);
    let mut owned: Vec<Vec<usize>> = (0..n)
        .map(|_| class_rng.choose_distinct(n_classes, k))
        .collect();

    let mut owners = vec![0usize; n_classes];
    for set in &owned {
        for &c in set {
            owners[c] += 1;
        }
    }
    let mut repair_rng = rng.derive(&[TAG_REPAIR]);
    for c in 0..n_classes {
        let mut attempts = 0;
        while owners[c] == 0 {
            attempts += 1;
            if attempts > MAX_REPAIR_ATTEMPTS as usize * n {
                return Err(Error::invalid(format!(
                    "could not assign an owner to class {c}"
                )));
            }
            let client = repair_rng.below(n);
            let swappable: Vec<usize> = (0..owned[client].len())
                .filter(|&j| owners[owned[client][j]] > 1)
                .collect();
            if swappable.is_empty() {
                continue;
            }
            let slot = swappable[repair_rng.below(swappable.len())];
            owners[owned[client][slot]] -= 1;
            owned[client][slot] = c;
            owners[c] += 1;
        }
    }

    let by_class = indices_by_class(train);
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, members) in by_class.iter().enumerate() {
        let holders: Vec<usize> = (0..n).filter(|&i| owned[i].contains(&c)).collect();
        if members.len() < holders.len() {
            return Err(Error::invalid(format!(
                "class {c} has {} samples but {} owners",
                members.len(),
                holders.len()
            )));
        }
        let mut shuffled = members.clone();
        rng.derive(&[TAG_CLASS_SHUFFLE, c as u64])
            .shuffle(&mut shuffled);
        for (chunk, &client) in near_equal_chunks(&shuffled, holders.len())
            .into_iter()
            .zip(&holders)
        {
            assigned[client].extend(chunk);
        }
    }
    Ok(assigned
        .into_iter()
        .enumerate()
        .map(|(k, idx)| ClientPartition::from_indices(k, idx, train))
        .collect())
}

pub fn partition_label_dir(
    train: &Dataset,
    n: usize,
    alpha: f64,
    rng: &mut Rng,
) -> Result<Vec<ClientPartition>> {
    check_client_count(train, n)?;
    let n_classes = train.n_classes();
    let mut proportions: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            dirichlet_sample(
                &mut rng.derive(&[TAG_PROPORTIONS, i as u64, 0]),
                alpha,
                n_classes,
            )
            .map(|p| p.into_inner())
        })
        .collect::<Result<_>>()?;

    let by_class = indices_by_class(train);
    for attempt in 1..=MAX_REPAIR_ATTEMPTS + 1 {
        let counts: Vec<Vec<usize>> = (0..n_classes)
            .map(|c| {
                let column: Vec<f64> = proportions.iter().map(|p| p[c]).collect();
                largest_remainder(by_class[c].len(), &column)
            })
            .collect();
        let empty: Vec<usize> = (0..n)
            .filter(|&i| counts.iter().all(|col| col[i] == 0))
            .collect();
        if empty.is_empty() {
            let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); n];
            for (c, members) in by_class.iter().enumerate() {
                let mut shuffled = members.clone();
                rng.derive(&[TAG_CLASS_SHUFFLE, c as u64])
                    .shuffle(&mut shuffled);
                let mut start = 0;
                for (i, &cnt) in counts[c].iter().enumerate() {
                    assigned[i].extend_from_slice(&shuffled[start..start + cnt]);
                    start += cnt;
                }
            }
            return Ok(assigned
                .into_iter()
                .enumerate()
                .map(|(k, idx)| ClientPartition::from_indices(k, idx, train))
                .collect());
        }
        if attempt > MAX_REPAIR_ATTEMPTS {
            break;
        }
        for i in empty {
            proportions[i] = dirichlet_sample(
                &mut rng.derive(&[TAG_PROPORTIONS, i as u64, attempt]),
                alpha,
                n_classes,
            )?
            .into_inner();
        }
    }
    Err(Error::invalid(format!(
        "label-dir({alpha}) left a client without samples after {MAX_REPAIR_ATTEMPTS} redraws"
    )))
}

pub fn partition_random_shard(
    train: &Dataset,
    n: usize,
    shards_per_client: usize,
    rng: &mut Rng,
) -> Result<Vec<ClientPartition>> {
    check_client_count(train, n)?;
    if shards_per_client == 0 {
        return Err(Error::invalid(
            "random-shard needs at least one shard per client",
        ));
    }
    let total = train.len();
    let shards = n * shards_per_client;
    if !total.is_multiple_of(shards) {
        let suggestion = (1..=shards_per_client)
            .rev()
            .find(|s| total.is_multiple_of(n * s));
        return Err(Error::invalid(match suggestion {
            Some(s) => format!(
                "{total} samples do not split into {shards} equal shards; largest valid shards_per_client is {s}"
            ),
            None => format!("{total} samples do not split evenly across {n} clients at any shard count"),
        }));
    }
    let shard_len = total / shards;
    let mut sorted: Vec<usize> = (0..total).collect();
    sorted.sort_by_key(|&i| (train.label(i), i));
    let mut shard_ids: Vec<usize> = (0..shards).collect();
    rng.derive(&[TAG_PERMUTE]).shuffle(&mut shard_ids);
    Ok(shard_ids
        .chunks(shards_per_client)
        .enumerate()
        .map(|(k, ids)| {
            let idx = ids
                .iter()
                .flat_map(|&s| sorted[s * shard_len..(s + 1) * shard_len].iter().copied())
                .collect();
            ClientPartition::from_indices(k, idx, train)
        })
        .collect())
}

/// Per-client sizes from one Dirichlet(alpha) draw over clients, built from
/// per-client Gamma components so an empty client can redraw only its own.
pub fn partition_quantity_dir(
    train: &Dataset,
    n: usize,
    alpha: f64,
    rng: &mut Rng,
) -> Result<Vec<ClientPartition>> {
    check_client_count(train, n)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!(
            "dirichlet alpha must be positive, got {alpha}"
        )));
    }
    let draw = |client: usize, attempt: u64| {
        rng.derive(&[TAG_PROPORTIONS, client as u64, attempt])
            .gamma(alpha)
    };
    let mut weights: Vec<f64> = (0..n).map(|i| draw(i, 0)).collect();
    for attempt in 1..=MAX_REPAIR_ATTEMPTS + 1 {
        let counts = largest_remainder(train.len(), &weights);
        let empty: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
        if empty.is_empty() {
            let mut order: Vec<usize> = (0..train.len()).collect();
            rng.derive(&[TAG_PERMUTE]).shuffle(&mut order);
            let mut start = 0;
            return Ok(counts
                .iter()
                .enumerate()
                .map(|(k, &cnt)| {
                    let idx = order[start..start + cnt].to_vec();
                    start += cnt;
                    ClientPartition::from_indices(k, idx, train)
                })
                .collect());
        }
        if attempt > MAX_REPAIR_ATTEMPTS {
            break;
        }
        for i in empty {
            weights[i] = draw(i, attempt);
        }
    }
    Err(Error::invalid(format!(
        "quantity-dir({alpha}) left a client without samples after {MAX_REPAIR_ATTEMPTS} redraws"
    )))
}
