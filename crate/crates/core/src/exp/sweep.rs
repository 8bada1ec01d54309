//! Expands sweep axes into cells and runs every cell `runs` times.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate_synthetic, load_mnist_dir, Dataset};
use crate::error::{Error, Result};
use crate::federation::{run_federation, FederationInputs};
use crate::metrics::{metric_report, newcomer_protocol, MetricReport, Provenance};
use crate::partition::partition;
use crate::rng::{hash64, purpose, Rng};

use super::config::{DatasetSource, ExperimentConfig, SweepAxis};

pub const METRIC_GFL: &str = "gfl-accuracy";
pub const METRIC_PFL: &str = "pfl-accuracy";
pub const METRIC_FAIRNESS: &str = "fairness";
pub const METRIC_NEWCOMER: &str = "newcomer-accuracy";
/// Marks a failed run; the value is always 1 and the message goes to the summary.
pub const METRIC_ERROR: &str = "error";

/// One metric value from one run of one cell. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub preset: String,
    pub algorithm: String,
    pub partition_kind: String,
    pub level: Option<f64>,
    #[serde(rename = "E")]
    pub local_epochs: usize,
    #[serde(rename = "C")]
    pub sample_rate: f64,
    #[serde(rename = "N")]
    pub n_clients: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub index: usize,
    pub assignments: Vec<(SweepAxis, String)>,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunFailure {
    pub cell: usize,
    pub run: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub cells: Vec<Cell>,
    pub rows: Vec<ResultRow>,
    pub failures: Vec<RunFailure>,
}

/// Cartesian product of the sweep axes; the last axis varies fastest.
pub fn expand_cells(base: &ExperimentConfig) -> Result<Vec<Cell>> {
    let total = base
        .sweep
        .iter()
        .try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()))
        .unwrap_or(usize::MAX);
    if total > base.max_cells {
        return Err(Error::config(format!(
            "sweep expands to {total} cells, above the cap of {} (raise `sweep.max_cells`)",
            base.max_cells
        )));
    }
    let mut cells = Vec::with_capacity(total);
    for index in 0..total {
        let mut rem = index;
        let mut assignments = Vec::with_capacity(base.sweep.len());
        for (axis, values) in base.sweep.iter().rev() {
            assignments.push((*axis, values[rem % values.len()].clone()));
            rem /= values.len();
        }
        assignments.reverse();
        let overrides: Vec<(&str, String)> = assignments
            .iter()
            .map(|(a, v)| (a.key(), v.clone()))
            .collect();
        let config = base
            .with_overrides(&overrides)
            .map_err(|e| Error::config(format!("sweep cell {index}: {e}")))?;
        cells.push(Cell {
            index,
            assignments,
            config,
        });
    }
    Ok(cells)
}

/// Seed for run `run` of cell `cell`.
pub fn run_seed(base_seed: u64, cell: usize, run: usize) -> u64 {
    hash64(&[base_seed, cell as u64, run as u64])
}

pub fn load_dataset(source: &DatasetSource, seed: u64) -> Result<(Dataset, Dataset)> {
    match source {
        DatasetSource::Synthetic(spec) => {
            generate_synthetic(spec, &mut Rng::new(seed).derive(&[purpose::DATA]))
        }
        DatasetSource::Mnist { dir } => {
            let s = load_mnist_dir(dir)?;
            Ok((s.train, s.test))
        }
    }
}

/// Builds data, partitions and the federation for one seed, trains and scores.
pub fn run_single(config: &ExperimentConfig, seed: u64) -> Result<MetricReport> {
    let (train, test) = load_dataset(&config.dataset, seed)?;
    let model = config.model.build(
        train.n_features(),
        train.n_classes(),
        config.federation.algorithm,
    )?;
    let parts = partition(
        &train,
        &test,
        &config.partition_spec(),
        &mut Rng::new(seed).derive(&[purpose::PARTITION]),
    )?;
    let mut fed = config.federation.clone();
    fed.seed = seed;
    let inputs = FederationInputs {
        model: &model,
        partitions: &parts,
        train: &train,
        test: &test,
    };
    let result = run_federation(&fed, inputs)?;
    let newcomer = if config.newcomers {
        Some(newcomer_protocol(&fed, &model, &parts, &train, &test)?.accuracy)
    } else {
        None
    };
    metric_report(
        &fed,
        &model,
        &result,
        &parts,
        &test,
        newcomer,
        Provenance {
            seed,
            config_digest: config.digest(),
            runs_averaged: 1,
        },
    )
}

fn row_template(config: &ExperimentConfig, cell: usize, run: usize, seed: u64) -> ResultRow {
    let f = &config.federation;
    ResultRow {
        run_id: format!("c{cell:04}-r{run:02}"),
        preset: config
            .preset
            .clone()
            .unwrap_or_else(|| "custom".to_string()),
        algorithm: f.algorithm.name().to_string(),
        partition_kind: config.partition.name().to_string(),
        level: config.partition.level(),
        local_epochs: f.local.epochs,
        sample_rate: f.sample_rate,
        n_clients: f.n_clients,
        seed,
        metric: String::new(),
        value: 0.0,
    }
}

fn report_rows(template: &ResultRow, report: &MetricReport, personalized: bool) -> Vec<ResultRow> {
    let mut metrics: Vec<(&str, f64)> = Vec::new();
    if let Some(g) = report.gfl_accuracy {
        metrics.push((METRIC_GFL, g));
    }
    if personalized {
        metrics.push((METRIC_PFL, report.pfl_accuracy));
    }
    metrics.push((METRIC_FAIRNESS, report.fairness));
    if let Some(n) = report.newcomer_accuracy {
        metrics.push((METRIC_NEWCOMER, n));
    }
    metrics
        .into_iter()
        .map(|(m, v)| ResultRow {
            metric: m.to_string(),
            value: v,
            ..template.clone()
        })
        .collect()
}

/// Runs every cell `runs` times across `config.federation.workers` threads.
/// A failing run is recorded and the rest of the sweep continues.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    let cells = expand_cells(config)?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.runs).map(move |r| (c, r)))
        .collect();
    let workers = config.federation.workers.max(1);
    let run_job = |&(c, r): &(usize, usize)| {
        let mut cell_cfg = cells[c].config.clone();
        cell_cfg.set_workers(1);
        let seed = run_seed(config.federation.seed, c, r);
        let template = row_template(&cell_cfg, c, r, seed);
        match run_single(&cell_cfg, seed) {
            Ok(report) => Ok(report_rows(
                &template,
                &report,
                cell_cfg.federation.algorithm.is_personalized(),
            )),
            Err(e) => Err(Box::new((
                template,
                RunFailure {
                    cell: c,
                    run: r,
                    seed,
                    message: e.to_string(),
                },
            ))),
        }
    };
    let results: Vec<_> = if workers > 1 && jobs.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| {
                Error::invalid(format!("could not start {workers} worker threads: {e}"))
            })?;
        pool.install(|| jobs.par_iter().map(run_job).collect())
    } else {
        jobs.iter().map(run_job).collect()
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for res in results {
        match res {
            Ok(r) => rows.extend(r),
            Err(failed) => {
                let (template, failure) = *failed;
                rows.push(ResultRow {
                    metric: METRIC_ERROR.to_string(),
                    value: 1.0,
                    ..template
                });
                failures.push(failure);
            }
        }
    }
    Ok(SweepOutcome {
        cells,
        rows,
        failures,
    })
}

/// Rebuilds the configuration that produced `row` from the base configuration.
pub fn row_config(base: &ExperimentConfig, row: &ResultRow) -> Result<ExperimentConfig> {
    let mut overrides: Vec<(&str, String)> = vec![
        ("algorithm", row.algorithm.clone()),
        ("partition.kind", row.partition_kind.clone()),
        ("local_epochs", row.local_epochs.to_string()),
        ("sample_rate", row.sample_rate.to_string()),
        ("clients", row.n_clients.to_string()),
        ("seed", row.seed.to_string()),
    ];
    let level_key = match row.partition_kind.as_str() {
        "label-skew" => Some("partition.p"),
        "label-dir" | "quantity-dir" => Some("partition.alpha"),
        "random-shard" => Some("partition.shards"),
        _ => None,
    };
    if let (Some(k), Some(l)) = (level_key, row.level) {
        overrides.push((k, l.to_string()));
    }
    let mut cfg = base.with_overrides(&overrides)?;
    // sweep axes are already pinned by the row
    cfg.sweep.clear();
    Ok(cfg)
}
