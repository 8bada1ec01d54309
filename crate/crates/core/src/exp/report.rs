//! CSV, manifest and JSON outputs of a sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::mean_std;
use crate::rng::hash_bytes;

use super::config::{ExperimentConfig, RECOMMENDED_SAMPLE_RATE};
use super::sweep::{ResultRow, RunFailure, SweepOutcome, METRIC_ERROR};

pub const CSV_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SUMMARY_FILE: &str = "summary.json";

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

/// Rows as CSV text: fixed column order, LF line endings.
pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    if rows.is_empty() {
        w.write_record([
            "run_id",
            "preset",
            "algorithm",
            "partition_kind",
            "level",
            "E",
            "C",
            "N",
            "seed",
            "metric",
            "value",
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Format(format!("{}: {e}", path.display()))))
        .collect()
}

/// Mean and sample standard deviation of one metric over the runs of a cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
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
    pub metric: String,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
}

impl CellSummary {
    pub fn display(&self) -> String {
        let level = self
            .level
            .map_or_else(|| "-".to_string(), |l| l.to_string());
        format!(
            "{} {} {}={} E={} C={} N={} {}: {:.4} ± {:.4} (runs {})",
            self.preset,
            self.algorithm,
            self.partition_kind,
            level,
            self.local_epochs,
            self.sample_rate,
            self.n_clients,
            self.metric,
            self.mean,
            self.std,
            self.runs
        )
    }
}

type CellKey = (
    String,
    String,
    String,
    Option<u64>,
    usize,
    u64,
    usize,
    String,
);

fn key_of(r: &ResultRow) -> CellKey {
    (
        r.preset.clone(),
        r.algorithm.clone(),
        r.partition_kind.clone(),
        r.level.map(f64::to_bits),
        r.local_epochs,
        r.sample_rate.to_bits(),
        r.n_clients,
        r.metric.clone(),
    )
}

/// Groups rows by everything but seed and run id, in first-appearance order.
/// Error rows are skipped.
pub fn summarize(rows: &[ResultRow]) -> Vec<CellSummary> {
    let mut order: Vec<CellKey> = Vec::new();
    let mut groups: BTreeMap<CellKey, (ResultRow, Vec<f64>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric != METRIC_ERROR) {
        let k = key_of(r);
        groups
            .entry(k.clone())
            .or_insert_with(|| {
                order.push(k);
                (r.clone(), Vec::new())
            })
            .1
            .push(r.value);
    }
    order
        .into_iter()
        .map(|k| {
            let (r, values) = &groups[&k];
            let (mean, std) = mean_std(values);
            CellSummary {
                preset: r.preset.clone(),
                algorithm: r.algorithm.clone(),
                partition_kind: r.partition_kind.clone(),
                level: r.level,
                local_epochs: r.local_epochs,
                sample_rate: r.sample_rate,
                n_clients: r.n_clients,
                metric: r.metric.clone(),
                runs: values.len(),
                mean,
                std,
            }
        })
        .collect()
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Human-readable reporting checklist for a sweep.
pub fn manifest(config: &ExperimentConfig, outcome: &SweepOutcome) -> String {
    let f = &config.federation;
    let mut m = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(m, "{k}: {v}");
    };
    line("config digest", config.digest());
    line(
        "preset",
        config.preset.clone().unwrap_or_else(|| "custom".into()),
    );
    line("dataset", config.dataset.describe());
    line(
        "preprocessing",
        "features clamped to [0, 1]; no augmentation".into(),
    );
    line(
        "architecture",
        format!(
            "{} (hidden {}, init U[-{s}, {s}], biases 0)",
            config.model.kind,
            config.model.hidden,
            s = config.model.init_scale
        ),
    );
    line("algorithm", f.algorithm.name().into());
    line("local epochs (E)", f.local.epochs.to_string());
    line("sample rate (C)", f.sample_rate.to_string());
    line("clients (N)", f.n_clients.to_string());
    line("rounds (T)", f.rounds.to_string());
    line("partition", config.partition.to_string());
    line("batch size", f.local.batch_size.to_string());
    line(
        "optimizer",
        format!(
            "SGD lr {} momentum {}; constant schedule",
            f.opt.lr, f.opt.momentum
        ),
    );
    line(
        "algorithm parameters",
        format!(
            "mu {} fine-tune epochs {} clusters {}",
            f.params.mu, f.params.ft_epochs, f.params.n_clusters
        ),
    );
    line(
        "global metric",
        "mean test accuracy of the server model over the last max(floor(C*N), 1) rounds".into(),
    );
    line(
        "personal metric",
        "unweighted mean over clients of accuracy on each client's full local test set".into(),
    );
    line(
        "fairness",
        "population std of per-client accuracies, percentage points".into(),
    );
    line("newcomers", yes_no(config.newcomers).into());
    line("base seed", f.seed.to_string());
    line("runs per cell (R)", config.runs.to_string());
    line("runs >= 3", yes_no(config.runs >= 3).into());
    let (lo, hi) = RECOMMENDED_SAMPLE_RATE;
    let rates: Vec<f64> = outcome
        .cells
        .iter()
        .map(|c| c.config.federation.sample_rate)
        .collect();
    line(
        "sample rate within recommended band",
        format!(
            "{} ({lo} <= C <= {hi})",
            yes_no(rates.iter().all(|&c| (lo..=hi).contains(&c)))
        ),
    );
    line("cells", outcome.cells.len().to_string());
    for c in &outcome.cells {
        let a: Vec<String> = c
            .assignments
            .iter()
            .map(|(ax, v)| format!("{}={v}", ax.name()))
            .collect();
        line(
            &format!("cell {}", c.index),
            if a.is_empty() {
                "base".into()
            } else {
                a.join(" ")
            },
        );
    }
    line("failed runs", outcome.failures.len().to_string());
    for w in &config.warnings {
        line("warning", w.clone());
    }
    m
}

#[derive(Serialize)]
struct Summary<'a> {
    config_digest: String,
    result_digest: String,
    runs_per_cell: usize,
    cells: Vec<CellSummary>,
    failures: &'a [RunFailure],
    warnings: &'a [String],
}

pub fn summary_json(
    config: &ExperimentConfig,
    outcome: &SweepOutcome,
    csv_text: &str,
) -> Result<String> {
    let s = Summary {
        config_digest: config.digest(),
        result_digest: format!("{:016x}", hash_bytes(csv_text.as_bytes())),
        runs_per_cell: config.runs,
        cells: summarize(&outcome.rows),
        failures: &outcome.failures,
        warnings: &config.warnings,
    };
    serde_json::to_string_pretty(&s).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Clone, Debug)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub summary: PathBuf,
}

/// Writes `results.csv`, `manifest.txt` and `summary.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    outcome: &SweepOutcome,
) -> Result<OutputPaths> {
    fs::create_dir_all(dir)?;
    let csv_text = rows_to_csv(&outcome.rows)?;
    let paths = OutputPaths {
        csv: dir.join(CSV_FILE),
        manifest: dir.join(MANIFEST_FILE),
        summary: dir.join(SUMMARY_FILE),
    };
    fs::write(&paths.csv, &csv_text)?;
    fs::write(&paths.manifest, manifest(config, outcome))?;
    fs::write(
        &paths.summary,
        summary_json(config, outcome, &csv_text)? + "\n",
    )?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, value: f64) -> ResultRow {
        ResultRow {
            run_id: format!("c0000-r{seed:02}"),
            preset: "custom".into(),
            algorithm: "fedavg".into(),
            partition_kind: "label-dir".into(),
            level: Some(0.1),
            local_epochs: 5,
            sample_rate: 0.1,
            n_clients: 20,
            seed,
            metric: "gfl-accuracy".into(),
            value,
        }
    }

    #[test]
    fn summary_uses_sample_std() {
        let rows = [row(0, 0.4), row(1, 0.5), row(2, 0.6)];
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].runs, 3);
        assert!((s[0].mean - 0.5).abs() < 1e-12);
        assert!((s[0].std - 0.1).abs() < 1e-12);
    }

    #[test]
    fn csv_columns_and_line_endings() {
        let text = rows_to_csv(&[row(7, 0.25)]).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "run_id,preset,algorithm,partition_kind,level,E,C,N,seed,metric,value"
        );
        assert_eq!(
            lines.next().unwrap(),
            "c0000-r07,custom,fedavg,label-dir,0.1,5,0.1,20,7,gfl-accuracy,0.25"
        );
        assert!(!text.contains('\r'));
        assert!(rows_to_csv(&[]).unwrap().starts_with("run_id,"));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            row(0, 0.123456789),
            ResultRow {
                level: None,
                partition_kind: "iid".into(),
                ..row(1, 1.0)
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        fs::write(&path, rows_to_csv(&rows).unwrap()).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rows);
    }
}
