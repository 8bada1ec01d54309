use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fedsim::exp::{
    incentive_boundary, load_config, load_dataset, read_csv, run_seed, run_sweep, summarize,
    write_outputs, ExperimentConfig, ResultRow,
};
use fedsim::partition::partition;
use fedsim::rng::{purpose, Rng};
use fedsim::Error;

#[derive(Parser)]
#[command(
    name = "fedsim",
    version,
    about = "Deterministic federated-learning simulation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Base seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Independent runs per cell (overrides `runs`).
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads for running cells concurrently.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (overrides `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Load IDX files from this directory instead of synthetic data.
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    /// Warn about settings outside the recommended ranges.
    #[arg(long)]
    enforce_recommended: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the client partition manifest and class histograms.
    Partition {
        config: PathBuf,
        #[command(flatten)]
        flags: Overrides,
    },
    /// Run a single cell `runs` times.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Overrides,
    },
    /// Run every cell of the sweep grid.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        flags: Overrides,
    },
    /// Aggregate result CSVs and locate the incentive boundary.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Algorithm whose global metric is compared.
        #[arg(long, default_value = "fedavg")]
        gfl_baseline: String,
        /// Algorithm whose personal metric is compared.
        #[arg(long, default_value = "fedavg_ft")]
        pfl_baseline: String,
        /// Write the boundary report as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure(path: &Path, flags: &Overrides) -> Result<(ExperimentConfig, Option<PathBuf>), Error> {
    let base = load_config(path)?;
    let mut o: Vec<(&str, String)> = Vec::new();
    if let Some(s) = flags.seed {
        o.push(("seed", s.to_string()));
    }
    if let Some(r) = flags.runs {
        o.push(("runs", r.to_string()));
    }
    if let Some(d) = &flags.mnist_dir {
        o.push(("dataset", "mnist".into()));
        o.push(("mnist_dir", d.display().to_string()));
    }
    if flags.enforce_recommended {
        o.push(("enforce_recommended", "true".into()));
    }
    let mut cfg = base.with_overrides(&o)?;
    cfg.set_workers(flags.workers.unwrap_or(1));
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let out = flags.out.clone().or_else(|| cfg.output.clone());
    Ok((cfg, out))
}

fn cmd_partition(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<(), Error> {
    let seed = run_seed(cfg.federation.seed, 0, 0);
    let (train, test) = load_dataset(&cfg.dataset, seed)?;
    let parts = partition(
        &train,
        &test,
        &cfg.partition_spec(),
        &mut Rng::new(seed).derive(&[purpose::PARTITION]),
    )?;
    let mut manifest = String::new();
    let mut jsonl = String::new();
    for p in &parts {
        let classes: Vec<String> = p.owned_classes.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            manifest,
            "client,{},classes,{},train_n,{},test_n,{}",
            p.client,
            classes.join(";"),
            p.train.len(),
            p.test.len()
        );
        let hist = train.histogram(&p.train);
        let line = serde_json::json!({
            "client": p.client,
            "classes": p.owned_classes,
            "train_n": p.train.len(),
            "test_n": p.test.len(),
            "histogram": hist,
        });
        let _ = writeln!(jsonl, "{line}");
    }
    for p in &parts {
        let hist: Vec<String> = train
            .histogram(&p.train)
            .iter()
            .map(|c| c.to_string())
            .collect();
        let _ = writeln!(manifest, "histogram,{},{}", p.client, hist.join(";"));
    }
    match out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("partition.csv"), &manifest)?;
            fs::write(dir.join("partition.jsonl"), &jsonl)?;
            println!("wrote {} clients to {}", parts.len(), dir.display());
        }
        None => print!("{manifest}"),
    }
    Ok(())
}

fn cmd_sweep(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<(), Error> {
    let outcome = run_sweep(cfg)?;
    for s in summarize(&outcome.rows) {
        println!("{}", s.display());
    }
    for f in &outcome.failures {
        eprintln!(
            "error: cell {} run {} (seed {}): {}",
            f.cell, f.run, f.seed, f.message
        );
    }
    if let Some(dir) = out {
        let paths = write_outputs(&dir, cfg, &outcome)?;
        println!("wrote {}", paths.csv.display());
    }
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{} run(s) failed",
            outcome.failures.len()
        )))
    }
}

type GroupKey = (String, usize, u64, usize);

fn cmd_report(csvs: &[PathBuf], gfl: &str, pfl: &str, out: Option<PathBuf>) -> Result<(), Error> {
    let mut rows: Vec<ResultRow> = Vec::new();
    for p in csvs {
        rows.extend(read_csv(p)?);
    }
    for s in summarize(&rows) {
        println!("{}", s.display());
    }
    let mut groups: BTreeMap<GroupKey, Vec<ResultRow>> = BTreeMap::new();
    for r in &rows {
        let key = (
            r.partition_kind.clone(),
            r.local_epochs,
            r.sample_rate.to_bits(),
            r.n_clients,
        );
        groups.entry(key).or_default().push(r.clone());
    }
    let mut reports = Vec::new();
    for ((kind, e, c, n), group) in &groups {
        let label = format!("{kind} E={e} C={} N={n}", f64::from_bits(*c));
        match incentive_boundary(group, gfl, pfl) {
            Ok(rep) => {
                for v in &rep.levels {
                    println!(
                        "{label} level {}: gFL {:.4} pFL {:.4} -> {:?}{}",
                        v.level,
                        v.gfl_mean,
                        v.pfl_mean,
                        v.winner,
                        if v.neither_incentivized {
                            " (neither incentivized)"
                        } else {
                            ""
                        }
                    );
                }
                println!("{label} boundary: {}", rep.boundary);
                reports.push(serde_json::json!({ "group": label, "report": rep }));
            }
            Err(e) => println!("{label} boundary: not available ({e})"),
        }
    }
    if let Some(path) = out {
        let text =
            serde_json::to_string_pretty(&reports).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(path, text + "\n")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Partition { config, flags } => {
            let (cfg, out) = configure(&config, &flags)?;
            cmd_partition(&cfg, out)
        }
        Command::Run { config, flags } => {
            let (cfg, out) = configure(&config, &flags)?;
            if !cfg.sweep.is_empty() {
                return Err(Error::Config(
                    "`run` takes a single cell; use `sweep` for sweep.* keys".into(),
                ));
            }
            cmd_sweep(&cfg, out)
        }
        Command::Sweep { config, flags } => {
            let (cfg, out) = configure(&config, &flags)?;
            cmd_sweep(&cfg, out)
        }
        Command::Report {
            csv,
            gfl_baseline,
            pfl_baseline,
            out,
        } => cmd_report(&csv, &gfl_baseline, &pfl_baseline, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fedsim: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
