mod common;

use std::collections::BTreeSet;

use fedsim::exp::{
    row_config, run_sweep, summarize, ExperimentConfig, METRIC_GFL, METRIC_NEWCOMER, METRIC_PFL,
};

const BASE: &str = "
    # tiny grid used across these tests
    algorithm = fedavg
    partition.kind = label-dir
    partition.alpha = 0.5
    clients = 10
    sample_rate = 0.2
    rounds = 3
    local_epochs = 1
    runs = 2
    algo.ft_epochs = 1
    synthetic.train_per_class = 20
    synthetic.test_per_class = 10
    model.hidden = 8
";

fn base_with(overrides: &[(&str, &str)]) -> ExperimentConfig {
    let o: Vec<(&str, String)> = overrides.iter().map(|&(k, v)| (k, v.to_string())).collect();
    ExperimentConfig::from_text(BASE)
        .unwrap()
        .with_overrides(&o)
        .unwrap()
}

#[test]
fn rows_round_trip_to_their_cell_config() {
    let cfg = base_with(&[
        ("sweep.alpha", "0.1, 1.0"),
        ("sweep.algorithm", "fedavg, fedavg_ft"),
        ("sweep.E", "1, 2"),
    ]);
    let out = run_sweep(&cfg).unwrap();
    assert!(out.failures.is_empty());
    assert_eq!(out.cells.len(), 8);
    for row in &out.rows {
        let cell: usize = row.run_id[1..5].parse().unwrap();
        let rebuilt = row_config(&cfg, row).unwrap();
        let mut expected = out.cells[cell].config.clone();
        expected.federation.seed = row.seed;
        expected.sweep.clear();
        assert_eq!(rebuilt.federation, expected.federation, "{row:?}");
        assert_eq!(rebuilt.partition, expected.partition);
        assert_eq!(rebuilt.dataset, expected.dataset);
        assert_eq!(rebuilt.model, expected.model);
    }
}

#[test]
fn one_cell_three_runs_uses_distinct_seeds() {
    let cfg = base_with(&[("runs", "3"), ("algorithm", "fedavg_ft")]);
    let out = run_sweep(&cfg).unwrap();
    let seeds: BTreeSet<u64> = out.rows.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 3);
    let summary = summarize(&out.rows);
    let gfl = summary.iter().find(|s| s.metric == METRIC_GFL).unwrap();
    let pfl = summary.iter().find(|s| s.metric == METRIC_PFL).unwrap();
    assert_eq!((gfl.runs, pfl.runs), (3, 3));
    let values: Vec<f64> = out
        .rows
        .iter()
        .filter(|r| r.metric == METRIC_GFL)
        .map(|r| r.value)
        .collect();
    let mean = values.iter().sum::<f64>() / 3.0;
    assert!((gfl.mean - mean).abs() < 1e-12);
}

#[test]
fn metric_rows_follow_algorithm_class() {
    let cfg = base_with(&[
        ("runs", "1"),
        ("sweep.algorithm", "fedavg, fedavg_ft, solo"),
        ("newcomers", "true"),
    ]);
    let out = run_sweep(&cfg).unwrap();
    let metrics = |alg: &str| -> BTreeSet<String> {
        out.rows
            .iter()
            .filter(|r| r.algorithm == alg)
            .map(|r| r.metric.clone())
            .collect()
    };
    assert_eq!(
        metrics("fedavg"),
        ["fairness", METRIC_GFL, METRIC_NEWCOMER]
            .map(String::from)
            .into()
    );
    assert_eq!(
        metrics("fedavg_ft"),
        ["fairness", METRIC_GFL, METRIC_NEWCOMER, METRIC_PFL]
            .map(String::from)
            .into()
    );
    assert!(!metrics("solo").contains(METRIC_GFL));
    assert!(out.rows.iter().all(|r| r.value.is_finite()));
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let cfg = base_with(&[
        ("sweep.alpha", "0.1, 1.0"),
        ("sweep.algorithm", "fedavg, scaffold"),
    ]);
    let serial = run_sweep(&cfg).unwrap();
    let mut par_cfg = cfg.clone();
    par_cfg.set_workers(4);
    let parallel = run_sweep(&par_cfg).unwrap();
    assert_eq!(serial.rows, parallel.rows);
    assert_eq!(
        fedsim::exp::rows_to_csv(&serial.rows).unwrap(),
        fedsim::exp::rows_to_csv(&parallel.rows).unwrap()
    );
}

#[test]
fn failing_cell_becomes_error_row_and_sweep_continues() {
    // 200 training samples: 2 shards per client divide evenly for N=10 but not N=7.
    let cfg = base_with(&[
        ("runs", "1"),
        ("partition.kind", "random-shard"),
        ("partition.shards", "2"),
        ("sweep.N", "10, 7"),
    ]);
    let out = run_sweep(&cfg).unwrap();
    assert_eq!(out.cells.len(), 2);
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].cell, 1);
    assert!(
        out.failures[0].message.contains("7 clients"),
        "{}",
        out.failures[0].message
    );
    assert!(out
        .rows
        .iter()
        .any(|r| r.metric == METRIC_GFL && r.n_clients == 10));
    let errors: Vec<_> = out.rows.iter().filter(|r| r.metric == "error").collect();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0].n_clients, 7);
}

#[test]
fn newcomer_twins_match_their_trainer() {
    let gaps: Vec<f64> = (0..3).map(common::newcomer_twin_gap).collect();
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!(mean_gap.abs() <= 0.05, "gaps {gaps:?}");
}
