//! Where the better-performing approach flips between global and personalized FL.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::mean_std;

use super::sweep::{ResultRow, METRIC_GFL, METRIC_PFL};

/// Absolute mean difference treated as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Gfl,
    Pfl,
    Tie,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelVerdict {
    pub level: f64,
    pub gfl_mean: f64,
    pub gfl_std: f64,
    pub pfl_mean: f64,
    pub pfl_std: f64,
    pub solo: Option<(f64, f64)>,
    pub winner: Winner,
    /// Training alone is within its std of the best federated approach.
    pub neither_incentivized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// The winner changes between these adjacent levels.
    Between {
        low: f64,
        high: f64,
        low_winner: Winner,
        high_winner: Winner,
    },
    /// pFL wins at every level.
    BeyondMaxLevel,
    /// gFL wins at every level.
    BelowMinLevel,
    /// All levels tie.
    NoBoundary,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Between { low, high, .. } => write!(f, "between {low} and {high}"),
            Boundary::BeyondMaxLevel => f.write_str("beyond max level"),
            Boundary::BelowMinLevel => f.write_str("below min level"),
            Boundary::NoBoundary => f.write_str("tie, no boundary"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub gfl_baseline: String,
    pub pfl_baseline: String,
    /// Ascending by level.
    pub levels: Vec<LevelVerdict>,
    pub boundary: Boundary,
}

fn values_by_level(rows: &[ResultRow], algorithm: &str, metric: &str) -> BTreeMap<u64, Vec<f64>> {
    let mut out: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in rows
        .iter()
        .filter(|r| r.algorithm == algorithm && r.metric == metric)
    {
        if let Some(l) = r.level {
            out.entry(l.to_bits()).or_default().push(r.value);
        }
    }
    out
}

/// Classifies each heterogeneity level by comparing the gFL baseline's
/// global metric with the pFL baseline's personal metric. Rows of the
/// `solo` algorithm, when present, mark levels where neither is worth it.
///
/// Rows should come from one partition kind and one (E, C, N) setting.
pub fn incentive_boundary(
    rows: &[ResultRow],
    gfl_baseline: &str,
    pfl_baseline: &str,
) -> Result<BoundaryReport> {
    let gfl = values_by_level(rows, gfl_baseline, METRIC_GFL);
    let pfl = values_by_level(rows, pfl_baseline, METRIC_PFL);
    let solo = values_by_level(rows, "solo", METRIC_PFL);
    if gfl.is_empty() {
        return Err(Error::invalid(format!(
            "no {METRIC_GFL} rows for gFL baseline `{gfl_baseline}`"
        )));
    }
    if pfl.is_empty() {
        return Err(Error::invalid(format!(
            "no {METRIC_PFL} rows for pFL baseline `{pfl_baseline}`"
        )));
    }
    let mut levels: Vec<f64> = gfl
        .keys()
        .filter(|k| pfl.contains_key(k))
        .map(|&k| f64::from_bits(k))
        .collect();
    levels.sort_by(f64::total_cmp);
    if levels.len() < 2 {
        return Err(Error::invalid(format!(
            "need both baselines at >= 2 heterogeneity levels, found {}",
            levels.len()
        )));
    }

    let verdicts: Vec<LevelVerdict> = levels
        .iter()
        .map(|&level| {
            let key = level.to_bits();
            let (gfl_mean, gfl_std) = mean_std(&gfl[&key]);
            let (pfl_mean, pfl_std) = mean_std(&pfl[&key]);
            let winner = if (pfl_mean - gfl_mean).abs() <= TIE_TOLERANCE {
                Winner::Tie
            } else if pfl_mean > gfl_mean {
                Winner::Pfl
            } else {
                Winner::Gfl
            };
            let solo = solo.get(&key).map(|v| mean_std(v));
            let best = gfl_mean.max(pfl_mean);
            let neither_incentivized = solo.is_some_and(|(m, s)| m + s >= best);
            LevelVerdict {
                level,
                gfl_mean,
                gfl_std,
                pfl_mean,
                pfl_std,
                solo,
                winner,
                neither_incentivized,
            }
        })
        .collect();

    let decided: Vec<&LevelVerdict> = verdicts
        .iter()
        .filter(|v| v.winner != Winner::Tie)
        .collect();
    let boundary = if decided.is_empty() {
        Boundary::NoBoundary
    } else if let Some(w) = decided.windows(2).find(|w| w[0].winner != w[1].winner) {
        Boundary::Between {
            low: w[0].level,
            high: w[1].level,
            low_winner: w[0].winner,
            high_winner: w[1].winner,
        }
    } else if decided[0].winner == Winner::Pfl {
        Boundary::BeyondMaxLevel
    } else {
        Boundary::BelowMinLevel
    };
    Ok(BoundaryReport {
        gfl_baseline: gfl_baseline.to_string(),
        pfl_baseline: pfl_baseline.to_string(),
        levels: verdicts,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(algorithm: &str, metric: &str, level: f64, value: f64) -> ResultRow {
        ResultRow {
            run_id: "r".into(),
            preset: "custom".into(),
            algorithm: algorithm.into(),
            partition_kind: "label-dir".into(),
            level: Some(level),
            local_epochs: 10,
            sample_rate: 0.1,
            n_clients: 50,
            seed: 0,
            metric: metric.into(),
            value,
        }
    }

    fn grid(gfl: &[(f64, f64)], pfl: &[(f64, f64)]) -> Vec<ResultRow> {
        let mut rows: Vec<ResultRow> = gfl
            .iter()
            .map(|&(l, v)| row("fedavg", METRIC_GFL, l, v))
            .collect();
        rows.extend(pfl.iter().map(|&(l, v)| row("fedavg_ft", METRIC_PFL, l, v)));
        rows
    }

    #[test]
    fn flip_is_located() {
        let rows = grid(
            &[(0.05, 0.80), (0.1, 0.83), (0.3, 0.86), (1.0, 0.87)],
            &[(0.05, 0.90), (0.1, 0.87), (0.3, 0.83), (1.0, 0.82)],
        );
        let r = incentive_boundary(&rows, "fedavg", "fedavg_ft").unwrap();
        assert_eq!(
            r.boundary,
            Boundary::Between {
                low: 0.1,
                high: 0.3,
                low_winner: Winner::Pfl,
                high_winner: Winner::Gfl
            }
        );
        assert_eq!(r.levels[0].winner, Winner::Pfl);
        assert_eq!(r.boundary.to_string(), "between 0.1 and 0.3");
    }

    #[test]
    fn pfl_everywhere_is_beyond_max() {
        let rows = grid(&[(0.1, 0.5), (1.0, 0.6)], &[(0.1, 0.7), (1.0, 0.8)]);
        let r = incentive_boundary(&rows, "fedavg", "fedavg_ft").unwrap();
        assert_eq!(r.boundary, Boundary::BeyondMaxLevel);
        assert_eq!(r.boundary.to_string(), "beyond max level");
    }

    #[test]
    fn identical_means_tie() {
        let rows = grid(&[(0.1, 0.7), (1.0, 0.7)], &[(0.1, 0.7), (1.0, 0.7)]);
        let r = incentive_boundary(&rows, "fedavg", "fedavg_ft").unwrap();
        assert_eq!(r.boundary, Boundary::NoBoundary);
        assert!(r.levels.iter().all(|v| v.winner == Winner::Tie));
    }

    #[test]
    fn solo_within_std_flags_neither() {
        let mut rows = grid(&[(0.05, 0.6), (1.0, 0.9)], &[(0.05, 0.8), (1.0, 0.7)]);
        rows.extend([0.78, 0.80, 0.82].map(|v| row("solo", METRIC_PFL, 0.05, v)));
        rows.extend([0.3, 0.3, 0.3].map(|v| row("solo", METRIC_PFL, 1.0, v)));
        let r = incentive_boundary(&rows, "fedavg", "fedavg_ft").unwrap();
        assert!(r.levels[0].neither_incentivized);
        assert!(!r.levels[1].neither_incentivized);
    }

    #[test]
    fn missing_baseline_is_invalid() {
        let rows = grid(&[(0.1, 0.7), (1.0, 0.7)], &[]);
        assert!(matches!(
            incentive_boundary(&rows, "fedavg", "fedavg_ft"),
            Err(Error::InvalidArgument(_))
        ));
        let one = grid(&[(0.1, 0.7)], &[(0.1, 0.7)]);
        assert!(incentive_boundary(&one, "fedavg", "fedavg_ft").is_err());
    }
}
