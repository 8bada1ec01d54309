//! In-memory datasets, the synthetic Gaussian-blob generator and local test allocation.

mod idx;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub use idx::{encode_idx_images, encode_idx_labels, load_idx, load_mnist_dir, MnistSplits};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Row-major feature matrix with integer labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    n_features: usize,
    n_classes: usize,
    split: Split,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        n_features: usize,
        n_classes: usize,
        split: Split,
    ) -> Result<Self> {
        if n_features == 0 || n_classes == 0 {
            return Err(Error::invalid(
                "dataset needs at least one feature and one class",
            ));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::shape(format!(
                "{} feature values for {} samples of width {}",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::invalid(format!(
                "label {bad} outside 0..{n_classes}"
            )));
        }
        if split == Split::Train {
            let present: BTreeSet<usize> = labels.iter().copied().collect();
            if present.len() != n_classes {
                let missing: Vec<usize> = (0..n_classes).filter(|c| !present.contains(c)).collect();
                return Err(Error::invalid(format!(
                    "train split has no samples of classes {missing:?}"
                )));
            }
        }
        Ok(Dataset {
            features,
            labels,
            n_features,
            n_classes,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Histogram of labels over `indices`.
    pub fn histogram(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in indices {
            counts[self.labels[i]] += 1;
        }
        counts
    }
}

/// Gaussian class blobs centred on scaled coordinate axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub n_features: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub separation: f64,
    pub sigma: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_classes: 10,
            n_features: 20,
            train_per_class: 500,
            test_per_class: 100,
            separation: 1.0,
            sigma: 0.35,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_classes", self.n_classes),
            ("n_features", self.n_features),
            ("train_per_class", self.train_per_class),
            ("test_per_class", self.test_per_class),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::invalid(format!(
                    "synthetic {name} must be at least 1"
                )));
            }
        }
        if self.n_features < self.n_classes {
            return Err(Error::invalid(format!(
                "synthetic data needs n_features >= n_classes ({} < {}) so class centroids are distinct",
                self.n_features, self.n_classes
            )));
        }
        if !self.separation.is_finite() || self.separation <= 0.0 {
            return Err(Error::invalid("synthetic separation must be positive"));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::invalid("synthetic sigma must be non-negative"));
        }
        Ok(())
    }

    /// Unclipped centre of class `c`: `separation · e_(c mod n_features)`.
    pub fn centroid(&self, c: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_features];
        v[c % self.n_features] = self.separation;
        v
    }
}

/// Draws the train and test splits. Samples are emitted class by class.
pub fn generate_synthetic(spec: &SyntheticSpec, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let mut make = |per_class: usize, split: Split| {
        let n = per_class * spec.n_classes;
        let mut features = Vec::with_capacity(n * spec.n_features);
        let mut labels = Vec::with_capacity(n);
        for c in 0..spec.n_classes {
            let centre = spec.centroid(c);
            for _ in 0..per_class {
                for &mu in &centre {
                    let x = mu + spec.sigma * rng.normal();
                    features.push(x.clamp(0.0, 1.0));
                }
                labels.push(c);
            }
        }
        Dataset::new(features, labels, spec.n_features, spec.n_classes, split)
    };
    let train = make(spec.train_per_class, Split::Train)?;
    let test = make(spec.test_per_class, Split::Test)?;
    Ok((train, test))
}

/// Every test index whose label is one of `owned`.
pub fn allocate_local_test(test: &Dataset, owned: &BTreeSet<usize>) -> Result<Vec<usize>> {
    if owned.is_empty() {
        return Err(Error::invalid("client owns no classes"));
    }
    if let Some(&bad) = owned.iter().find(|&&c| c >= test.n_classes()) {
        return Err(Error::invalid(format!(
            "owned class {bad} outside 0..{}",
            test.n_classes()
        )));
    }
    Ok((0..test.len())
        .filter(|&i| owned.contains(&test.label(i)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            n_classes: 2,
            n_features: 3,
            train_per_class: 5,
            test_per_class: 17,
            separation: 1.0,
            sigma: 0.2,
        }
    }

    #[test]
    fn exact_class_counts() {
        let (train, test) = generate_synthetic(&spec(), &mut Rng::new(1)).unwrap();
        assert_eq!(train.len(), 10);
        assert_eq!(train.class_counts(), vec![5, 5]);
        assert_eq!(test.class_counts(), vec![17, 17]);
        assert!(train.features().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn zero_noise_collapses_to_centroid() {
        let s = SyntheticSpec {
            sigma: 0.0,
            ..spec()
        };
        let (train, _) = generate_synthetic(&s, &mut Rng::new(2)).unwrap();
        for i in 0..train.len() {
            let c = train.label(i);
            assert_eq!(train.row(i), s.centroid(c).as_slice());
        }
    }

    #[test]
    fn separated_blobs_nearest_centroid_is_perfect() {
        // Oracle: class means from the train split, brute-force nearest mean on test.
        let s = SyntheticSpec {
            n_classes: 5,
            n_features: 8,
            train_per_class: 40,
            test_per_class: 40,
            separation: 10.0,
            sigma: 0.1,
        };
        let (train, test) = generate_synthetic(&s, &mut Rng::new(3)).unwrap();
        let mut means = vec![vec![0.0; s.n_features]; s.n_classes];
        for i in 0..train.len() {
            for (m, x) in means[train.label(i)].iter_mut().zip(train.row(i)) {
                *m += x / s.train_per_class as f64;
            }
        }
        let correct = (0..test.len())
            .filter(|&i| {
                let d = |m: &Vec<f64>| {
                    m.iter()
                        .zip(test.row(i))
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                };
                let best = (0..s.n_classes)
                    .min_by(|&a, &b| d(&means[a]).total_cmp(&d(&means[b])))
                    .unwrap();
                best == test.label(i)
            })
            .count();
        assert_eq!(correct, test.len());
    }

    #[test]
    fn spec_validation() {
        assert!(SyntheticSpec {
            separation: 0.0,
            ..spec()
        }
        .validate()
        .is_err());
        assert!(SyntheticSpec {
            n_classes: 0,
            ..spec()
        }
        .validate()
        .is_err());
        assert!(SyntheticSpec {
            n_features: 1,
            ..spec()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn train_split_requires_every_class() {
        let err = Dataset::new(vec![0.0, 1.0], vec![0, 0], 1, 2, Split::Train);
        assert!(err.is_err());
        assert!(Dataset::new(vec![0.0, 1.0], vec![0, 0], 1, 2, Split::Test).is_ok());
        assert!(Dataset::new(vec![0.0], vec![3], 1, 2, Split::Test).is_err());
    }

    #[test]
    fn local_test_allocation() {
        let (_, test) = generate_synthetic(&spec(), &mut Rng::new(4)).unwrap();
        let all: BTreeSet<usize> = [0, 1].into();
        assert_eq!(
            allocate_local_test(&test, &all).unwrap(),
            (0..test.len()).collect::<Vec<_>>()
        );

        let one: BTreeSet<usize> = [1].into();
        let got = allocate_local_test(&test, &one).unwrap();
        let oracle: Vec<usize> = (0..test.len()).filter(|&i| test.labels()[i] == 1).collect();
        assert_eq!(got.len(), 17);
        assert_eq!(got, oracle);
        assert_eq!(got, allocate_local_test(&test, &one).unwrap());

        assert!(allocate_local_test(&test, &BTreeSet::new()).is_err());
        assert!(allocate_local_test(&test, &[5].into()).is_err());
    }
}
