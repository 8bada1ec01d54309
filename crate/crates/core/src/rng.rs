//! Seeded, splittable random streams and the Dirichlet sampler.
//!
//! Every stochastic decision in a run draws from an [`Rng`] derived from the
//! run seed plus a tuple of tags (client id, round, purpose). Derivation is a
//! pure function of those tags, so client work can be scheduled in any order
//! without changing the draws it sees.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Purpose tags mixed into stream derivation.
pub mod purpose {
    pub const INIT: u64 = 0x01;
    pub const SAMPLE: u64 = 0x02;
    pub const LOCAL: u64 = 0x03;
    pub const PARTITION: u64 = 0x04;
    pub const DATA: u64 = 0x05;
    pub const FINE_TUNE: u64 = 0x06;
    pub const NEWCOMER: u64 = 0x07;
    pub const CLUSTER_INIT: u64 = 0x08;
    pub const RUN: u64 = 0x09;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive 64-bit hash of a word sequence.
pub fn hash64(words: &[u64]) -> u64 {
    let mut h = mix64(GOLDEN ^ words.len() as u64);
    for &w in words {
        h = mix64(h.wrapping_add(GOLDEN) ^ mix64(w));
    }
    h
}

/// 64-bit FNV-1a over bytes, used for config digests.
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// A deterministic random stream identified by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub stream: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Rng {
            seed,
            stream,
            inner,
        }
    }

    pub fn id(&self) -> StreamId {
        StreamId {
            seed: self.seed,
            stream: self.stream,
        }
    }

    /// Child stream keyed by `tags`. Does not advance `self`.
    pub fn derive(&self, tags: &[u64]) -> Rng {
        let mut words = Vec::with_capacity(tags.len() + 1);
        words.push(self.stream);
        words.extend_from_slice(tags);
        Rng::with_stream(self.seed, hash64(&words))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform in `[lo, hi]`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct values from `0..n` in sampled order.
    pub fn choose_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        debug_assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    /// Gamma(shape, 1) via Marsaglia–Tsang; shapes below one use the
    /// `Gamma(shape + 1) * U^(1/shape)` boost.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            // U in (0, 1]
            let u = 1.0 - self.uniform();
            return g * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let (x, v) = loop {
                let x = self.normal();
                let v = 1.0 + c * x;
                if v > 0.0 {
                    break (x, v * v * v);
                }
            };
            let u = self.uniform();
            if u < 1.0 - 0.0331 * x * x * x * x {
                return d * v;
            }
            if u > 0.0 && u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// A point on the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub const TOLERANCE: f64 = 1e-9;

    /// Normalizes non-negative weights onto the simplex.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid(
                "probability vector needs at least one entry",
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(
                "probability weights must be finite and non-negative",
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("probability weights sum to zero"));
        }
        Ok(ProbVector(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Symmetric Dirichlet(alpha, ..., alpha) draw of dimension `k`.
pub fn dirichlet_sample(rng: &mut Rng, alpha: f64, k: usize) -> Result<ProbVector> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!(
            "dirichlet alpha must be positive, got {alpha}"
        )));
    }
    if k == 0 {
        return Err(Error::invalid("dirichlet dimension must be at least 1"));
    }
    if k == 1 {
        return Ok(ProbVector(vec![1.0]));
    }
    loop {
        let draws: Vec<f64> = (0..k).map(|_| rng.gamma(alpha)).collect();
        let total: f64 = draws.iter().sum();
        // Tiny alpha can underflow every gamma draw to zero.
        if total > 0.0 && total.is_finite() {
            return Ok(ProbVector(draws.into_iter().map(|g| g / total).collect()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_repeat() {
        let mut a = Rng::with_stream(7, 11);
        let mut b = Rng::with_stream(7, 11);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derived_streams_differ() {
        let root = Rng::new(42);
        let mut seen = std::collections::HashSet::new();
        for client in 0..50u64 {
            for round in 0..50u64 {
                let r = root.derive(&[purpose::LOCAL, client, round]);
                assert!(seen.insert(r.id().stream), "collision at {client},{round}");
            }
        }
        let mut x = root.derive(&[purpose::LOCAL, 1, 2]);
        let mut y = root.derive(&[purpose::LOCAL, 2, 1]);
        assert_ne!(x.next_u64(), y.next_u64());
    }

    #[test]
    fn derive_does_not_advance_parent() {
        let mut a = Rng::new(3);
        let _ = a.derive(&[1, 2, 3]);
        let mut b = Rng::new(3);
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn dirichlet_rejects_bad_arguments() {
        let mut rng = Rng::new(0);
        assert!(matches!(
            dirichlet_sample(&mut rng, 0.0, 3),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            dirichlet_sample(&mut rng, -1.0, 3),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            dirichlet_sample(&mut rng, f64::NAN, 3),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            dirichlet_sample(&mut rng, 1.0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn dirichlet_single_vertex() {
        let mut rng = Rng::new(1);
        for alpha in [1e-3, 0.5, 3.0, 1e6] {
            assert_eq!(
                dirichlet_sample(&mut rng, alpha, 1).unwrap().entries(),
                &[1.0]
            );
        }
    }

    #[test]
    fn dirichlet_concentration_limit() {
        let mut rng = Rng::new(2);
        for _ in 0..20 {
            let p = dirichlet_sample(&mut rng, 1e9, 4).unwrap();
            for &x in p.entries() {
                assert!((x - 0.25).abs() < 1e-3, "{x}");
            }
        }
    }

    #[test]
    fn dirichlet_tiny_alpha_still_on_simplex() {
        let mut rng = Rng::new(9);
        for _ in 0..200 {
            let p = dirichlet_sample(&mut rng, 1e-3, 10).unwrap();
            let s: f64 = p.entries().iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(p.entries().iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn gamma_mean_matches_shape() {
        // Gamma(a, 1) has mean a and variance a.
        let mut rng = Rng::new(5);
        for shape in [0.3, 1.0, 2.5, 10.0] {
            let n = 20_000;
            let mean = (0..n).map(|_| rng.gamma(shape)).sum::<f64>() / n as f64;
            let se = (shape / n as f64).sqrt();
            assert!(
                (mean - shape).abs() < 4.0 * se,
                "shape {shape}: mean {mean}"
            );
        }
    }

    #[test]
    fn choose_distinct_is_a_set() {
        let mut rng = Rng::new(8);
        let picks = rng.choose_distinct(100, 30);
        let set: std::collections::BTreeSet<_> = picks.iter().copied().collect();
        assert_eq!(set.len(), 30);
        assert!(picks.iter().all(|&p| p < 100));
    }

    #[test]
    fn prob_vector_normalizes() {
        let p = ProbVector::from_weights(vec![1.0, 3.0]).unwrap();
        assert_eq!(p.entries(), &[0.25, 0.75]);
        assert!(ProbVector::from_weights(vec![0.0, 0.0]).is_err());
        assert!(ProbVector::from_weights(vec![-1.0, 2.0]).is_err());
    }
}
