//! Finite-difference gradient oracle shared by the gradient tests and the acceptance suite.

use std::sync::Arc;

use fedsim::data::{Dataset, Split};
use fedsim::model::{forward_loss_grad, init_params, ModelKind, ModelSpec, Proximal};
use fedsim::params::ParamVector;
use fedsim::rng::Rng;

pub const H: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-5;
/// Pre-activations closer than this to the ReLU kink make central differences meaningless.
pub const KINK_MARGIN: f64 = 1e-3;

pub fn random_dataset(rng: &mut Rng, n: usize, f: usize, c: usize) -> Dataset {
    let features: Vec<f64> = (0..n * f).map(|_| rng.uniform()).collect();
    // every class at least once so the train split is valid
    let labels: Vec<usize> = (0..n)
        .map(|i| if i < c { i } else { rng.below(c) })
        .collect();
    Dataset::new(features, labels, f, c, Split::Train).unwrap()
}

/// Plain re-implementation of the forward pass: returns the mean loss and
/// the smallest |pre-activation| seen.
pub fn oracle_loss(
    spec: &ModelSpec,
    theta: &[f64],
    data: &Dataset,
    batch: &[usize],
    prox: Option<(&[f64], f64)>,
) -> (f64, f64) {
    let (f, c) = (spec.n_features, spec.n_classes);
    let mut total = 0.0;
    let mut margin = f64::INFINITY;
    for &i in batch {
        let x = data.row(i);
        let logits: Vec<f64> = match spec.kind {
            ModelKind::Logreg => {
                let (w, b) = theta.split_at(c * f);
                (0..c)
                    .map(|r| b[r] + (0..f).map(|j| w[r * f + j] * x[j]).sum::<f64>())
                    .collect()
            }
            ModelKind::Mlp { hidden: h } => {
                let (w1, rest) = theta.split_at(h * f);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(c * h);
                let z: Vec<f64> = (0..h)
                    .map(|r| b1[r] + (0..f).map(|j| w1[r * f + j] * x[j]).sum::<f64>())
                    .collect();
                margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
                let a: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
                (0..c)
                    .map(|r| b2[r] + (0..h).map(|j| w2[r * h + j] * a[j]).sum::<f64>())
                    .collect()
            }
        };
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        total += lse - logits[data.label(i)];
    }
    let mut loss = total / batch.len() as f64;
    if let Some((anchor, mu)) = prox {
        loss += 0.5
            * mu
            * theta
                .iter()
                .zip(anchor)
                .map(|(t, a)| (t - a) * (t - a))
                .sum::<f64>();
    }
    (loss, margin)
}

pub struct Instance {
    pub spec: ModelSpec,
    pub data: Dataset,
    pub params: ParamVector,
    pub batch: Vec<usize>,
    pub anchor: Option<(ParamVector, f64)>,
}

pub fn draw(rng: &mut Rng) -> Instance {
    loop {
        let f = 2 + rng.below(6);
        let c = 2 + rng.below(4);
        let kind = if rng.below(3) == 0 {
            ModelKind::Logreg
        } else {
            ModelKind::Mlp {
                hidden: 2 + rng.below(7),
            }
        };
        let spec = ModelSpec {
            kind,
            n_features: f,
            n_classes: c,
            init_scale: 0.5 + rng.uniform(),
            local_segments: 0,
        };
        let n = 12 + rng.below(10);
        let data = random_dataset(rng, n, f, c);
        // non-zero biases so every segment is exercised
        let init = init_params(&spec, rng).unwrap();
        let values: Vec<f64> = init
            .values()
            .iter()
            .map(|v| v + 0.1 * rng.normal())
            .collect();
        let params = ParamVector::from_values(Arc::new(spec.layout()), values).unwrap();
        let batch: Vec<usize> = (0..1 + rng.below(data.len()))
            .map(|_| rng.below(data.len()))
            .collect();
        let anchor = if rng.below(2) == 0 {
            let a: Vec<f64> = params
                .values()
                .iter()
                .map(|v| v + 0.2 * rng.normal())
                .collect();
            Some((
                ParamVector::from_values(params.layout().clone(), a).unwrap(),
                0.01 + rng.uniform(),
            ))
        } else {
            None
        };
        let (_, margin) = oracle_loss(&spec, params.values(), &data, &batch, None);
        if margin > KINK_MARGIN {
            return Instance {
                spec,
                data,
                params,
                batch,
                anchor,
            };
        }
    }
}

/// Relative error `‖g − g_fd‖ / max(‖g‖, ‖g_fd‖)` of the analytic gradient
/// against central differences of the oracle loss.
pub fn relative_error(inst: &Instance) -> f64 {
    let prox = inst
        .anchor
        .as_ref()
        .map(|(a, mu)| Proximal { anchor: a, mu: *mu });
    let (loss, grad) =
        forward_loss_grad(&inst.spec, &inst.params, &inst.data, &inst.batch, prox).unwrap();
    let oracle_prox = inst.anchor.as_ref().map(|(a, mu)| (a.values(), *mu));
    let theta = inst.params.values().to_vec();
    let (oracle, _) = oracle_loss(&inst.spec, &theta, &inst.data, &inst.batch, oracle_prox);
    assert!(
        (loss - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()),
        "loss {loss} vs oracle {oracle}"
    );
    let mut fd = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        plus[i] += H;
        let mut minus = theta.clone();
        minus[i] -= H;
        let lp = oracle_loss(&inst.spec, &plus, &inst.data, &inst.batch, oracle_prox).0;
        let lm = oracle_loss(&inst.spec, &minus, &inst.data, &inst.batch, oracle_prox).0;
        fd[i] = (lp - lm) / (2.0 * H);
    }
    let diff: f64 = grad
        .values()
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = grad
        .norm()
        .max(fd.iter().map(|v| v * v).sum::<f64>().sqrt())
        .max(1e-8);
    diff / scale
}
