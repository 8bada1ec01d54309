//! Small differentiable classifiers with exact cross-entropy gradients.

mod local;
mod optim;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::params::{Layout, ParamVector};
use crate::rng::Rng;

pub use local::{client_update, LocalOutcome, LocalTrainSpec, TrainableMask};
pub use optim::{sgd_step, OptConfig, OptState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Logreg,
    Mlp { hidden: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_features: usize,
    pub n_classes: usize,
    pub init_scale: f64,
    /// Number of trailing segments kept on the client (0 = fully shared).
    pub local_segments: usize,
}

impl ModelSpec {
    pub fn logreg(n_features: usize, n_classes: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Logreg,
            n_features,
            n_classes,
            init_scale: 0.1,
            local_segments: 0,
        }
    }

    pub fn mlp(n_features: usize, hidden: usize, n_classes: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Mlp { hidden },
            n_features,
            n_classes,
            init_scale: 0.1,
            local_segments: 0,
        }
    }

    pub fn with_local_segments(mut self, n: usize) -> Self {
        self.local_segments = n;
        self
    }

    pub fn segment_count(&self) -> usize {
        match self.kind {
            ModelKind::Logreg => 2,
            ModelKind::Mlp { .. } => 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.n_classes == 0 {
            return Err(Error::invalid(
                "model needs at least one feature and one class",
            ));
        }
        if let ModelKind::Mlp { hidden: 0 } = self.kind {
            return Err(Error::invalid("mlp hidden width must be at least 1"));
        }
        if !self.init_scale.is_finite() || self.init_scale < 0.0 {
            return Err(Error::invalid("init scale must be finite and non-negative"));
        }
        if self.local_segments >= self.segment_count() {
            return Err(Error::invalid(format!(
                "layer split {} must be below the segment count {}",
                self.local_segments,
                self.segment_count()
            )));
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        let (f, c) = (self.n_features, self.n_classes);
        match self.kind {
            ModelKind::Logreg => Layout::new([("w1", c * f), ("b1", c)]),
            ModelKind::Mlp { hidden: h } => {
                Layout::new([("w1", h * f), ("b1", h), ("w2", c * h), ("b2", c)])
            }
        }
    }

    /// `true` for each segment held locally under the layer split.
    pub fn local_mask(&self) -> Vec<bool> {
        let n = self.segment_count();
        (0..n).map(|i| i >= n - self.local_segments).collect()
    }

    pub fn global_mask(&self) -> Vec<bool> {
        self.local_mask().into_iter().map(|l| !l).collect()
    }

    pub fn trainable(&self, mask: TrainableMask) -> Vec<bool> {
        match mask {
            TrainableMask::All => vec![true; self.segment_count()],
            TrainableMask::GlobalOnly => self.global_mask(),
            TrainableMask::LocalOnly => self.local_mask(),
        }
    }

    /// Human-readable architecture string for run manifests.
    pub fn describe(&self) -> String {
        match self.kind {
            ModelKind::Logreg => format!("logreg({}->{})", self.n_features, self.n_classes),
            ModelKind::Mlp { hidden } => format!(
                "mlp({}->{hidden}->{}, relu)",
                self.n_features, self.n_classes
            ),
        }
    }
}

/// Weights uniform in `[-init_scale, init_scale]`, biases zero.
pub fn init_params(spec: &ModelSpec, rng: &mut Rng) -> Result<ParamVector> {
    spec.validate()?;
    let layout = Arc::new(spec.layout());
    let mut values = Vec::with_capacity(layout.len());
    for seg in layout.segments() {
        let is_bias = seg.name.starts_with('b');
        for _ in 0..seg.len {
            values.push(if is_bias || spec.init_scale == 0.0 {
                0.0
            } else {
                rng.uniform_in(-spec.init_scale, spec.init_scale)
            });
        }
    }
    ParamVector::from_values(layout, values)
}

/// FedProx anchor: adds `(mu/2)·||θ − anchor||²` to the loss.
#[derive(Clone, Copy, Debug)]
pub struct Proximal<'a> {
    pub anchor: &'a ParamVector,
    pub mu: f64,
}

/// Row-major affine map `out = W x + b`.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (j, o) in out.iter_mut().enumerate() {
        let row = &w[j * n_in..(j + 1) * n_in];
        *o = b[j] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// In-place softmax; returns `log Σ exp(s)` of the original scores.
fn softmax_in_place(scores: &mut [f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
    max + sum.ln()
}

struct Workspace {
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    scores: Vec<f64>,
}

impl Workspace {
    fn new(spec: &ModelSpec) -> Self {
        let h = match spec.kind {
            ModelKind::Logreg => 0,
            ModelKind::Mlp { hidden } => hidden,
        };
        Workspace {
            hidden_pre: vec![0.0; h],
            hidden: vec![0.0; h],
            scores: vec![0.0; spec.n_classes],
        }
    }
}

fn seg(params: &ParamVector, i: usize) -> &[f64] {
    let s = &params.layout().segments()[i];
    &params.values()[s.offset..s.offset + s.len]
}

/// Class scores for one sample, left in `ws.scores`.
fn forward_one(spec: &ModelSpec, params: &ParamVector, x: &[f64], ws: &mut Workspace) {
    match spec.kind {
        ModelKind::Logreg => affine(seg(params, 0), seg(params, 1), x, &mut ws.scores),
        ModelKind::Mlp { .. } => {
            affine(seg(params, 0), seg(params, 1), x, &mut ws.hidden_pre);
            for (h, z) in ws.hidden.iter_mut().zip(&ws.hidden_pre) {
                *h = z.max(0.0);
            }
            affine(seg(params, 2), seg(params, 3), &ws.hidden, &mut ws.scores);
        }
    }
}

fn output_segment(spec: &ModelSpec) -> &'static str {
    match spec.kind {
        ModelKind::Logreg => "w1",
        ModelKind::Mlp { .. } => "w2",
    }
}

fn check_params(spec: &ModelSpec, params: &ParamVector) -> Result<()> {
    if params.len() != spec.layout().len()
        || params.layout().segments().len() != spec.segment_count()
    {
        return Err(Error::shape(format!(
            "parameter vector of length {} does not fit {}",
            params.len(),
            spec.describe()
        )));
    }
    Ok(())
}

/// Mean cross-entropy over `indices`, plus the optional proximal term, and
/// its exact gradient.
pub fn forward_loss_grad(
    spec: &ModelSpec,
    params: &ParamVector,
    data: &Dataset,
    indices: &[usize],
    prox: Option<Proximal<'_>>,
) -> Result<(f64, ParamVector)> {
    if indices.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    check_params(spec, params)?;
    let mut grad = ParamVector::zeros(Arc::clone(params.layout()));
    let inv_b = 1.0 / indices.len() as f64;
    let mut ws = Workspace::new(spec);
    let mut dhidden = vec![0.0; ws.hidden.len()];
    let offsets: Vec<usize> = params
        .layout()
        .segments()
        .iter()
        .map(|s| s.offset)
        .collect();
    let mut loss = 0.0;

    for &i in indices {
        let x = data.row(i);
        let y = data.label(i);
        forward_one(spec, params, x, &mut ws);
        let score_y = ws.scores[y];
        let log_z = softmax_in_place(&mut ws.scores);
        loss += log_z - score_y;
        // ws.scores now holds probabilities; turn them into dL/dscore
        ws.scores[y] -= 1.0;
        for d in ws.scores.iter_mut() {
            *d *= inv_b;
        }
        let g = grad.values_mut();
        match spec.kind {
            ModelKind::Logreg => {
                let f = spec.n_features;
                for (c, &d) in ws.scores.iter().enumerate() {
                    let row = &mut g[offsets[0] + c * f..offsets[0] + (c + 1) * f];
                    for (gw, xi) in row.iter_mut().zip(x) {
                        *gw += d * xi;
                    }
                    g[offsets[1] + c] += d;
                }
            }
            ModelKind::Mlp { hidden } => {
                let w2 = seg(params, 2);
                dhidden.iter_mut().for_each(|v| *v = 0.0);
                for (c, &d) in ws.scores.iter().enumerate() {
                    let row = &mut g[offsets[2] + c * hidden..offsets[2] + (c + 1) * hidden];
                    for (gw, h) in row.iter_mut().zip(&ws.hidden) {
                        *gw += d * h;
                    }
                    g[offsets[3] + c] += d;
                    for (dh, w) in dhidden.iter_mut().zip(&w2[c * hidden..(c + 1) * hidden]) {
                        *dh += d * w;
                    }
                }
                let f = spec.n_features;
                for (j, (&dh, &z)) in dhidden.iter().zip(&ws.hidden_pre).enumerate() {
                    // relu'(0) = 0
                    if z <= 0.0 || dh == 0.0 {
                        continue;
                    }
                    let row = &mut g[offsets[0] + j * f..offsets[0] + (j + 1) * f];
                    for (gw, xi) in row.iter_mut().zip(x) {
                        *gw += dh * xi;
                    }
                    g[offsets[1] + j] += dh;
                }
            }
        }
    }
    loss *= inv_b;

    if let Some(Proximal { anchor, mu }) = prox {
        if mu < 0.0 || !mu.is_finite() {
            return Err(Error::invalid(format!(
                "proximal mu must be non-negative, got {mu}"
            )));
        }
        if mu > 0.0 {
            params.check_layout(anchor)?;
            let mut sq = 0.0;
            for ((g, p), a) in grad
                .values_mut()
                .iter_mut()
                .zip(params.values())
                .zip(anchor.values())
            {
                let d = p - a;
                sq += d * d;
                *g += mu * d;
            }
            loss += 0.5 * mu * sq;
        }
    }

    if !loss.is_finite() {
        return Err(Error::Numeric {
            segment: output_segment(spec).to_string(),
            detail: format!("loss is {loss}"),
        });
    }
    grad.ensure_finite("backward pass")?;
    Ok((loss, grad))
}

/// Mean cross-entropy without gradients.
pub fn mean_loss(
    spec: &ModelSpec,
    params: &ParamVector,
    data: &Dataset,
    indices: &[usize],
) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::invalid("empty index set"));
    }
    check_params(spec, params)?;
    let mut ws = Workspace::new(spec);
    let mut loss = 0.0;
    for &i in indices {
        forward_one(spec, params, data.row(i), &mut ws);
        let score_y = ws.scores[data.label(i)];
        loss += softmax_in_place(&mut ws.scores) - score_y;
    }
    Ok(loss / indices.len() as f64)
}

/// Class probabilities for sample `i`.
pub fn predict_proba(spec: &ModelSpec, params: &ParamVector, data: &Dataset, i: usize) -> Vec<f64> {
    let mut ws = Workspace::new(spec);
    forward_one(spec, params, data.row(i), &mut ws);
    softmax_in_place(&mut ws.scores);
    ws.scores
}

/// Argmax class; ties go to the lowest class id.
pub fn predict(spec: &ModelSpec, params: &ParamVector, data: &Dataset, i: usize) -> usize {
    let mut ws = Workspace::new(spec);
    forward_one(spec, params, data.row(i), &mut ws);
    argmax(&ws.scores)
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

/// Fraction of `indices` classified correctly.
pub fn evaluate(
    spec: &ModelSpec,
    params: &ParamVector,
    data: &Dataset,
    indices: &[usize],
) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty index set"));
    }
    check_params(spec, params)?;
    let mut ws = Workspace::new(spec);
    let correct = indices
        .iter()
        .filter(|&&i| {
            forward_one(spec, params, data.row(i), &mut ws);
            argmax(&ws.scores) == data.label(i)
        })
        .count();
    Ok(correct as f64 / indices.len() as f64)
}

/// Accuracy over the whole dataset.
pub fn evaluate_all(spec: &ModelSpec, params: &ParamVector, data: &Dataset) -> Result<f64> {
    let all: Vec<usize> = (0..data.len()).collect();
    evaluate(spec, params, data, &all)
}
