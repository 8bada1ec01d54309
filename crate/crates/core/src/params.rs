//! Flat parameter vectors with named, contiguous layer segments.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Ordered segment table. Segments tile `0..total` in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    segments: Vec<Segment>,
    total: usize,
}

impl Layout {
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = (S, usize)>) -> Self {
        let mut offset = 0;
        let segments = parts
            .into_iter()
            .map(|(name, len)| {
                let seg = Segment {
                    name: name.into(),
                    offset,
                    len,
                };
                offset += len;
                seg
            })
            .collect();
        Layout {
            segments,
            total: offset,
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    /// Name of the segment containing flat index `i`.
    pub fn segment_of(&self, i: usize) -> Option<&str> {
        self.segments
            .iter()
            .find(|s| i >= s.offset && i < s.offset + s.len)
            .map(|s| s.name.as_str())
    }
}

/// Model parameters: a flat `f64` buffer plus its shared layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Arc<Layout>,
}

impl ParamVector {
    pub fn zeros(layout: Arc<Layout>) -> Self {
        ParamVector {
            values: vec![0.0; layout.len()],
            layout,
        }
    }

    pub fn from_values(layout: Arc<Layout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::shape(format!(
                "{} values for a layout of length {}",
                values.len(),
                layout.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                segment: layout.segment_of(i).unwrap_or("?").to_string(),
                detail: format!("non-finite value at index {i}"),
            });
        }
        Ok(ParamVector { values, layout })
    }

    /// Single-segment vector, handy in tests and fusion examples.
    pub fn flat(values: Vec<f64>) -> Self {
        let layout = Arc::new(Layout::new([("w", values.len())]));
        ParamVector { values, layout }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn segment(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .segment(name)
            .map(|s| &self.values[s.offset..s.offset + s.len])
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || *self.layout == *other.layout
    }

    pub fn check_layout(&self, other: &ParamVector) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "layout mismatch: {} vs {} parameters",
                self.len(),
                other.len()
            )))
        }
    }

    /// First segment holding a non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<&str> {
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .and_then(|i| self.layout.segment_of(i))
    }

    pub(crate) fn ensure_finite(&self, context: &str) -> Result<()> {
        match self.first_non_finite() {
            None => Ok(()),
            Some(seg) => Err(Error::Numeric {
                segment: seg.to_string(),
                detail: format!("non-finite value after {context}"),
            }),
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        axpy(-1.0, other, self)
    }

    pub fn scale(&self, a: f64) -> ParamVector {
        ParamVector {
            values: self.values.iter().map(|v| a * v).collect(),
            layout: Arc::clone(&self.layout),
        }
    }

    /// Copies the named segments of `src` into `self`.
    pub fn copy_segments_from(&mut self, src: &ParamVector, segments: &[bool]) -> Result<()> {
        self.check_layout(src)?;
        for (seg, &take) in self.layout.clone().segments().iter().zip(segments) {
            if take {
                let r = seg.offset..seg.offset + seg.len;
                self.values[r.clone()].copy_from_slice(&src.values[r]);
            }
        }
        Ok(())
    }
}

/// Elementwise `Σ w_k θ_k / Σ w_k`.
pub fn weighted_mean(vectors: &[&ParamVector], weights: &[f64]) -> Result<ParamVector> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::invalid("weighted mean of zero vectors"))?;
    if vectors.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} vectors but {} weights",
            vectors.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("weights are all zero"));
    }
    for v in &vectors[1..] {
        first.check_layout(v)?;
    }
    let mut out = vec![0.0; first.len()];
    for (v, &w) in vectors.iter().zip(weights) {
        let scaled = w / total;
        for (o, x) in out.iter_mut().zip(&v.values) {
            *o += scaled * x;
        }
    }
    let result = ParamVector {
        values: out,
        layout: Arc::clone(&first.layout),
    };
    result.ensure_finite("weighted mean")?;
    Ok(result)
}

/// `a·x + y`.
pub fn axpy(a: f64, x: &ParamVector, y: &ParamVector) -> Result<ParamVector> {
    x.check_layout(y)?;
    let values: Vec<f64> = x
        .values
        .iter()
        .zip(&y.values)
        .map(|(xi, yi)| a * xi + yi)
        .collect();
    let result = ParamVector {
        values,
        layout: Arc::clone(&y.layout),
    };
    result.ensure_finite("axpy")?;
    Ok(result)
}
