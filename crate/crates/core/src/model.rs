//! The shared model, its cross-entropy loss and local SGD.
//!
//! Two architectures share one flat parameter vector:
//!
//! * `hidden_units == 0`: softmax regression, layout `[W (F×C), b (C)]`;
//! * `hidden_units == H > 0`: `tanh` hidden layer, layout
//!   `[W1 (F×H), b1 (H), W2 (H×C), b2 (C)]`.
//!
//! Matrices are row-major with the input dimension as rows.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::rng::{uniform, RngStream};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_features: usize,
    pub n_classes: usize,
    pub hidden_units: usize,
}

impl ModelSpec {
    pub fn softmax(n_features: usize, n_classes: usize) -> Self {
        ModelSpec {
            n_features,
            n_classes,
            hidden_units: 0,
        }
    }

    pub fn num_params(&self) -> usize {
        let (f, c, h) = (self.n_features, self.n_classes, self.hidden_units);
        if h == 0 {
            f * c + c
        } else {
            f * h + h + h * c + c
        }
    }

    fn check(&self) -> Result<(), ModelError> {
        if self.n_classes < 2 || self.n_features == 0 {
            return Err(ModelError::ShapeMismatch(format!(
                "invalid spec {self:?}: need n_classes >= 2 and n_features >= 1"
            )));
        }
        Ok(())
    }
}

/// Flat parameter vector `w` plus the spec that gives it shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub values: Vec<f64>,
    pub spec: ModelSpec,
}

/// Training hyperparameters for [`local_train`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl ModelParams {
    pub fn zeros(spec: ModelSpec) -> Self {
        ModelParams {
            values: vec![0.0; spec.num_params()],
            spec,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    const MAGIC: &'static [u8; 4] = b"FSMP";
    const VERSION: u32 = 1;

    /// Little-endian blob: magic `FSMP`, version `u32`, `n_features`,
    /// `n_classes`, `hidden_units`, value count (each `u64`), then the
    /// values as `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + 8 * self.values.len());
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&Self::VERSION.to_le_bytes());
        for v in [
            self.spec.n_features,
            self.spec.n_classes,
            self.spec.hidden_units,
            self.values.len(),
        ] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let bad = |m: &str| ModelError::Checkpoint(m.to_owned());
        if bytes.len() < 40 {
            return Err(bad("shorter than header"));
        }
        if &bytes[..4] != Self::MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != Self::VERSION {
            return Err(ModelError::Checkpoint(format!("unsupported version {version}")));
        }
        let word = |i: usize| {
            let at = 8 + 8 * i;
            u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes")) as usize
        };
        let spec = ModelSpec {
            n_features: word(0),
            n_classes: word(1),
            hidden_units: word(2),
        };
        let count = word(3);
        if count != spec.num_params() {
            return Err(bad("value count does not match spec"));
        }
        let body = &bytes[40..];
        if body.len() != 8 * count {
            return Err(bad("body length does not match value count"));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(ModelParams { values, spec })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(spec: ModelSpec, rng: &mut RngStream) -> ModelParams {
    let mut params = ModelParams::zeros(spec);
    let (f, c, h) = (spec.n_features, spec.n_classes, spec.hidden_units);
    let mut fill = |slice: &mut [f64], fan_in: usize, fan_out: usize| {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in slice {
            *w = uniform(rng, -bound, bound);
        }
    };
    if h == 0 {
        fill(&mut params.values[..f * c], f, c);
    } else {
        let w2_start = f * h + h;
        fill(&mut params.values[..f * h], f, h);
        fill(&mut params.values[w2_start..w2_start + h * c], h, c);
    }
    params
}

fn check_batch(params: &ModelParams, features: &[f64], labels: &[usize]) -> Result<(), ModelError> {
    params.spec.check()?;
    if params.values.len() != params.spec.num_params() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} values for a spec needing {}",
            params.values.len(),
            params.spec.num_params()
        )));
    }
    if labels.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    if features.len() != labels.len() * params.spec.n_features {
        return Err(ModelError::ShapeMismatch(format!(
            "{} feature values for {} samples of width {}",
            features.len(),
            labels.len(),
            params.spec.n_features
        )));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= params.spec.n_classes) {
        return Err(ModelError::LabelOutOfRange {
            label,
            n_classes: params.spec.n_classes,
        });
    }
    Ok(())
}

/// Per-sample forward pass. Writes hidden activations (if any) and class
/// probabilities; returns `-ln p[label]`.
fn forward(
    spec: &ModelSpec,
    w: &[f64],
    x: &[f64],
    label: Option<usize>,
    hidden: &mut [f64],
    probs: &mut [f64],
) -> f64 {
    let (f, c, h) = (spec.n_features, spec.n_classes, spec.hidden_units);
    if h == 0 {
        let (weights, bias) = w.split_at(f * c);
        probs.copy_from_slice(bias);
        for (xi, row) in x.iter().zip(weights.chunks_exact(c)) {
            for (z, wij) in probs.iter_mut().zip(row) {
                *z += xi * wij;
            }
        }
    } else {
        let (w1, rest) = w.split_at(f * h);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h * c);
        hidden.copy_from_slice(b1);
        for (xi, row) in x.iter().zip(w1.chunks_exact(h)) {
            for (a, wij) in hidden.iter_mut().zip(row) {
                *a += xi * wij;
            }
        }
        hidden.iter_mut().for_each(|a| *a = a.tanh());
        probs.copy_from_slice(b2);
        for (ai, row) in hidden.iter().zip(w2.chunks_exact(c)) {
            for (z, wij) in probs.iter_mut().zip(row) {
                *z += ai * wij;
            }
        }
    }
    // stable softmax over logits held in `probs`
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let target_logit = label.map(|l| probs[l] - max);
    let mut sum = 0.0;
    for z in probs.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    let nll = target_logit.map_or(0.0, |z| sum.ln() - z);
    probs.iter_mut().for_each(|p| *p /= sum);
    nll
}

/// Mean softmax cross-entropy over the batch and its gradient.
///
/// `features` is row-major, `labels.len()` rows of `spec.n_features`.
pub fn loss_and_gradient(
    params: &ModelParams,
    features: &[f64],
    labels: &[usize],
) -> Result<(f64, Vec<f64>), ModelError> {
    check_batch(params, features, labels)?;
    let spec = params.spec;
    let (f, c, h) = (spec.n_features, spec.n_classes, spec.hidden_units);
    let w = &params.values;
    let n = labels.len() as f64;
    let mut grad = vec![0.0; w.len()];
    let mut hidden = vec![0.0; h];
    let mut probs = vec![0.0; c];
    let mut dhidden = vec![0.0; h];
    let mut loss = 0.0;

    for (x, &label) in features.chunks_exact(f).zip(labels) {
        loss += forward(&spec, w, x, Some(label), &mut hidden, &mut probs);
        // dL/dz = (p - onehot) / n
        probs[label] -= 1.0;
        probs.iter_mut().for_each(|d| *d /= n);
        let dz = &probs;

        if h == 0 {
            let (gw, gb) = grad.split_at_mut(f * c);
            for (xi, row) in x.iter().zip(gw.chunks_exact_mut(c)) {
                for (g, d) in row.iter_mut().zip(dz) {
                    *g += xi * d;
                }
            }
            gb.iter_mut().zip(dz).for_each(|(g, d)| *g += d);
        } else {
            let w2 = &w[f * h + h..f * h + h + h * c];
            let (gw1, rest) = grad.split_at_mut(f * h);
            let (gb1, rest) = rest.split_at_mut(h);
            let (gw2, gb2) = rest.split_at_mut(h * c);
            for ((ai, grow), (wrow, da)) in hidden
                .iter()
                .zip(gw2.chunks_exact_mut(c))
                .zip(w2.chunks_exact(c).zip(dhidden.iter_mut()))
            {
                let mut back = 0.0;
                for ((g, d), wij) in grow.iter_mut().zip(dz).zip(wrow) {
                    *g += ai * d;
                    back += wij * d;
                }
                *da = back * (1.0 - ai * ai);
            }
            gb2.iter_mut().zip(dz).for_each(|(g, d)| *g += d);
            for (xi, row) in x.iter().zip(gw1.chunks_exact_mut(h)) {
                for (g, d) in row.iter_mut().zip(&dhidden) {
                    *g += xi * d;
                }
            }
            gb1.iter_mut().zip(&dhidden).for_each(|(g, d)| *g += d);
        }
    }
    Ok((loss / n, grad))
}

/// Mini-batch SGD over a client's shard. The input is not modified.
///
/// Each epoch reshuffles with `rng`; the final short batch is kept.
pub fn local_train(
    params: &ModelParams,
    shard: &Dataset,
    config: &TrainConfig,
    rng: &mut RngStream,
) -> Result<ModelParams, ModelError> {
    if shard.n_features() != params.spec.n_features {
        return Err(ModelError::ShapeMismatch(format!(
            "shard width {} vs model width {}",
            shard.n_features(),
            params.spec.n_features
        )));
    }
    let mut out = params.clone();
    let f = shard.n_features();
    let batch_size = config.batch_size.max(1);
    let mut order: Vec<usize> = (0..shard.n_samples()).collect();
    let mut xb = Vec::with_capacity(batch_size * f);
    let mut yb = Vec::with_capacity(batch_size);
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for batch in order.chunks(batch_size) {
            xb.clear();
            yb.clear();
            for &i in batch {
                xb.extend_from_slice(shard.row(i));
                yb.push(shard.labels()[i]);
            }
            let (_, grad) = loss_and_gradient(&out, &xb, &yb)?;
            for (w, g) in out.values.iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
        }
    }
    Ok(out)
}

/// Accuracy, mean loss and per-class probabilities on a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub mean_loss: f64,
    /// Row-major `n_samples × n_classes`.
    pub probabilities: Vec<f64>,
    pub n_classes: usize,
}

/// Evaluate on every sample. Argmax ties go to the lowest class index.
pub fn evaluate(params: &ModelParams, dataset: &Dataset) -> Result<Evaluation, ModelError> {
    if dataset.n_classes() > params.spec.n_classes {
        return Err(ModelError::ShapeMismatch(format!(
            "dataset has {} classes, model {}",
            dataset.n_classes(),
            params.spec.n_classes
        )));
    }
    check_batch(params, dataset.features(), dataset.labels())?;
    let spec = params.spec;
    let c = spec.n_classes;
    let mut hidden = vec![0.0; spec.hidden_units];
    let mut probabilities = vec![0.0; dataset.n_samples() * c];
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (i, (row, out)) in dataset
        .features()
        .chunks_exact(spec.n_features)
        .zip(probabilities.chunks_exact_mut(c))
        .enumerate()
    {
        let label = dataset.labels()[i];
        loss += forward(&spec, &params.values, row, Some(label), &mut hidden, out);
        let mut best = 0;
        for (j, &p) in out.iter().enumerate() {
            if p > out[best] {
                best = j;
            }
        }
        correct += usize::from(best == label);
    }
    let n = dataset.n_samples() as f64;
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        mean_loss: loss / n,
        probabilities,
        n_classes: c,
    })
}
