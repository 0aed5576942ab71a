//! Sample pools and their assignment to clients.

mod cifar;
mod idx;
mod partition;
mod synthetic;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::rng::RngStream;

pub use cifar::{load_cifar10_binary, parse_cifar10_records, CIFAR10_RECORD_LEN};
pub use idx::{encode_idx_images, encode_idx_labels, load_idx, parse_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use partition::{partition_class_noniid, partition_iid, partition_quantity_skew, Partition};
pub use synthetic::generate_synthetic;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("{images} images but {labels} labels")]
    DimensionMismatch { images: usize, labels: usize },
    #[error("truncated input: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("at least one input file is required")]
    NoFiles,
    #[error("{samples} samples cannot cover {clients} clients")]
    TooFewSamples { samples: usize, clients: usize },
    #[error("infeasible class assignment: {0}")]
    InfeasibleAssignment(String),
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Dense labelled samples. Features are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    n_features: usize,
    n_classes: usize,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        n_features: usize,
        n_classes: usize,
    ) -> Result<Self, DataError> {
        if labels.is_empty() {
            return Err(DataError::Malformed("dataset has no samples".into()));
        }
        if n_features == 0 || features.len() != labels.len() * n_features {
            return Err(DataError::Malformed(format!(
                "{} feature values for {} samples of width {}",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(DataError::LabelOutOfRange { label, n_classes });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Malformed("non-finite feature value".into()));
        }
        Ok(Dataset {
            features,
            labels,
            n_features,
            n_classes,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Copy of the given samples, in the given order.
    ///
    /// # Panics
    ///
    /// Panics on an empty index list or an out-of-range index.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        assert!(!indices.is_empty(), "subset must be non-empty");
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            n_features: self.n_features,
            n_classes: self.n_classes,
        }
    }

    /// Number of samples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Shuffle and hold out `round(fraction × n)` samples, returning
    /// `(train, test)`. Both sides keep at least one sample when
    /// `fraction > 0`.
    pub fn split_holdout(
        &self,
        fraction: f64,
        rng: &mut RngStream,
    ) -> Result<(Dataset, Option<Dataset>), DataError> {
        let n = self.n_samples();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        if fraction <= 0.0 {
            return Ok((self.subset(&order), None));
        }
        if n < 2 {
            return Err(DataError::TooFewSamples {
                samples: n,
                clients: 1,
            });
        }
        let n_test = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
        let (test, train) = order.split_at(n_test);
        Ok((self.subset(train), Some(self.subset(test))))
    }
}
