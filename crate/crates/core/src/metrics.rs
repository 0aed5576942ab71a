//! Jain's fairness index over selection counts and rank-sum AUC.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::SelectionLedger;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("fairness index undefined when every count is zero")]
    AllZero,
    #[error("empty input")]
    Empty,
    #[error("AUC needs both positive and negative samples")]
    SingleClass,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

/// `(Σ s_i)² / (N · Σ s_i²)`.
///
/// Evaluated as an exact integer fraction reduced by its gcd before the
/// single floating division, so `jfi(c) == jfi(m·c)` bit for bit.
pub fn jfi(counts: &[u64]) -> Result<f64, MetricsError> {
    if counts.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sum: u128 = counts.iter().map(|&s| u128::from(s)).sum();
    if sum == 0 {
        return Err(MetricsError::AllZero);
    }
    let sum_sq: u128 = counts.iter().map(|&s| u128::from(s) * u128::from(s)).sum();
    let num = sum * sum;
    let den = counts.len() as u128 * sum_sq;
    let g = gcd(num, den);
    Ok((num / g) as f64 / (den / g) as f64)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// JFI of a ledger together with a copy of its counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessSnapshot {
    pub jfi: f64,
    pub counts: Vec<u64>,
}

impl FairnessSnapshot {
    pub fn of(ledger: &SelectionLedger) -> Result<Self, MetricsError> {
        Ok(FairnessSnapshot {
            jfi: jfi(ledger.counts())?,
            counts: ledger.counts().to_vec(),
        })
    }
}

/// Probability that a random positive outscores a random negative, ties
/// counted one half.
///
/// Computed from the sorted scores: each group of tied scores contributes
/// `2·pos·(negatives below) + pos·neg` half-wins, summed in integers.
pub fn auc_binary(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(format!(
            "{} scores, {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut half_wins: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        half_wins += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        i = j;
    }
    Ok(half_wins as f64 / (2 * n_pos * n_neg) as f64)
}

/// Macro and micro one-vs-rest AUC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MulticlassAuc {
    /// Unweighted mean over classes present in `labels`.
    pub macro_auc: f64,
    /// Single binary AUC over all `n × C` (score, indicator) pairs.
    pub micro_auc: f64,
}

/// One-vs-rest AUCs from a row-major `n × n_classes` score matrix.
pub fn auc_multiclass(
    probabilities: &[f64],
    n_classes: usize,
    labels: &[usize],
) -> Result<MulticlassAuc, MetricsError> {
    if n_classes == 0 || probabilities.len() != labels.len() * n_classes {
        return Err(MetricsError::LengthMismatch(format!(
            "{} scores for {} samples × {} classes",
            probabilities.len(),
            labels.len(),
            n_classes
        )));
    }
    if labels.iter().any(|&l| l >= n_classes) {
        return Err(MetricsError::LengthMismatch("label beyond class count".into()));
    }
    let mut present = vec![false; n_classes];
    labels.iter().for_each(|&l| present[l] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(MetricsError::SingleClass);
    }

    let mut per_class = Vec::new();
    let mut column = Vec::with_capacity(labels.len());
    let mut indicator = Vec::with_capacity(labels.len());
    for class in (0..n_classes).filter(|&c| present[c]) {
        column.clear();
        indicator.clear();
        for (row, &l) in probabilities.chunks_exact(n_classes).zip(labels) {
            column.push(row[class]);
            indicator.push(l == class);
        }
        per_class.push(auc_binary(&column, &indicator)?);
    }
    let macro_auc = per_class.iter().sum::<f64>() / per_class.len() as f64;

    let flat_labels: Vec<bool> = labels
        .iter()
        .flat_map(|&l| (0..n_classes).map(move |c| c == l))
        .collect();
    let micro_auc = auc_binary(probabilities, &flat_labels)?;
    Ok(MulticlassAuc {
        macro_auc,
        micro_auc,
    })
}
