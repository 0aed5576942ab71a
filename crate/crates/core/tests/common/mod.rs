//! Reference implementations used as oracles by the integration tests.
//!
//! Each one is written from the definitions, as plainly as possible, and
//! shares no code with the library beyond its data types.

#![allow(dead_code)]

use fedsel::{ClientId, ModelParams, ResourceProfile};

/// Mean softmax cross-entropy, written with explicit loops.
pub fn naive_loss(params: &ModelParams, x: &[f64], y: &[usize]) -> f64 {
    let spec = params.spec;
    let (f, c, h) = (spec.n_features, spec.n_classes, spec.hidden_units);
    let w = &params.values;
    let mut total = 0.0;
    for (n, &label) in y.iter().enumerate() {
        let row = &x[n * f..(n + 1) * f];
        let logits: Vec<f64> = if h == 0 {
            (0..c)
                .map(|j| w[f * c + j] + (0..f).map(|i| row[i] * w[i * c + j]).sum::<f64>())
                .collect()
        } else {
            let b1 = f * h;
            let w2 = b1 + h;
            let b2 = w2 + h * c;
            let a: Vec<f64> = (0..h)
                .map(|u| (w[b1 + u] + (0..f).map(|i| row[i] * w[i * h + u]).sum::<f64>()).tanh())
                .collect();
            (0..c)
                .map(|j| w[b2 + j] + (0..h).map(|u| a[u] * w[w2 + u * c + j]).sum::<f64>())
                .collect()
        };
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        total += lse - logits[label];
    }
    total / y.len() as f64
}

/// Central finite differences of [`naive_loss`].
pub fn fd_gradient(params: &ModelParams, x: &[f64], y: &[usize], step: f64) -> Vec<f64> {
    let mut p = params.clone();
    (0..params.values.len())
        .map(|i| {
            let w = params.values[i];
            p.values[i] = w + step;
            let up = naive_loss(&p, x, y);
            p.values[i] = w - step;
            let down = naive_loss(&p, x, y);
            p.values[i] = w;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Jain's index straight from the formula.
pub fn naive_jfi(counts: &[u64]) -> f64 {
    let sum: f64 = counts.iter().map(|&s| s as f64).sum();
    let sq: f64 = counts.iter().map(|&s| (s * s) as f64).sum();
    sum * sum / (counts.len() as f64 * sq)
}

/// AUC by comparing every positive with every negative.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut half_wins = 0u64;
    let mut pairs = 0u64;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1;
                if scores[i] > scores[j] {
                    half_wins += 2;
                } else if scores[i] == scores[j] {
                    half_wins += 1;
                }
            }
        }
    }
    half_wins as f64 / (2 * pairs) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleRule {
    Comp,
    Comm,
    Rbff { normalize: bool },
    Rbcsf { normalize: bool, alpha: f64 },
}

/// Reputation `comp + comm`, or the sum of per-resource min-max scalings
/// (a constant resource scales to one half).
pub fn oracle_reputation(profiles: &[ResourceProfile], i: usize, normalize: bool) -> f64 {
    let p = profiles[i];
    if !normalize {
        return p.comp_speed + p.comm_speed;
    }
    let scale = |v: f64, all: Vec<f64>| {
        let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.5
        }
    };
    scale(p.comp_speed, profiles.iter().map(|q| q.comp_speed).collect())
        + scale(p.comm_speed, profiles.iter().map(|q| q.comm_speed).collect())
}

pub fn oracle_score(rule: OracleRule, profiles: &[ResourceProfile], counts: &[u64], i: usize) -> f64 {
    match rule {
        OracleRule::Comp => profiles[i].comp_speed,
        OracleRule::Comm => profiles[i].comm_speed,
        OracleRule::Rbff { normalize } => {
            oracle_reputation(profiles, i, normalize) / (1.0 + counts[i] as f64)
        }
        OracleRule::Rbcsf { normalize, alpha } => {
            oracle_reputation(profiles, i, normalize) - alpha * counts[i] as f64
        }
    }
}

/// Enumerate every k-subset and keep those where each member beats each
/// non-member (higher score, or equal score and lower id). Exactly one
/// subset qualifies.
pub fn brute_force_select(scores: &[f64], k: usize) -> Vec<ClientId> {
    let n = scores.len();
    let beats = |i: usize, j: usize| scores[i] > scores[j] || (scores[i] == scores[j] && i < j);
    let winners: Vec<Vec<ClientId>> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .filter(|m| {
            (0..n).filter(|i| m & (1 << i) != 0).all(|i| {
                (0..n)
                    .filter(|j| m & (1 << j) == 0)
                    .all(|j| beats(i, j))
            })
        })
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(ClientId).collect())
        .collect();
    assert_eq!(winners.len(), 1, "dominance picks a unique subset");
    winners.into_iter().next().unwrap()
}
