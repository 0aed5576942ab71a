//! Client selection strategies.
//!
//! Every strategy sees the current round's resource draw and the ledger of
//! selections through the previous round, and returns `k` distinct client
//! ids sorted ascending. Ranked strategies order by score descending with
//! ties broken by ascending id.
//!
//! Reputation is `r_i = comp_speed + comm_speed`. RBFF scores
//! `r_i / (1 + s_i)`, RBCSF scores `r_i − α·s_i`, where `s_i` is the
//! cumulative selection count.

use std::cmp::Ordering;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{SpeedRange, Strategy};
use crate::ledger::{ClientId, SelectionLedger};
use crate::rng::RngStream;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectionError {
    #[error("cohort of {k} requested from {available} clients")]
    KTooLarge { k: usize, available: usize },
    #[error("{profiles} resource profiles but the ledger tracks {ledger} clients")]
    LedgerMismatch { profiles: usize, ledger: usize },
}

/// One client's speeds for one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceProfile {
    /// Samples per second.
    pub comp_speed: f64,
    /// Bits per second.
    pub comm_speed: f64,
}

/// Reputation and strategy score of one client in one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub client: ClientId,
    pub reputation: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Random,
    CompGreedy,
    CommGreedy,
    Rbff,
    Rbcsf,
}

/// A strategy with its parameters resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// RBCSF penalty per past selection; unused by other kinds.
    pub alpha: f64,
    pub normalize_reputation: bool,
}

/// Default RBCSF penalty as a fraction of `comm.max + comp.max` on raw
/// reputations.
pub const RBCSF_RAW_ALPHA_FRACTION: f64 = 0.02;
/// Default RBCSF penalty on min-max normalized reputations (range `[0, 2]`).
pub const RBCSF_NORMALIZED_ALPHA: f64 = 0.04;

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        StrategyConfig {
            kind,
            alpha: 0.0,
            normalize_reputation: false,
        }
    }

    /// Resolve a configured strategy. An unset RBCSF `alpha` becomes
    /// `0.02 × (comm.max + comp.max)` with raw reputations, or `0.04` with
    /// normalized ones; either moves a client roughly one rank per past
    /// selection in a 50-client federation.
    pub fn resolve(strategy: &Strategy, comp: SpeedRange, comm: SpeedRange) -> Self {
        match *strategy {
            Strategy::Random => Self::new(StrategyKind::Random),
            Strategy::CompGreedy => Self::new(StrategyKind::CompGreedy),
            Strategy::CommGreedy => Self::new(StrategyKind::CommGreedy),
            Strategy::Rbff {
                normalize_reputation,
            } => StrategyConfig {
                normalize_reputation,
                ..Self::new(StrategyKind::Rbff)
            },
            Strategy::Rbcsf {
                alpha,
                normalize_reputation,
            } => {
                let alpha = alpha.unwrap_or(if normalize_reputation {
                    RBCSF_NORMALIZED_ALPHA
                } else {
                    RBCSF_RAW_ALPHA_FRACTION * (comm.max + comp.max)
                });
                StrategyConfig {
                    kind: StrategyKind::Rbcsf,
                    alpha,
                    normalize_reputation,
                }
            }
        }
    }
}

/// Reputation of `profile` in a round whose full draw is `all_profiles`.
///
/// Raw mode is `comp_speed + comm_speed`. Normalized mode min-max scales
/// each resource over the round to `[0, 1]` (a degenerate range maps to
/// 0.5) and sums the two.
pub fn reputation(
    profile: &ResourceProfile,
    all_profiles: &[ResourceProfile],
    normalize: bool,
) -> f64 {
    if !normalize {
        return profile.comp_speed + profile.comm_speed;
    }
    let bounds = Bounds::of(all_profiles);
    bounds.comp.scale(profile.comp_speed) + bounds.comm.scale(profile.comm_speed)
}

#[derive(Clone, Copy)]
struct MinMax {
    min: f64,
    max: f64,
}

impl MinMax {
    fn scale(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.5
        }
    }
}

struct Bounds {
    comp: MinMax,
    comm: MinMax,
}

impl Bounds {
    fn of(profiles: &[ResourceProfile]) -> Self {
        let init = MinMax {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        let (comp, comm) = profiles.iter().fold((init, init), |(a, b), p| {
            (
                MinMax {
                    min: a.min.min(p.comp_speed),
                    max: a.max.max(p.comp_speed),
                },
                MinMax {
                    min: b.min.min(p.comm_speed),
                    max: b.max.max(p.comm_speed),
                },
            )
        });
        Bounds { comp, comm }
    }
}

/// Reputations of every client in one round.
pub fn reputations(profiles: &[ResourceProfile], normalize: bool) -> Vec<f64> {
    if !normalize {
        return profiles
            .iter()
            .map(|p| reputation(p, profiles, false))
            .collect();
    }
    let b = Bounds::of(profiles);
    profiles
        .iter()
        .map(|p| b.comp.scale(p.comp_speed) + b.comm.scale(p.comm_speed))
        .collect()
}

/// RBFF score: `reputation / (1 + prev_count)`.
pub fn rbff_score(reputation: f64, prev_count: u64) -> f64 {
    reputation / (1.0 + prev_count as f64)
}

/// RBCSF score: `reputation − alpha × prev_count`.
pub fn rbcsf_score(reputation: f64, prev_count: u64, alpha: f64) -> f64 {
    reputation - alpha * prev_count as f64
}

/// Per-client scores used by the ranked strategies.
pub fn score_clients(
    strategy: &StrategyConfig,
    profiles: &[ResourceProfile],
    ledger: &SelectionLedger,
) -> Vec<ScoreRecord> {
    let reps = reputations(profiles, strategy.normalize_reputation);
    reps.iter()
        .zip(profiles)
        .enumerate()
        .map(|(i, (&reputation, p))| {
            let id = ClientId(i);
            let s = ledger.count(id);
            let score = match strategy.kind {
                StrategyKind::Random => 0.0,
                StrategyKind::CompGreedy => p.comp_speed,
                StrategyKind::CommGreedy => p.comm_speed,
                StrategyKind::Rbff => rbff_score(reputation, s),
                StrategyKind::Rbcsf => rbcsf_score(reputation, s, strategy.alpha),
            };
            ScoreRecord {
                client: id,
                reputation,
                score,
            }
        })
        .collect()
}

/// The `k` highest scores, ties to the lower id, returned sorted by id.
pub fn top_k(scores: &[f64], k: usize) -> Vec<ClientId> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    let mut chosen: Vec<ClientId> = order.into_iter().take(k).map(ClientId).collect();
    chosen.sort_unstable();
    chosen
}

/// Pick this round's cohort.
///
/// `profiles[i]` is client `i`'s draw for the current round. `rng` is only
/// consumed by the random strategy.
pub fn select(
    strategy: &StrategyConfig,
    profiles: &[ResourceProfile],
    ledger: &SelectionLedger,
    k: usize,
    rng: &mut RngStream,
) -> Result<Vec<ClientId>, SelectionError> {
    let n = profiles.len();
    if k > n {
        return Err(SelectionError::KTooLarge { k, available: n });
    }
    if ledger.num_clients() != n {
        return Err(SelectionError::LedgerMismatch {
            profiles: n,
            ledger: ledger.num_clients(),
        });
    }
    if strategy.kind == StrategyKind::Random {
        let mut ids: Vec<ClientId> = index::sample(rng, n, k).into_iter().map(ClientId).collect();
        ids.sort_unstable();
        return Ok(ids);
    }
    let scores: Vec<f64> = score_clients(strategy, profiles, ledger)
        .iter()
        .map(|r| r.score)
        .collect();
    Ok(top_k(&scores, k))
}
