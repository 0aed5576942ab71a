use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a client within its federation, `0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub usize);

impl ClientId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Cumulative selection counts `s_i`, one per client.
///
/// Updated by the orchestrator after each round; strategies and the
/// fairness index only read it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionLedger {
    counts: Vec<u64>,
}

impl SelectionLedger {
    pub fn new(num_clients: usize) -> Self {
        SelectionLedger {
            counts: vec![0; num_clients],
        }
    }

    pub fn num_clients(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, id: ClientId) -> u64 {
        self.counts[id.0]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Add one selection for every id in `cohort`.
    ///
    /// # Panics
    ///
    /// Panics if an id is out of range.
    pub fn record(&mut self, cohort: &[ClientId]) {
        for id in cohort {
            self.counts[id.0] += 1;
        }
    }
}

impl From<Vec<u64>> for SelectionLedger {
    fn from(counts: Vec<u64>) -> Self {
        SelectionLedger { counts }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_accumulates() {
        let mut l = SelectionLedger::new(4);
        l.record(&[ClientId(0), ClientId(2)]);
        l.record(&[ClientId(2), ClientId(3)]);
        assert_eq!(l.counts(), &[1, 0, 2, 1]);
        assert_eq!(l.total(), 4);
        assert_eq!(l.count(ClientId(2)), 2);
    }

    #[test]
    #[should_panic]
    fn out_of_range_panics() {
        SelectionLedger::new(2).record(&[ClientId(2)]);
    }
}
