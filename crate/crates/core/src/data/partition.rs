use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};

use super::{DataError, Dataset};
use crate::ledger::ClientId;
use crate::rng::RngStream;

/// Sample indices held by each client. Shards are disjoint and non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    shards: Vec<Vec<usize>>,
}

impl Partition {
    pub fn from_shards(shards: Vec<Vec<usize>>) -> Self {
        Partition { shards }
    }

    pub fn num_clients(&self) -> usize {
        self.shards.len()
    }

    pub fn shard(&self, id: ClientId) -> &[usize] {
        &self.shards[id.0]
    }

    pub fn shards(&self) -> &[Vec<usize>] {
        &self.shards
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.shards.iter().map(Vec::len).collect()
    }

    pub fn total_assigned(&self) -> usize {
        self.shards.iter().map(Vec::len).sum()
    }

    /// Check disjointness, range and non-emptiness against a pool of
    /// `n_samples`.
    pub fn validate(&self, n_samples: usize) -> Result<(), String> {
        let mut seen = vec![false; n_samples];
        for (client, shard) in self.shards.iter().enumerate() {
            if shard.is_empty() {
                return Err(format!("client {client} has no samples"));
            }
            for &i in shard {
                if i >= n_samples {
                    return Err(format!("index {i} out of range"));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(format!("index {i} assigned twice"));
                }
            }
        }
        Ok(())
    }

    /// Distinct labels held by each client.
    pub fn label_sets(&self, dataset: &Dataset) -> Vec<Vec<usize>> {
        self.shards
            .iter()
            .map(|shard| {
                let mut labels: Vec<usize> = shard.iter().map(|&i| dataset.labels()[i]).collect();
                labels.sort_unstable();
                labels.dedup();
                labels
            })
            .collect()
    }
}

/// Split `n` items into `parts` contiguous sizes differing by at most one.
/// The first `n % parts` parts get the extra item.
fn even_sizes(n: usize, parts: usize) -> Vec<usize> {
    let base = n / parts;
    let extra = n % parts;
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}

fn split_by_sizes(order: &[usize], sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut shards = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &s in sizes {
        shards.push(order[start..start + s].to_vec());
        start += s;
    }
    shards
}

/// Random permutation cut into `n_clients` shards of near-equal size.
pub fn partition_iid(
    dataset: &Dataset,
    n_clients: usize,
    rng: &mut RngStream,
) -> Result<Partition, DataError> {
    let n = dataset.n_samples();
    if n_clients == 0 || n < n_clients {
        return Err(DataError::TooFewSamples {
            samples: n,
            clients: n_clients,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(Partition::from_shards(split_by_sizes(
        &order,
        &even_sizes(n, n_clients),
    )))
}

/// Each client holds samples from exactly `classes_per_client` classes.
///
/// Class slots are dealt round-robin (over a shuffled class order) to
/// clients taken in shuffled order, so every class is held by
/// `⌊N·k/C⌋` or `⌈N·k/C⌉` clients. A class's samples are then split
/// evenly among its holders.
pub fn partition_class_noniid(
    dataset: &Dataset,
    n_clients: usize,
    classes_per_client: usize,
    rng: &mut RngStream,
) -> Result<Partition, DataError> {
    let n_classes = dataset.n_classes();
    if n_clients == 0 {
        return Err(DataError::TooFewSamples {
            samples: dataset.n_samples(),
            clients: 0,
        });
    }
    if classes_per_client == 0 || classes_per_client > n_classes {
        return Err(DataError::InfeasibleAssignment(format!(
            "{classes_per_client} classes per client with {n_classes} classes"
        )));
    }
    let slots = classes_per_client * n_clients;
    if slots < n_classes {
        return Err(DataError::InfeasibleAssignment(format!(
            "{slots} class slots cannot cover {n_classes} classes"
        )));
    }

    let mut client_order: Vec<usize> = (0..n_clients).collect();
    client_order.shuffle(rng);
    let mut class_order: Vec<usize> = (0..n_classes).collect();
    class_order.shuffle(rng);

    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for slot in 0..slots {
        let client = client_order[slot / classes_per_client];
        holders[class_order[slot % n_classes]].push(client);
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &label) in dataset.labels().iter().enumerate() {
        by_class[label].push(i);
    }

    let mut shards: Vec<Vec<usize>> = vec![Vec::new(); n_clients];
    for (class, members) in by_class.iter_mut().enumerate() {
        let owners = &holders[class];
        if members.len() < owners.len() {
            return Err(DataError::InfeasibleAssignment(format!(
                "class {class} has {} samples for {} clients",
                members.len(),
                owners.len()
            )));
        }
        members.shuffle(rng);
        let parts = split_by_sizes(members, &even_sizes(members.len(), owners.len()));
        for (&client, part) in owners.iter().zip(parts) {
            shards[client].extend(part);
        }
    }
    Ok(Partition::from_shards(shards))
}

/// Client sizes from one Dirichlet(α, …, α) draw over clients; labels follow
/// the global mix.
///
/// Sizes are `p_i × n` rounded by largest remainder (ties to the lower
/// client index), then any zero-size client takes one sample from the
/// current largest shard.
pub fn partition_quantity_skew(
    dataset: &Dataset,
    n_clients: usize,
    dirichlet_alpha: f64,
    rng: &mut RngStream,
) -> Result<Partition, DataError> {
    let n = dataset.n_samples();
    if n_clients == 0 || n < n_clients {
        return Err(DataError::TooFewSamples {
            samples: n,
            clients: n_clients,
        });
    }
    let gamma = Gamma::new(dirichlet_alpha, 1.0).map_err(|e| {
        DataError::InfeasibleAssignment(format!("dirichlet alpha {dirichlet_alpha}: {e}"))
    })?;
    let draws: Vec<f64> = (0..n_clients).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    let proportions: Vec<f64> = if total > 0.0 && total.is_finite() {
        draws.iter().map(|g| g / total).collect()
    } else {
        vec![1.0 / n_clients as f64; n_clients]
    };
    let sizes = dirichlet_sizes(&proportions, n);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(Partition::from_shards(split_by_sizes(&order, &sizes)))
}

/// Largest-remainder apportionment of `n` by `proportions`, floored at 1.
pub(crate) fn dirichlet_sizes(proportions: &[f64], n: usize) -> Vec<usize> {
    let quotas: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut by_remainder: Vec<usize> = (0..sizes.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in by_remainder.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }

    for i in 0..sizes.len() {
        if sizes[i] == 0 {
            let donor = largest_index(&sizes);
            sizes[donor] -= 1;
            sizes[i] = 1;
        }
    }
    sizes
}

fn largest_index(sizes: &[usize]) -> usize {
    let mut best = 0;
    for (i, &s) in sizes.iter().enumerate() {
        if s > sizes[best] {
            best = i;
        }
    }
    best
}
