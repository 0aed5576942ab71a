use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::rng::RngStream;

/// Isotropic unit-variance Gaussian blobs, one per class.
///
/// Class means sit at distance `class_separation` from the origin along
/// random directions. When `n_features >= n_classes` the directions are
/// orthogonalized (a random orthonormal frame), otherwise they are
/// independent random unit vectors. Labels are `i mod n_classes` shuffled,
/// so class sizes differ by at most one.
///
/// # Panics
///
/// Panics if `n_samples < n_classes`, `n_classes < 2` or `n_features == 0`.
pub fn generate_synthetic(
    n_samples: usize,
    n_features: usize,
    n_classes: usize,
    class_separation: f64,
    rng: &mut RngStream,
) -> Dataset {
    assert!(n_classes >= 2 && n_features >= 1);
    assert!(n_samples >= n_classes, "need at least one sample per class");

    let mut directions: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| (0..n_features).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    if n_features >= n_classes {
        gram_schmidt(&mut directions);
    } else {
        for d in &mut directions {
            normalize(d);
        }
    }
    let means: Vec<Vec<f64>> = directions
        .into_iter()
        .map(|d| d.into_iter().map(|v| v * class_separation).collect())
        .collect();

    let mut labels: Vec<usize> = (0..n_samples).map(|i| i % n_classes).collect();
    labels.shuffle(rng);

    let mut features = Vec::with_capacity(n_samples * n_features);
    for &label in &labels {
        for mean in &means[label] {
            let noise: f64 = StandardNormal.sample(rng);
            features.push(mean + noise);
        }
    }
    Dataset::new(features, labels, n_features, n_classes).expect("generated data is well formed")
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn gram_schmidt(vs: &mut [Vec<f64>]) {
    for i in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(i);
        let v = &mut rest[0];
        for u in done.iter() {
            let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(x, ui)| *x -= dot * ui);
        }
        normalize(v);
    }
}
