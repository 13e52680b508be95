//! The metric-space capability: a distance, a median, and backscoring from
//! embedding coordinates to the data space.

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::mds::{gower_score, MdsEmbedding, Score};

/// A space in which objects can only be compared through a distance.
pub trait MetricSpace {
    type Object: Clone;

    fn distance(&self, a: &Self::Object, b: &Self::Object) -> Result<f64>;

    /// Pairwise distance matrix of a sample.
    fn distance_matrix(&self, objects: &[Self::Object]) -> Result<DistanceMatrix> {
        DistanceMatrix::from_fn(objects.len(), |i, j| self.distance(&objects[i], &objects[j]))
    }

    /// Distances from one object to every member of a sample.
    fn distances_to(&self, objects: &[Self::Object], y: &Self::Object) -> Result<Vec<f64>> {
        objects.iter().map(|o| self.distance(o, y)).collect()
    }
}

/// Index of the candidate minimizing the sum of distances to the sample.
/// Ties break toward the lowest candidate index.
pub fn frechet_median_index<S: MetricSpace>(
    space: &S,
    objects: &[S::Object],
    candidates: &[S::Object],
) -> Result<usize> {
    if objects.is_empty() || candidates.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut best = 0usize;
    let mut best_sum = f64::INFINITY;
    for (idx, cand) in candidates.iter().enumerate() {
        let mut sum = 0.0;
        for obj in objects {
            sum += space.distance(cand, obj)?;
        }
        if sum < best_sum {
            best_sum = sum;
            best = idx;
        }
    }
    Ok(best)
}

/// The candidate minimizing the sum of distances to the sample. When no
/// explicit candidate set exists, pass the objects themselves (the medoid).
pub fn frechet_median<S: MetricSpace>(
    space: &S,
    objects: &[S::Object],
    candidates: &[S::Object],
) -> Result<S::Object> {
    Ok(candidates[frechet_median_index(space, objects, candidates)?].clone())
}

/// Maps an embedding coordinate back to a data-space object. Implementations
/// must return an object whose forward score reproduces the target within
/// the configured tolerance, choosing the feasible candidate closest to the
/// centroid.
pub trait Backscorer {
    type Object: Clone;

    fn backscore(&self, target: &Score) -> Result<Self::Object>;

    /// The response-space centroid the search contracts toward.
    fn centroid(&self) -> &Self::Object;
}

/// Default backscoring tolerance: 0.05 * sqrt(lambda_1).
pub fn default_tol_score(e: &MdsEmbedding) -> f64 {
    0.05 * e.eigenvalues[0].sqrt()
}

/// Forward-scores a candidate object and returns the residual to the target
/// (restricted to the target's leading components).
pub fn score_residual<S: MetricSpace>(
    space: &S,
    e: &MdsEmbedding,
    training: &[S::Object],
    candidate: &S::Object,
    target: &Score,
) -> Result<f64> {
    let d = space.distances_to(training, candidate)?;
    let s = gower_score(e, &d)?;
    let mut acc = 0.0;
    for j in 0..e.k {
        let t = if j < target.len() { target.0[j] } else { 0.0 };
        // Components beyond the target's length are unconstrained.
        if j < target.len() {
            acc += (s.0[j] - t) * (s.0[j] - t);
        }
    }
    Ok(acc.sqrt())
}

/// Indices of the `count` objects whose training scores are nearest the
/// target, in increasing distance order.
pub fn nearest_by_score(e: &MdsEmbedding, target: &Score, count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..e.n()).collect();
    let dist = |i: usize| {
        let row = e.training_score(i);
        let mut acc = 0.0;
        for j in 0..target.len().min(row.len()) {
            acc += (row.0[j] - target.0[j]) * (row.0[j] - target.0[j]);
        }
        for j in target.len()..row.len() {
            acc += row.0[j] * row.0[j];
        }
        acc
    };
    order.sort_by(|&a, &b| dist(a).partial_cmp(&dist(b)).unwrap().then(a.cmp(&b)));
    order.truncate(count);
    order
}
