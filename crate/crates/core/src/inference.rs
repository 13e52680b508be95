//! Response-scale fit assessment: residual distances, RSS/TSS, the
//! F-statistic, and seeded permutation tests.

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Whether residual distances are summed squared (default) or raw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ResidualSum {
    #[default]
    Squared,
    Unsquared,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitAssessment {
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    pub r2: f64,
}

/// Residual sum over predicted/observed object pairs.
pub fn rss<S: MetricSpace>(
    space: &S,
    predicted: &[S::Object],
    observed: &[S::Object],
    mode: ResidualSum,
) -> Result<f64> {
    let residuals = residual_distances(space, predicted, observed)?;
    Ok(sum_residuals(&residuals, mode))
}

pub fn residual_distances<S: MetricSpace>(
    space: &S,
    predicted: &[S::Object],
    observed: &[S::Object],
) -> Result<Vec<f64>> {
    if predicted.len() != observed.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction count",
            expected: observed.len(),
            found: predicted.len(),
        });
    }
    predicted
        .iter()
        .zip(observed)
        .map(|(p, o)| space.distance(p, o))
        .collect()
}

pub fn sum_residuals(residuals: &[f64], mode: ResidualSum) -> f64 {
    match mode {
        ResidualSum::Squared => residuals.iter().map(|d| d * d).sum(),
        ResidualSum::Unsquared => residuals.iter().sum(),
    }
}

/// Assessment against a constant null prediction (the response centroid).
pub fn assess_fit<S: MetricSpace>(
    space: &S,
    predicted: &[S::Object],
    observed: &[S::Object],
    null_prediction: &S::Object,
    mode: ResidualSum,
) -> Result<FitAssessment> {
    let residuals = residual_distances(space, predicted, observed)?;
    let rss = sum_residuals(&residuals, mode);
    let null_res: Vec<f64> = observed
        .iter()
        .map(|o| space.distance(null_prediction, o))
        .collect::<Result<_>>()?;
    let tss = sum_residuals(&null_res, mode);
    if tss <= 0.0 {
        return Err(Error::ZeroTss);
    }
    Ok(FitAssessment {
        residuals,
        rss,
        tss,
        r2: 1.0 - rss / tss,
    })
}

pub fn r_squared(fit: &FitAssessment) -> Result<f64> {
    if fit.tss <= 0.0 {
        return Err(Error::ZeroTss);
    }
    Ok(1.0 - fit.rss / fit.tss)
}

/// F = (RSS_small - RSS_large) / RSS_large.
pub fn f_statistic(rss_small: f64, rss_large: f64) -> Result<f64> {
    if rss_large <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((rss_small - rss_large) / rss_large)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermutationResult {
    pub observed: f64,
    #[serde(rename = "R")]
    pub r: usize,
    pub replicates: Vec<f64>,
    /// Plain fraction of replicates at or above the observed statistic.
    pub p: f64,
    /// Conservative variant (b + 1) / (R + 1).
    pub p_conservative: f64,
    pub seed: u64,
    pub excluded_replicates: usize,
}

/// Seed for replicate `i`, derived from the master seed by a counter scheme
/// so replicates are independent and order-stable.
pub fn replicate_seed(master: u64, i: usize) -> u64 {
    master
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(i as u64 + 1)
}

/// Permutation test of a statistic against relabelings of n rows.
///
/// `refit` receives a permutation of 0..n (identity for the observed value)
/// and returns the test statistic after refitting with responses (or a
/// designated predictor block) reordered by it. Replicates whose refit fails
/// are excluded with a warning and counted in the result.
pub fn permutation_test<F>(
    n: usize,
    mut refit: F,
    r: usize,
    seed: u64,
) -> Result<PermutationResult>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    if r == 0 {
        return Err(Error::InvalidParams("permutation count must be >= 1".into()));
    }
    let identity: Vec<usize> = (0..n).collect();
    let observed = refit(&identity)?;
    let mut replicates = Vec::with_capacity(r);
    let mut excluded = 0usize;
    for i in 0..r {
        let mut perm = identity.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(seed, i));
        perm.shuffle(&mut rng);
        match refit(&perm) {
            Ok(f) => replicates.push(f),
            Err(e) => {
                excluded += 1;
                log::warn!("permutation replicate {i} excluded: {e}");
            }
        }
    }
    let kept = replicates.len();
    if kept == 0 {
        return Err(Error::NoConvergence {
            iterations: r,
            residual: f64::NAN,
        });
    }
    let b = replicates.iter().filter(|&&f| f >= observed).count();
    Ok(PermutationResult {
        observed,
        r: kept,
        p: b as f64 / kept as f64,
        p_conservative: (b as f64 + 1.0) / (kept as f64 + 1.0),
        replicates,
        seed,
        excluded_replicates: excluded,
    })
}
