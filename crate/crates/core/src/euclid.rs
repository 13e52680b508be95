//! Euclidean point space. Used as the reference space for oracles and for
//! scalar covariates treated through the distance pipeline.

use crate::error::{Error, Result};
use crate::mds::{MdsEmbedding, Score};
use crate::metric::{default_tol_score, score_residual, Backscorer, MetricSpace};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct EuclideanSpace;

impl MetricSpace for EuclideanSpace {
    type Object = Vec<f64>;

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                what: "euclidean point",
                expected: a.len(),
                found: b.len(),
            });
        }
        Ok(a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt())
    }
}

/// Linear backscorer for Euclidean data: lifts a score through the
/// least-squares map from training scores to centered coordinates, then
/// adds the coordinate mean. This is the minimum-norm (closest to the
/// centroid) preimage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EuclideanBackscorer {
    pub points: Vec<Vec<f64>>,
    pub embedding: MdsEmbedding,
    pub mean: Vec<f64>,
    pub tol_score: f64,
}

impl EuclideanBackscorer {
    pub fn fit(points: Vec<Vec<f64>>, embedding: MdsEmbedding) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        let p = points[0].len();
        let n = points.len();
        let mut mean = vec![0.0; p];
        for pt in &points {
            for (m, &x) in mean.iter_mut().zip(pt) {
                *m += x / n as f64;
            }
        }
        let tol_score = default_tol_score(&embedding);
        Ok(Self {
            points,
            embedding,
            mean,
            tol_score,
        })
    }

    /// Least-squares lift: v = X_cᵀ S Λ⁻¹ target.
    fn lift(&self, target: &Score) -> Vec<f64> {
        let n = self.points.len();
        let p = self.mean.len();
        let e = &self.embedding;
        let mut xc = Array2::<f64>::zeros((n, p));
        for (i, pt) in self.points.iter().enumerate() {
            for j in 0..p {
                xc[[i, j]] = pt[j] - self.mean[j];
            }
        }
        let mut out = self.mean.clone();
        for j in 0..e.k.min(target.len()) {
            let coeff = target.0[j] / e.eigenvalues[j];
            for c in 0..p {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += xc[[i, c]] * e.scores[[i, j]];
                }
                out[c] += coeff * acc;
            }
        }
        out
    }
}

impl Backscorer for EuclideanBackscorer {
    type Object = Vec<f64>;

    fn backscore(&self, target: &Score) -> Result<Vec<f64>> {
        let y = self.lift(target);
        let resid = score_residual(&EuclideanSpace, &self.embedding, &self.points, &y, target)?;
        if resid > self.tol_score {
            return Err(Error::NoFeasibleSolution {
                target: target.0.clone(),
                detail: format!("euclidean lift residual {resid:.3e} > tol {:.3e}", self.tol_score),
            });
        }
        Ok(y)
    }

    fn centroid(&self) -> &Vec<f64> {
        &self.mean
    }
}
