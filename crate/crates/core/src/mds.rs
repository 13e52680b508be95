//! Classical multidimensional scaling (principal coordinates) and Gower's
//! out-of-sample scoring formula.

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// A point in embedding coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Score(pub Vec<f64>);

impl Score {
    pub fn zeros(k: usize) -> Self {
        Score(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &Score) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Result of classical MDS: retained eigenpairs, principal-coordinate
/// scores and the diagonal of the doubly-centered matrix (kept for
/// out-of-sample scoring).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "EmbeddingRepr", try_from = "EmbeddingRepr")]
pub struct MdsEmbedding {
    pub k: usize,
    /// n x k matrix of principal coordinates; column j has squared norm
    /// lambda_j.
    pub scores: Array2<f64>,
    /// Retained eigenvalues, strictly positive and nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// Diagonal of the doubly-centered matrix B.
    pub b_diag: Vec<f64>,
    /// Variance fraction of each retained eigenvalue over the positive
    /// eigenvalue total.
    pub explained: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingRepr {
    k: usize,
    eigenvalues: Vec<f64>,
    scores: Vec<Vec<f64>>,
    b_diag: Vec<f64>,
    explained: Vec<f64>,
}

impl From<MdsEmbedding> for EmbeddingRepr {
    fn from(e: MdsEmbedding) -> Self {
        let scores = e.scores.rows().into_iter().map(|r| r.to_vec()).collect();
        EmbeddingRepr {
            k: e.k,
            eigenvalues: e.eigenvalues,
            scores,
            b_diag: e.b_diag,
            explained: e.explained,
        }
    }
}

impl TryFrom<EmbeddingRepr> for MdsEmbedding {
    type Error = Error;
    fn try_from(r: EmbeddingRepr) -> Result<Self> {
        let n = r.scores.len();
        let mut scores = Array2::<f64>::zeros((n, r.k));
        for (i, row) in r.scores.iter().enumerate() {
            if row.len() != r.k {
                return Err(Error::DimensionMismatch {
                    what: "embedding scores row",
                    expected: r.k,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                scores[[i, j]] = v;
            }
        }
        Ok(MdsEmbedding {
            k: r.k,
            scores,
            eigenvalues: r.eigenvalues,
            b_diag: r.b_diag,
            explained: r.explained,
        })
    }
}

impl MdsEmbedding {
    pub fn n(&self) -> usize {
        self.scores.nrows()
    }

    /// Score of training object i (row i of the score matrix).
    pub fn training_score(&self, i: usize) -> Score {
        Score(self.scores.row(i).to_vec())
    }

    /// Per-row standard deviation along component j: sqrt(lambda_j / n).
    pub fn component_sd(&self, j: usize) -> f64 {
        (self.eigenvalues[j] / self.n() as f64).sqrt()
    }

    /// The same embedding restricted to its leading `k` components.
    pub fn truncated(&self, k: usize) -> MdsEmbedding {
        let k = k.min(self.k).max(1);
        MdsEmbedding {
            k,
            scores: self.scores.slice(ndarray::s![.., ..k]).to_owned(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
            b_diag: self.b_diag.clone(),
            explained: self.explained[..k].to_vec(),
        }
    }
}

/// Doubly centers the squared distances:
/// B_ij = -(D²_ij - mean_i(D²) - mean_j(D²) + mean_all(D²)) / 2.
pub fn double_center(d: &DistanceMatrix) -> Array2<f64> {
    let n = d.n();
    let sq = d.matrix().mapv(|x| x * x);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            b[[i, j]] = -(sq[[i, j]] - row_means[i] - row_means[j] + grand) / 2.0;
        }
    }
    b
}

/// Classical MDS of a distance matrix.
///
/// Retains at most `k_max` eigenpairs with positive eigenvalues above
/// `eig_floor * lambda_1`. Negative eigenvalues (a non-Euclidean metric)
/// are discarded; a warning is logged when the discarded magnitude
/// exceeds 1% of the leading eigenvalue.
pub fn cmds(d: &DistanceMatrix, k_max: usize, eig_floor: f64) -> Result<MdsEmbedding> {
    if k_max == 0 {
        return Err(Error::InvalidParams("k_max must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&eig_floor) {
        return Err(Error::InvalidParams("eig_floor must lie in [0, 1)".into()));
    }
    let b = double_center(d);
    let (lam, vecs) = crate::linalg::jacobi_eigen(&b);
    let n = d.n();
    let lam1 = lam[0];
    if !(lam1 > 0.0) {
        return Err(Error::AllEigenvaluesNonpositive);
    }
    let most_negative = lam[n - 1];
    if most_negative < -0.01 * lam1 {
        log::warn!(
            "discarding negative cMDS eigenvalues down to {most_negative:.4e} \
             ({:.1}% of lambda_1): the metric is not Euclidean",
            100.0 * most_negative.abs() / lam1
        );
    }
    let positive_total: f64 = lam.iter().filter(|&&x| x > 0.0).sum();
    // never retain numerically-zero eigenvalues, whatever the caller's floor
    let floor = eig_floor.max(1e-12);
    let mut k = 0;
    while k < k_max && k < n && lam[k] > floor * lam1 {
        k += 1;
    }
    let mut scores = Array2::<f64>::zeros((n, k));
    for j in 0..k {
        let s = lam[j].sqrt();
        // fix the arbitrary eigenvector sign: first non-negligible entry
        // positive, so repeated runs and serialized models agree
        let mut sign = 1.0;
        for i in 0..n {
            if vecs[[i, j]].abs() > 1e-9 {
                sign = vecs[[i, j]].signum();
                break;
            }
        }
        for i in 0..n {
            scores[[i, j]] = vecs[[i, j]] * s * sign;
        }
    }
    let b_diag = (0..n).map(|i| b[[i, i]]).collect();
    Ok(MdsEmbedding {
        k,
        scores,
        eigenvalues: lam.iter().take(k).copied().collect(),
        b_diag,
        explained: lam.iter().take(k).map(|&l| l / positive_total).collect(),
    })
}

/// Smallest dimension covering `coverage` of the positive-eigenvalue
/// variance, capped at `cap`. Used as the default retained dimension.
pub fn covering_dimension(explained: &[f64], coverage: f64, cap: usize) -> usize {
    let mut cum = 0.0;
    for (j, &frac) in explained.iter().enumerate() {
        cum += frac;
        if cum >= coverage {
            return (j + 1).min(cap);
        }
    }
    explained.len().min(cap).max(1)
}

/// Gower's out-of-sample scoring: maps distances from a new object to the
/// training objects into embedding coordinates,
/// s = Λ⁻¹ Sᵀ (diag(B) - d²_new) / 2.
pub fn gower_score(e: &MdsEmbedding, d_new: &[f64]) -> Result<Score> {
    let n = e.n();
    if d_new.len() != n {
        return Err(Error::DimensionMismatch {
            what: "gower_score distances",
            expected: n,
            found: d_new.len(),
        });
    }
    let half: Vec<f64> = (0..n)
        .map(|i| (e.b_diag[i] - d_new[i] * d_new[i]) / 2.0)
        .collect();
    let mut out = vec![0.0; e.k];
    for j in 0..e.k {
        let mut acc = 0.0;
        for i in 0..n {
            acc += e.scores[[i, j]] * half[i];
        }
        out[j] = acc / e.eigenvalues[j];
    }
    Ok(Score(out))
}

/// Checks the structural invariants of an embedding; used by tests.
pub fn check_embedding_invariants(e: &MdsEmbedding) -> Result<()> {
    let n = e.n();
    let lam1 = e.eigenvalues[0];
    for j in 0..e.k {
        if e.eigenvalues[j] <= 0.0 {
            return Err(Error::InvalidInput(format!("eigenvalue {j} not positive")));
        }
        if j > 0 && e.eigenvalues[j] > e.eigenvalues[j - 1] {
            return Err(Error::InvalidInput("eigenvalues not nonincreasing".into()));
        }
        let col = e.scores.column(j);
        let sq: f64 = col.iter().map(|x| x * x).sum();
        if (sq - e.eigenvalues[j]).abs() > 1e-8 * e.eigenvalues[j] {
            return Err(Error::InvalidInput(format!(
                "score column {j} squared norm {sq} != eigenvalue {}",
                e.eigenvalues[j]
            )));
        }
        let colsum: f64 = col.iter().sum();
        if colsum.abs() > 1e-8 * (n as f64 * lam1).sqrt() {
            return Err(Error::InvalidInput(format!("score column {j} not centered")));
        }
        for j2 in (j + 1)..e.k {
            let dot: f64 = (0..n).map(|i| e.scores[[i, j]] * e.scores[[i, j2]]).sum();
            if dot.abs() > 1e-8 * lam1 {
                return Err(Error::InvalidInput(format!(
                    "score columns {j} and {j2} not orthogonal (dot {dot})"
                )));
            }
        }
    }
    Ok(())
}
