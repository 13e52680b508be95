//! Correlation matrices under the Frobenius distance: nearest-correlation
//! projection (alternating projections with Dykstra correction), weighted
//! combinations, the Fréchet median, and penalized backscoring.

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::mds::{gower_score, MdsEmbedding, Score};
use crate::metric::{default_tol_score, nearest_by_score, Backscorer, MetricSpace};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A symmetric positive-semidefinite matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CorrRepr", try_from = "CorrRepr")]
pub struct CorrelationMatrix {
    c: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct CorrRepr {
    c: Vec<Vec<f64>>,
}

impl From<CorrelationMatrix> for CorrRepr {
    fn from(m: CorrelationMatrix) -> Self {
        CorrRepr {
            c: m.c.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }
}

impl TryFrom<CorrRepr> for CorrelationMatrix {
    type Error = Error;
    fn try_from(r: CorrRepr) -> Result<Self> {
        let m = r.c.len();
        let mut a = Array2::<f64>::zeros((m, m));
        for (i, row) in r.c.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInput("ragged correlation matrix".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                a[[i, j]] = v;
            }
        }
        CorrelationMatrix::new(a)
    }
}

/// PSD tolerance on the smallest eigenvalue.
pub const PSD_TOL: f64 = 1e-8;

impl CorrelationMatrix {
    pub fn new(c: Array2<f64>) -> Result<Self> {
        let m = c.nrows();
        if c.ncols() != m || m == 0 {
            return Err(Error::InvalidInput("correlation matrix must be square".into()));
        }
        for i in 0..m {
            if c[[i, i]] != 1.0 {
                return Err(Error::InvalidInput(format!(
                    "correlation diagonal entry {i} is {}, expected exactly 1",
                    c[[i, i]]
                )));
            }
            for j in 0..m {
                if c[[i, j]] != c[[j, i]] {
                    return Err(Error::InvalidInput(format!(
                        "correlation matrix asymmetric at ({i},{j})"
                    )));
                }
                if !(-1.0..=1.0).contains(&c[[i, j]]) {
                    return Err(Error::InvalidInput(format!(
                        "correlation entry ({i},{j}) = {} outside [-1, 1]",
                        c[[i, j]]
                    )));
                }
            }
        }
        let (lam, _) = jacobi_eigen(&c);
        if lam[m - 1] < -PSD_TOL {
            return Err(Error::InvalidInput(format!(
                "smallest eigenvalue {:.3e} below -{PSD_TOL:.0e}",
                lam[m - 1]
            )));
        }
        Ok(Self { c })
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.c
    }

    pub fn identity(m: usize) -> Self {
        Self {
            c: Array2::eye(m),
        }
    }

    /// Tidies a nearly-valid matrix into an exactly-valid one: symmetrizes,
    /// pins the diagonal to 1 and clamps entries into [-1, 1].
    fn sanitize(mut a: Array2<f64>) -> Result<Self> {
        let m = a.nrows();
        for i in 0..m {
            a[[i, i]] = 1.0;
            for j in (i + 1)..m {
                let v = 0.5 * (a[[i, j]] + a[[j, i]]);
                let v = v.clamp(-1.0, 1.0);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        Self::new(a)
    }

    pub fn to_csv(&self) -> String {
        let m = self.dim();
        let mut out = String::new();
        for i in 0..m {
            let row: Vec<String> = (0..m).map(|j| format!("{:?}", self.c[[i, j]])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|tok| {
                        tok.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidInput(format!("bad number {tok:?}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        CorrRepr { c: rows }.try_into()
    }
}

/// Frobenius distance: sqrt of summed squared entrywise differences.
pub fn frobenius_distance(a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            what: "correlation matrices",
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.c
        .iter()
        .zip(b.c.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

fn project_psd(a: &Array2<f64>) -> Array2<f64> {
    let m = a.nrows();
    let (lam, v) = jacobi_eigen(a);
    let mut out = Array2::<f64>::zeros((m, m));
    for k in 0..m {
        let l = lam[k].max(0.0);
        if l == 0.0 {
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                out[[i, j]] += l * v[[i, k]] * v[[j, k]];
            }
        }
    }
    // symmetry can drift through roundoff
    for i in 0..m {
        for j in (i + 1)..m {
            let s = 0.5 * (out[[i, j]] + out[[j, i]]);
            out[[i, j]] = s;
            out[[j, i]] = s;
        }
    }
    out
}

pub const NEAREST_CORR_TOL: f64 = 1e-10;
pub const NEAREST_CORR_MAX_ITER: usize = 500;

/// Frobenius-nearest correlation matrix to a symmetric matrix, by
/// alternating projections between the PSD cone and the unit-diagonal set
/// with Dykstra's correction.
pub fn nearest_correlation(
    a: &Array2<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<CorrelationMatrix> {
    let m = a.nrows();
    if a.ncols() != m {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    for i in 0..m {
        for j in 0..m {
            if (a[[i, j]] - a[[j, i]]).abs() > 1e-12 * (1.0 + a[[i, j]].abs()) {
                return Err(Error::InvalidInput("matrix must be symmetric".into()));
            }
        }
    }
    let mut y = a.clone();
    let mut correction = Array2::<f64>::zeros((m, m));
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let r = &y - &correction;
        let x = project_psd(&r);
        correction = &x - &r;
        let mut y_next = x;
        for i in 0..m {
            y_next[[i, i]] = 1.0;
        }
        residual = (&y_next - &y).iter().map(|v| v * v).sum::<f64>().sqrt();
        y = y_next;
        if residual < tol {
            return CorrelationMatrix::sanitize(y);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Weighted combination: the plain weighted sum when it is already a valid
/// correlation matrix, otherwise its nearest-correlation projection.
pub fn corr_combination(
    matrices: &[CorrelationMatrix],
    weights: &[f64],
) -> Result<CorrelationMatrix> {
    if matrices.is_empty() || matrices.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            what: "combination weights",
            expected: matrices.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidParams("non-finite combination weight".into()));
    }
    let m = matrices[0].dim();
    let mut sum = Array2::<f64>::zeros((m, m));
    for (mat, &w) in matrices.iter().zip(weights) {
        if mat.dim() != m {
            return Err(Error::DimensionMismatch {
                what: "combination matrices",
                expected: m,
                found: mat.dim(),
            });
        }
        sum.scaled_add(w, mat.matrix());
    }
    // valid already? diagonal and range first (cheap), then the PSD check
    let diag_ok = (0..m).all(|i| (sum[[i, i]] - 1.0).abs() < 1e-9);
    let range_ok = sum.iter().all(|&v| (-1.0 - 1e-9..=1.0 + 1e-9).contains(&v));
    if diag_ok && range_ok {
        let (lam, _) = jacobi_eigen(&sum);
        if lam[m - 1] >= -PSD_TOL {
            return CorrelationMatrix::sanitize(sum);
        }
    }
    nearest_correlation(&sum, NEAREST_CORR_TOL, NEAREST_CORR_MAX_ITER)
}

/// The correlation metric space.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct CorrSpace;

impl MetricSpace for CorrSpace {
    type Object = CorrelationMatrix;

    fn distance(&self, a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<f64> {
        frobenius_distance(a, b)
    }
}

pub const MEDIAN_PROBE_DRAWS: usize = 2000;

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Dirichlet(1,...,1) via normalized exponentials
    let mut w: Vec<f64> = (0..n)
        .map(|_| -f64::ln(1.0 - rng.gen::<f64>()))
        .collect();
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
    w
}

/// Fréchet median over the candidate family of weighted combinations:
/// the observed matrices, the equal-weight combination, and a seeded
/// Dirichlet-style probe of random combinations.
pub fn corr_frechet_median_probed(
    matrices: &[CorrelationMatrix],
    draws: usize,
    seed: u64,
) -> Result<CorrelationMatrix> {
    if matrices.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = matrices.len();
    let mut candidates: Vec<CorrelationMatrix> = matrices.to_vec();
    candidates.push(corr_combination(matrices, &vec![1.0 / n as f64; n])?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        let w = random_weights(&mut rng, n);
        candidates.push(corr_combination(matrices, &w)?);
    }
    let mut best = 0;
    let mut best_sum = f64::INFINITY;
    for (idx, cand) in candidates.iter().enumerate() {
        let mut sum = 0.0;
        for mat in matrices {
            sum += frobenius_distance(cand, mat)?;
        }
        if sum < best_sum {
            best_sum = sum;
            best = idx;
        }
    }
    Ok(candidates[best].clone())
}

/// Fréchet median with the default probe size and seed.
pub fn corr_frechet_median(matrices: &[CorrelationMatrix]) -> Result<CorrelationMatrix> {
    corr_frechet_median_probed(matrices, MEDIAN_PROBE_DRAWS, 0)
}

/// Settings for the penalized backscore search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrBackscoreConfig {
    /// Combinations are searched over this many score-nearest matrices
    /// (plus the median).
    pub n_nearest: usize,
    pub n_starts: usize,
    pub descent_rounds: usize,
    /// Doubling steps for the penalty weight before giving up.
    pub max_delta_doublings: u32,
    pub tol_score: Option<f64>,
    pub seed: u64,
}

impl Default for CorrBackscoreConfig {
    fn default() -> Self {
        CorrBackscoreConfig {
            n_nearest: 10,
            n_starts: 20,
            descent_rounds: 4,
            max_delta_doublings: 10,
            tol_score: None,
            seed: 0,
        }
    }
}

/// Backscoring for correlation matrices: minimizes
/// d(median, C_gamma) + delta * ||score(C_gamma) - target|| over combination
/// weights, doubling delta until the score residual is within tolerance.
pub fn corr_backscore(
    target: &Score,
    e: &MdsEmbedding,
    matrices: &[CorrelationMatrix],
    median: &CorrelationMatrix,
    cfg: &CorrBackscoreConfig,
) -> Result<CorrelationMatrix> {
    let tol_score = cfg.tol_score.unwrap_or_else(|| default_tol_score(e));
    let nearest = nearest_by_score(e, target, cfg.n_nearest);
    let mut family: Vec<CorrelationMatrix> =
        nearest.iter().map(|&i| matrices[i].clone()).collect();
    family.push(median.clone());
    let nf = family.len();

    let evaluate = |w: &[f64]| -> Result<(CorrelationMatrix, f64, f64)> {
        let cand = corr_combination(&family, w)?;
        let d: Vec<f64> = matrices
            .iter()
            .map(|m| frobenius_distance(&cand, m))
            .collect::<Result<_>>()?;
        let s = gower_score(e, &d)?;
        let mut acc = 0.0;
        for j in 0..target.len().min(s.len()) {
            acc += (s.0[j] - target.0[j]) * (s.0[j] - target.0[j]);
        }
        let resid = acc.sqrt();
        let dist = frobenius_distance(median, &cand)?;
        Ok((cand, dist, resid))
    };

    let delta0 = e.eigenvalues[0].sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut feasible: Vec<(CorrelationMatrix, f64)> = Vec::new();

    for doubling in 0..=cfg.max_delta_doublings {
        let delta = delta0 * f64::powi(2.0, doubling as i32);
        for _ in 0..cfg.n_starts {
            let mut w = random_weights(&mut rng, nf);
            let (_, dist0, mut resid) = evaluate(&w)?;
            let mut obj = dist0 + delta * resid;
            for _ in 0..cfg.descent_rounds {
                for coord in 0..nf {
                    // golden-section line search on this coordinate, with
                    // renormalization to keep the weights summing to 1
                    let (mut lo, mut hi) = (-0.5f64, 1.5f64);
                    const PHI: f64 = 0.618_033_988_749_894_8;
                    let try_value = |val: f64,
                                     w: &[f64]|
                     -> Result<(Vec<f64>, f64, f64, f64)> {
                        let mut cand_w = w.to_vec();
                        cand_w[coord] = val;
                        let total: f64 = cand_w.iter().sum();
                        if total.abs() < 1e-6 {
                            return Ok((cand_w, f64::INFINITY, 0.0, f64::INFINITY));
                        }
                        for v in cand_w.iter_mut() {
                            *v /= total;
                        }
                        let (_, dist, resid) = evaluate(&cand_w)?;
                        Ok((cand_w, dist + delta * resid, dist, resid))
                    };
                    for _ in 0..10 {
                        let x1 = hi - PHI * (hi - lo);
                        let x2 = lo + PHI * (hi - lo);
                        let (w1, o1, _, r1) = try_value(x1, &w)?;
                        let (w2, o2, _, r2) = try_value(x2, &w)?;
                        if o1 < o2 {
                            hi = x2;
                            if o1 < obj {
                                obj = o1;
                                resid = r1;
                                w = w1;
                            }
                        } else {
                            lo = x1;
                            if o2 < obj {
                                obj = o2;
                                resid = r2;
                                w = w2;
                            }
                        }
                    }
                }
            }
            if resid <= tol_score {
                let (cand, dist, _) = evaluate(&w)?;
                feasible.push((cand, dist));
            }
        }
        if !feasible.is_empty() {
            break;
        }
    }

    feasible
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(c, _)| c)
        .ok_or_else(|| Error::NoFeasibleSolution {
            target: target.0.clone(),
            detail: format!(
                "no weighted combination within tol_score {tol_score:.3e} up to delta {:.3e}",
                delta0 * f64::powi(2.0, cfg.max_delta_doublings as i32)
            ),
        })
}

/// Fitted backscorer for a correlation-matrix response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrBackscorer {
    pub matrices: Vec<CorrelationMatrix>,
    pub embedding: MdsEmbedding,
    pub median: CorrelationMatrix,
    pub cfg: CorrBackscoreConfig,
}

impl CorrBackscorer {
    pub fn fit(
        matrices: Vec<CorrelationMatrix>,
        embedding: MdsEmbedding,
        cfg: CorrBackscoreConfig,
    ) -> Result<Self> {
        let median = corr_frechet_median(&matrices)?;
        Ok(Self {
            matrices,
            embedding,
            median,
            cfg,
        })
    }
}

impl Backscorer for CorrBackscorer {
    type Object = CorrelationMatrix;

    fn backscore(&self, target: &Score) -> Result<CorrelationMatrix> {
        corr_backscore(target, &self.embedding, &self.matrices, &self.median, &self.cfg)
    }

    fn centroid(&self) -> &CorrelationMatrix {
        &self.median
    }
}
