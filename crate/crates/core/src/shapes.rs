//! Landmark shape space: full Procrustes alignment and distance, generalized
//! Procrustes analysis, tangent-space coordinates and linear backscoring.

use crate::error::{Error, Result};
use crate::linalg::best_rotation;
use crate::mds::{MdsEmbedding, Score};
use crate::metric::{score_residual, Backscorer, MetricSpace};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// A configuration of k landmarks in m-dimensional space (m = 2 or 3).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ConfigRepr", try_from = "ConfigRepr")]
pub struct LandmarkConfiguration {
    coords: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    coords: Vec<Vec<f64>>,
}

impl From<LandmarkConfiguration> for ConfigRepr {
    fn from(c: LandmarkConfiguration) -> Self {
        ConfigRepr {
            coords: c.coords.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }
}

impl TryFrom<ConfigRepr> for LandmarkConfiguration {
    type Error = Error;
    fn try_from(r: ConfigRepr) -> Result<Self> {
        LandmarkConfiguration::from_rows(&r.coords)
    }
}

impl LandmarkConfiguration {
    pub fn new(coords: Array2<f64>) -> Result<Self> {
        let (k, m) = (coords.nrows(), coords.ncols());
        if !(2..=3).contains(&m) {
            return Err(Error::InvalidInput(format!(
                "landmark dimension must be 2 or 3, got {m}"
            )));
        }
        if k < m + 1 {
            return Err(Error::InvalidInput(format!(
                "need at least {} landmarks in {m}-D, got {k}",
                m + 1
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite landmark coordinate".into()));
        }
        let c = Self { coords };
        if c.raw_centroid_size() == 0.0 {
            return Err(Error::DegenerateShape("all landmarks coincident".into()));
        }
        Ok(c)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::EmptyInput);
        }
        let m = rows[0].len();
        let mut coords = Array2::<f64>::zeros((k, m));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "landmark row",
                    expected: m,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                coords[[i, j]] = v;
            }
        }
        Self::new(coords)
    }

    pub fn landmarks(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &Array2<f64> {
        &self.coords
    }

    fn raw_centroid_size(&self) -> f64 {
        let (k, m) = (self.landmarks(), self.dim());
        let mut centroid = vec![0.0; m];
        for i in 0..k {
            for j in 0..m {
                centroid[j] += self.coords[[i, j]] / k as f64;
            }
        }
        let mut acc = 0.0;
        for i in 0..k {
            for j in 0..m {
                let d = self.coords[[i, j]] - centroid[j];
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    /// Centered, unit-centroid-size copy (the preshape).
    pub fn preshape(&self) -> Result<Array2<f64>> {
        let (k, m) = (self.landmarks(), self.dim());
        let size = self.raw_centroid_size();
        if size == 0.0 {
            return Err(Error::DegenerateShape("zero centroid size".into()));
        }
        let mut centroid = vec![0.0; m];
        for i in 0..k {
            for j in 0..m {
                centroid[j] += self.coords[[i, j]] / k as f64;
            }
        }
        let mut out = Array2::<f64>::zeros((k, m));
        for i in 0..k {
            for j in 0..m {
                out[[i, j]] = (self.coords[[i, j]] - centroid[j]) / size;
            }
        }
        Ok(out)
    }

    /// Row-major vectorization of the coordinates.
    pub fn vectorize(&self) -> Vec<f64> {
        self.coords.iter().copied().collect()
    }
}

/// Square root of the summed squared landmark distances to their centroid.
pub fn centroid_size(c: &LandmarkConfiguration) -> Result<f64> {
    let s = c.raw_centroid_size();
    if s == 0.0 {
        return Err(Error::DegenerateShape("zero centroid size".into()));
    }
    Ok(s)
}

/// Ordinary Procrustes alignment of `a` onto `b`.
///
/// Returns `a` centered, optimally scaled and rotated onto the centered
/// unit-size version of `b`, together with the full Procrustes distance.
/// Reflections are excluded: the rotation stays in SO(m).
pub fn opa_align(
    a: &LandmarkConfiguration,
    b: &LandmarkConfiguration,
) -> Result<(Array2<f64>, f64)> {
    if a.landmarks() != b.landmarks() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            what: "opa_align configurations",
            expected: a.landmarks() * a.dim(),
            found: b.landmarks() * b.dim(),
        });
    }
    let pa = a.preshape()?;
    let pb = b.preshape()?;
    let m = pa.t().dot(&pb);
    let (rot, g) = best_rotation(&m);
    let beta = g.max(0.0);
    let aligned = pa.dot(&rot).mapv(|x| x * beta);
    // the residual norm equals sqrt(1 - g^2) at the optimum but stays
    // accurate near zero, where the closed form loses precision
    let dist = crate::linalg::frobenius(&(&pb - &aligned));
    Ok((aligned, dist))
}

/// Full Procrustes distance between two configurations.
pub fn procrustes_distance(
    a: &LandmarkConfiguration,
    b: &LandmarkConfiguration,
) -> Result<f64> {
    Ok(opa_align(a, b)?.1)
}

/// Generalized Procrustes analysis: aligns all configurations to a common
/// mean, re-estimating the mean until it stabilizes. The mean is rescaled to
/// unit centroid size each iteration to fix the scale gauge.
pub fn gpa(
    configs: &[LandmarkConfiguration],
    tol: f64,
    max_iter: usize,
) -> Result<(LandmarkConfiguration, Vec<Array2<f64>>)> {
    if configs.len() < 2 {
        return Err(Error::InvalidInput("gpa needs at least 2 configurations".into()));
    }
    let (k, m) = (configs[0].landmarks(), configs[0].dim());
    for (i, c) in configs.iter().enumerate() {
        if c.landmarks() != k || c.dim() != m {
            return Err(Error::InvalidInput(format!(
                "configuration {i} has shape {}x{}, expected {k}x{m}",
                c.landmarks(),
                c.dim()
            )));
        }
    }
    let mut mean = LandmarkConfiguration::new(configs[0].preshape()?)?;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let aligned: Vec<Array2<f64>> = configs
            .iter()
            .map(|c| opa_align(c, &mean).map(|(a, _)| a))
            .collect::<Result<_>>()?;
        let mut avg = Array2::<f64>::zeros((k, m));
        for a in &aligned {
            avg += a;
        }
        avg.mapv_inplace(|x| x / configs.len() as f64);
        let new_mean = LandmarkConfiguration::new(avg)?;
        let new_pre = new_mean.preshape()?;
        let old_pre = mean.preshape()?;
        residual = (&new_pre - &old_pre).iter().map(|x| x * x).sum::<f64>().sqrt();
        mean = LandmarkConfiguration::new(new_pre)?;
        if residual < tol {
            // Final pass so the aligned copies match the converged mean.
            let aligned: Vec<Array2<f64>> = configs
                .iter()
                .map(|c| opa_align(c, &mean).map(|(a, _)| a))
                .collect::<Result<_>>()?;
            return Ok((mean, aligned));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

pub const GPA_TOL: f64 = 1e-9;
pub const GPA_MAX_ITER: usize = 100;

/// Pairwise full Procrustes distance matrix of a sample of configurations.
pub fn procrustes_distance_matrix(
    configs: &[LandmarkConfiguration],
) -> Result<crate::distance::DistanceMatrix> {
    crate::distance::DistanceMatrix::from_fn(configs.len(), |i, j| {
        procrustes_distance(&configs[i], &configs[j]).map_err(|e| match e {
            Error::DegenerateShape(msg) => {
                Error::DegenerateShape(format!("at pair ({i},{j}): {msg}"))
            }
            other => other,
        })
    })
}

/// A point in the Procrustes tangent space at `pole`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub pole: LandmarkConfiguration,
    pub values: Vec<f64>,
}

fn project_tangent(flat: &mut [f64], pole_flat: &[f64]) {
    let dot: f64 = flat.iter().zip(pole_flat).map(|(a, b)| a * b).sum();
    for (v, &p) in flat.iter_mut().zip(pole_flat) {
        *v -= dot * p;
    }
}

/// Tangent coordinates of one configuration at the pole.
pub fn to_tangent(
    config: &LandmarkConfiguration,
    pole: &LandmarkConfiguration,
) -> Result<TangentVector> {
    let (aligned, _) = opa_align(config, pole)?;
    let pole_pre = pole.preshape()?;
    let mut flat: Vec<f64> = (&aligned - &pole_pre).iter().copied().collect();
    let pole_flat: Vec<f64> = pole_pre.iter().copied().collect();
    project_tangent(&mut flat, &pole_flat);
    Ok(TangentVector {
        pole: pole.clone(),
        values: flat,
    })
}

/// Reconstructs a configuration from tangent coordinates at the pole.
pub fn from_tangent(pole: &LandmarkConfiguration, values: &[f64]) -> Result<LandmarkConfiguration> {
    let (k, m) = (pole.landmarks(), pole.dim());
    if values.len() != k * m {
        return Err(Error::DimensionMismatch {
            what: "tangent vector",
            expected: k * m,
            found: values.len(),
        });
    }
    let pole_pre = pole.preshape()?;
    let mut coords = Array2::<f64>::zeros((k, m));
    for i in 0..k {
        for j in 0..m {
            coords[[i, j]] = pole_pre[[i, j]] + values[i * m + j];
        }
    }
    LandmarkConfiguration::new(coords)
}

/// Tangent coordinate matrix of a sample: row i holds the vectorized
/// Procrustes tangent coordinates of configuration i at the pole.
pub fn tangent_coords(
    configs: &[LandmarkConfiguration],
    pole: &LandmarkConfiguration,
) -> Result<Array2<f64>> {
    let km = pole.landmarks() * pole.dim();
    let mut t = Array2::<f64>::zeros((configs.len(), km));
    for (i, c) in configs.iter().enumerate() {
        let tv = to_tangent(c, pole)?;
        for (j, &v) in tv.values.iter().enumerate() {
            t[[i, j]] = v;
        }
    }
    Ok(t)
}

/// The response standardization s_std = s_max - s_initial + s_mean,
/// removing the rest-pose variation.
pub fn standardize_response(
    s_max: &TangentVector,
    s_initial: &TangentVector,
    s_mean: &TangentVector,
) -> Result<TangentVector> {
    let same_pole = |a: &LandmarkConfiguration, b: &LandmarkConfiguration| {
        a.landmarks() == b.landmarks()
            && a.dim() == b.dim()
            && a.coords()
                .iter()
                .zip(b.coords().iter())
                .all(|(x, y)| (x - y).abs() <= 1e-12)
    };
    if !same_pole(&s_max.pole, &s_initial.pole) || !same_pole(&s_max.pole, &s_mean.pole) {
        return Err(Error::PoleMismatch);
    }
    let values = s_max
        .values
        .iter()
        .zip(&s_initial.values)
        .zip(&s_mean.values)
        .map(|((a, b), c)| a - b + c)
        .collect();
    Ok(TangentVector {
        pole: s_max.pole.clone(),
        values,
    })
}

/// The shape metric space.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ShapeSpace;

impl MetricSpace for ShapeSpace {
    type Object = LandmarkConfiguration;

    fn distance(&self, a: &LandmarkConfiguration, b: &LandmarkConfiguration) -> Result<f64> {
        procrustes_distance(a, b)
    }
}

/// Reconstructs the tangent vector for a target score through the
/// least-squares linear lift v = Tᵀ S Λ⁻¹ s (discarded components set to 0)
/// and returns pole + v.
pub fn shape_backscore(
    target: &Score,
    e: &MdsEmbedding,
    tangent: &Array2<f64>,
    pole: &LandmarkConfiguration,
    training: &[LandmarkConfiguration],
    tol_score: f64,
) -> Result<LandmarkConfiguration> {
    let km = tangent.ncols();
    let n = tangent.nrows();
    let mut v = vec![0.0; km];
    for j in 0..e.k.min(target.len()) {
        let coeff = target.0[j] / e.eigenvalues[j];
        for c in 0..km {
            let mut acc = 0.0;
            for i in 0..n {
                acc += tangent[[i, c]] * e.scores[[i, j]];
            }
            v[c] += coeff * acc;
        }
    }
    let config = from_tangent(pole, &v)?;
    let resid = score_residual(&ShapeSpace, e, training, &config, target)?;
    if resid > tol_score {
        return Err(Error::NoFeasibleSolution {
            target: target.0.clone(),
            detail: format!("tangent lift residual {resid:.3e} > tol {tol_score:.3e}"),
        });
    }
    Ok(config)
}

/// Fitted backscorer for a shape response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeBackscorer {
    pub pole: LandmarkConfiguration,
    #[serde(with = "crate::serde_array2")]
    pub tangent: Array2<f64>,
    pub embedding: MdsEmbedding,
    pub training: Vec<LandmarkConfiguration>,
    pub tol_score: f64,
}

impl ShapeBackscorer {
    pub fn fit(configs: Vec<LandmarkConfiguration>, embedding: MdsEmbedding) -> Result<Self> {
        let (pole, _) = gpa(&configs, GPA_TOL, GPA_MAX_ITER)?;
        let tangent = tangent_coords(&configs, &pole)?;
        let tol_score = crate::metric::default_tol_score(&embedding);
        Ok(Self {
            pole,
            tangent,
            embedding,
            training: configs,
            tol_score,
        })
    }
}

impl Backscorer for ShapeBackscorer {
    type Object = LandmarkConfiguration;

    fn backscore(&self, target: &Score) -> Result<LandmarkConfiguration> {
        shape_backscore(
            target,
            &self.embedding,
            &self.tangent,
            &self.pole,
            &self.training,
            self.tol_score,
        )
    }

    fn centroid(&self) -> &LandmarkConfiguration {
        &self.pole
    }
}

/// Landmark dataset JSON schema:
/// {"k":int,"m":int,"subjects":[{"id":str,"coords":[[...]...]}]}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandmarkDataset {
    pub k: usize,
    pub m: usize,
    pub subjects: Vec<LandmarkSubject>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandmarkSubject {
    pub id: String,
    pub coords: Vec<Vec<f64>>,
}

impl LandmarkDataset {
    pub fn from_configs(ids: &[String], configs: &[LandmarkConfiguration]) -> Self {
        let (k, m) = (configs[0].landmarks(), configs[0].dim());
        LandmarkDataset {
            k,
            m,
            subjects: ids
                .iter()
                .zip(configs)
                .map(|(id, c)| LandmarkSubject {
                    id: id.clone(),
                    coords: c.coords().rows().into_iter().map(|r| r.to_vec()).collect(),
                })
                .collect(),
        }
    }

    pub fn configurations(&self) -> Result<Vec<LandmarkConfiguration>> {
        self.subjects
            .iter()
            .map(|s| {
                let c = LandmarkConfiguration::from_rows(&s.coords)?;
                if c.landmarks() != self.k || c.dim() != self.m {
                    return Err(Error::InvalidInput(format!(
                        "subject {} has {}x{} coords, dataset declares {}x{}",
                        s.id,
                        c.landmarks(),
                        c.dim(),
                        self.k,
                        self.m
                    )));
                }
                Ok(c)
            })
            .collect()
    }
}

/// Base shape plus a small random tangent perturbation.
#[cfg(test)]
pub(crate) fn concentrated_configs(
    base: &LandmarkConfiguration,
    n: usize,
    scale: f64,
    seed: u64,
) -> Vec<LandmarkConfiguration> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let km = base.landmarks() * base.dim();
    (0..n)
        .map(|_| {
            let values: Vec<f64> = (0..km).map(|_| rng.gen_range(-scale..scale)).collect();
            from_tangent(base, &values).unwrap()
        })
        .collect()
}
