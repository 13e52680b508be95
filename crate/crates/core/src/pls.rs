//! The internal regression between predictor and response scores: SIMPLS
//! partial least squares with leave-one-out component selection, plus design
//! assembly for added covariate blocks.

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

/// A fitted SIMPLS model. Predictions are affine:
/// predict(x) = y_mean + (x - x_mean) · coef.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlsModel {
    pub a: usize,
    pub x_mean: Vec<f64>,
    pub y_mean: Vec<f64>,
    /// weight matrix R, p×a: scores are (X - x_mean) · R
    #[serde(with = "crate::serde_array2")]
    pub weights: Array2<f64>,
    #[serde(with = "crate::serde_array2")]
    pub x_loadings: Array2<f64>,
    #[serde(with = "crate::serde_array2")]
    pub y_loadings: Array2<f64>,
    #[serde(with = "crate::serde_array2")]
    pub coef: Array2<f64>,
}

fn column_means(x: &Array2<f64>) -> Vec<f64> {
    x.mean_axis(Axis(0)).map(|m| m.to_vec()).unwrap_or_default()
}

fn center(x: &Array2<f64>, mean: &[f64]) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        for (v, &m) in row.iter_mut().zip(mean) {
            *v -= m;
        }
    }
    out
}

/// Dominant left singular vector of S (p×q), via the smaller of S Sᵀ or Sᵀ S.
fn dominant_left_singular(s: &Array2<f64>) -> (Array1<f64>, f64) {
    let (p, q) = s.dim();
    if p <= q {
        let m = s.dot(&s.t());
        let (lam, v) = jacobi_eigen(&m);
        (v.column(0).to_owned(), lam[0].max(0.0).sqrt())
    } else {
        let m = s.t().dot(s);
        let (lam, v) = jacobi_eigen(&m);
        let sigma = lam[0].max(0.0).sqrt();
        let right = v.column(0).to_owned();
        if sigma == 0.0 {
            return (Array1::zeros(p), 0.0);
        }
        let mut left = s.dot(&right);
        left.mapv_inplace(|x| x / sigma);
        (left, sigma)
    }
}

/// SIMPLS fit with `a` components. If the cross-covariance runs out of rank
/// before `a` components, the fit is truncated with a warning.
pub fn simpls_fit(x: &Array2<f64>, y: &Array2<f64>, a: usize) -> Result<PlsModel> {
    let (n, p) = x.dim();
    let q = y.ncols();
    if y.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "response rows",
            expected: n,
            found: y.nrows(),
        });
    }
    if n < 2 || p == 0 || q == 0 {
        return Err(Error::EmptyInput);
    }
    if a == 0 || a > p.min(n - 1) {
        return Err(Error::InvalidParams(format!(
            "component count {a} outside 1..={}",
            p.min(n - 1)
        )));
    }
    let x_mean = column_means(x);
    let y_mean = column_means(y);
    let xc = center(x, &x_mean);
    let yc = center(y, &y_mean);

    let mut s = xc.t().dot(&yc);
    let s0_norm = crate::linalg::frobenius(&s);
    let mut weights = Array2::<f64>::zeros((p, a));
    let mut x_loadings = Array2::<f64>::zeros((p, a));
    let mut y_loadings = Array2::<f64>::zeros((q, a));
    let mut basis: Vec<Array1<f64>> = Vec::new(); // orthonormal v's for deflation
    let mut used = 0;

    for comp in 0..a {
        let (mut r, sigma) = dominant_left_singular(&s);
        if sigma <= 1e-12 * (1.0 + s0_norm) {
            log::warn!(
                "cross-covariance rank exhausted after {comp} components (requested {a})"
            );
            break;
        }
        let t = xc.dot(&r);
        let t_norm = t.dot(&t).sqrt();
        if t_norm <= 1e-12 {
            log::warn!("degenerate score vector at component {comp}; truncating");
            break;
        }
        let t = t.mapv(|v| v / t_norm);
        r.mapv_inplace(|v| v / t_norm);
        let p_load = xc.t().dot(&t);
        let q_load = yc.t().dot(&t);

        let mut v = p_load.clone();
        for prev in &basis {
            let proj = prev.dot(&v);
            v.scaled_add(-proj, prev);
        }
        let v_norm = v.dot(&v).sqrt();
        if v_norm > 1e-12 {
            let v = v.mapv(|x| x / v_norm);
            // deflate: S <- S - v (vᵀ S)
            let vts = v.dot(&s);
            for i in 0..p {
                for j in 0..q {
                    s[[i, j]] -= v[i] * vts[j];
                }
            }
            basis.push(v);
        } else {
            log::warn!("deflation basis degenerate at component {comp}; truncating");
            weights.column_mut(comp).assign(&r);
            x_loadings.column_mut(comp).assign(&p_load);
            y_loadings.column_mut(comp).assign(&q_load);
            used = comp + 1;
            break;
        }

        weights.column_mut(comp).assign(&r);
        x_loadings.column_mut(comp).assign(&p_load);
        y_loadings.column_mut(comp).assign(&q_load);
        used = comp + 1;
    }

    if used == 0 {
        // no extractable direction: a constant model
        return Ok(PlsModel {
            a: 0,
            x_mean,
            y_mean,
            weights: Array2::zeros((p, 0)),
            x_loadings: Array2::zeros((p, 0)),
            y_loadings: Array2::zeros((q, 0)),
            coef: Array2::zeros((p, q)),
        });
    }

    let weights = weights.slice(ndarray::s![.., ..used]).to_owned();
    let x_loadings = x_loadings.slice(ndarray::s![.., ..used]).to_owned();
    let y_loadings = y_loadings.slice(ndarray::s![.., ..used]).to_owned();
    let coef = weights.dot(&y_loadings.t());

    Ok(PlsModel {
        a: used,
        x_mean,
        y_mean,
        weights,
        x_loadings,
        y_loadings,
        coef,
    })
}

impl PlsModel {
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.x_mean.len() {
            return Err(Error::DimensionMismatch {
                what: "predictor length",
                expected: self.x_mean.len(),
                found: x.len(),
            });
        }
        let q = self.y_mean.len();
        let mut out = self.y_mean.clone();
        for j in 0..q {
            for (i, (&xi, &mi)) in x.iter().zip(&self.x_mean).enumerate() {
                out[j] += (xi - mi) * self.coef[[i, j]];
            }
        }
        Ok(out)
    }

    pub fn predict_rows(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let n = x.nrows();
        let q = self.y_mean.len();
        let mut out = Array2::<f64>::zeros((n, q));
        for i in 0..n {
            let row = self.predict(&x.row(i).to_vec())?;
            for j in 0..q {
                out[[i, j]] = row[j];
            }
        }
        Ok(out)
    }

    /// The same fit truncated to its first `a` components.
    fn truncate(&self, a: usize) -> PlsModel {
        let a = a.min(self.a);
        let weights = self.weights.slice(ndarray::s![.., ..a]).to_owned();
        let x_loadings = self.x_loadings.slice(ndarray::s![.., ..a]).to_owned();
        let y_loadings = self.y_loadings.slice(ndarray::s![.., ..a]).to_owned();
        let coef = weights.dot(&y_loadings.t());
        PlsModel {
            a,
            x_mean: self.x_mean.clone(),
            y_mean: self.y_mean.clone(),
            weights,
            x_loadings,
            y_loadings,
            coef,
        }
    }
}

/// Leave-one-out PRESS for component counts 1..=a_max.
pub fn loo_press(x: &Array2<f64>, y: &Array2<f64>, a_max: usize) -> Result<Vec<f64>> {
    let n = x.nrows();
    if a_max == 0 || a_max > x.ncols().min(n.saturating_sub(2)) {
        return Err(Error::InvalidParams(format!(
            "a_max {a_max} outside 1..={}",
            x.ncols().min(n.saturating_sub(2))
        )));
    }
    let mut press = vec![0.0; a_max];
    for hold in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&i| i != hold).collect();
        let x_tr = x.select(Axis(0), &keep);
        let y_tr = y.select(Axis(0), &keep);
        let model = simpls_fit(&x_tr, &y_tr, a_max)?;
        let x_row = x.row(hold).to_vec();
        for a in 1..=a_max {
            let sub = model.truncate(a);
            let pred = sub.predict(&x_row)?;
            let err: f64 = pred
                .iter()
                .zip(y.row(hold).iter())
                .map(|(p, o)| (p - o) * (p - o))
                .sum();
            press[a - 1] += err;
        }
    }
    Ok(press)
}

/// Smallest component count whose leave-one-out PRESS is within 2% of the
/// minimum PRESS.
pub fn loo_select(x: &Array2<f64>, y: &Array2<f64>, a_max: usize) -> Result<usize> {
    let press = loo_press(x, y, a_max)?;
    let min = press.iter().cloned().fold(f64::INFINITY, f64::min);
    for (idx, &p) in press.iter().enumerate() {
        if p <= 1.02 * min {
            return Ok(idx + 1);
        }
    }
    Ok(a_max)
}

/// Provenance of a design block, governing its standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Metric-space embedding scores; passed through unscaled.
    Scores,
    /// Quantitative covariates; standardized to zero mean, unit variance.
    Covariate,
    /// 0/1 dummy columns (reference level dropped); passed through as-is.
    Categorical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignBlock {
    pub kind: BlockKind,
    pub name: String,
    #[serde(with = "crate::serde_array2")]
    pub columns: Array2<f64>,
}

impl DesignBlock {
    pub fn scores(name: &str, columns: Array2<f64>) -> Self {
        DesignBlock {
            kind: BlockKind::Scores,
            name: name.into(),
            columns,
        }
    }

    pub fn covariate(name: &str, values: &[f64]) -> Self {
        let mut columns = Array2::<f64>::zeros((values.len(), 1));
        for (i, &v) in values.iter().enumerate() {
            columns[[i, 0]] = v;
        }
        DesignBlock {
            kind: BlockKind::Covariate,
            name: name.into(),
            columns,
        }
    }
}

/// Horizontal concatenation of design blocks; covariate columns are
/// standardized (sample variance), other blocks pass through.
pub fn assemble_design(blocks: &[DesignBlock]) -> Result<Array2<f64>> {
    if blocks.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = blocks[0].columns.nrows();
    let p: usize = blocks.iter().map(|b| b.columns.ncols()).sum();
    let mut out = Array2::<f64>::zeros((n, p));
    let mut col = 0;
    for block in blocks {
        if block.columns.nrows() != n {
            return Err(Error::DimensionMismatch {
                what: "design block rows",
                expected: n,
                found: block.columns.nrows(),
            });
        }
        if block.kind == BlockKind::Categorical {
            for &v in block.columns.iter() {
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "categorical block {:?} has non-0/1 entry {v}",
                        block.name
                    )));
                }
            }
        }
        for j in 0..block.columns.ncols() {
            let mut values: Vec<f64> = block.columns.column(j).to_vec();
            if block.kind == BlockKind::Covariate {
                let mean = values.iter().sum::<f64>() / n as f64;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (n as f64 - 1.0);
                if var <= 0.0 {
                    log::warn!("constant covariate column in block {:?}; zeroed", block.name);
                    values.iter_mut().for_each(|v| *v = 0.0);
                } else {
                    let sd = var.sqrt();
                    values.iter_mut().for_each(|v| *v = (*v - mean) / sd);
                }
            }
            for i in 0..n {
                out[[i, col]] = values[i];
            }
            col += 1;
        }
    }
    Ok(out)
}
