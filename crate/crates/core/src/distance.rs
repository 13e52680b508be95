//! Symmetric distance matrices: the interchange format between metric
//! spaces and the embedding.

use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// An n x n matrix of pairwise distances: symmetric, nonnegative, zero
/// diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    #[serde(with = "crate::serde_array2")]
    d: Array2<f64>,
}

impl DistanceMatrix {
    /// Validates the metric-matrix invariants and wraps the matrix.
    pub fn new(d: Array2<f64>) -> Result<Self> {
        let n = d.nrows();
        if d.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "distance matrix",
                expected: n,
                found: d.ncols(),
            });
        }
        for i in 0..n {
            if d[[i, i]] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "distance matrix diagonal entry ({i},{i}) is {}, expected 0",
                    d[[i, i]]
                )));
            }
            for j in 0..n {
                let v = d[[i, j]];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "distance matrix entry ({i},{j}) = {v} is negative or non-finite"
                    )));
                }
                if d[[i, j]] != d[[j, i]] {
                    return Err(Error::InvalidInput(format!(
                        "distance matrix is asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { d })
    }

    /// Builds the matrix from a pairwise distance function, forcing exact
    /// symmetry by computing each pair once.
    pub fn from_fn<F>(n: usize, mut dist: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<f64>,
    {
        let mut d = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let v = dist(i, j)?;
                d[[i, j]] = v;
                d[[j, i]] = v;
            }
        }
        Self::new(d)
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[[i, j]]
    }

    /// Column i as an owned vector of distances to object i.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.d.column(i).to_vec()
    }

    /// Serializes as CSV: n rows of n comma-separated reals.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.n()).map(|j| format!("{:?}", self.d[[i, j]])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidInput(format!("bad number {tok:?} on line {}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut d = Array2::<f64>::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "distance matrix CSV row",
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                d[[i, j]] = v;
            }
        }
        Self::new(d)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Combines two distance matrices on the same objects as the entrywise
/// sqrt(Dx^2 + Dz^2).
pub fn combine_distances(dx: &DistanceMatrix, dz: &DistanceMatrix) -> Result<DistanceMatrix> {
    if dx.n() != dz.n() {
        return Err(Error::DimensionMismatch {
            what: "combine_distances",
            expected: dx.n(),
            found: dz.n(),
        });
    }
    let mut d = dx.matrix().clone();
    d.zip_mut_with(dz.matrix(), |a, &b| *a = (*a * *a + b * b).sqrt());
    DistanceMatrix::new(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    pub(crate) fn euclid_matrix(points: &[Vec<f64>]) -> DistanceMatrix {
        DistanceMatrix::from_fn(points.len(), |i, j| {
            Ok(points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt())
        })
        .unwrap()
    }

    #[test]
    fn rejects_asymmetry_and_negative() {
        assert!(DistanceMatrix::new(array![[0.0, 1.0], [2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::new(array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::new(array![[1.0, 0.0], [0.0, 0.0]]).is_err());
    }

    #[test]
    fn combine_zero_is_identity() {
        let dx = DistanceMatrix::new(array![[0.0, 2.0], [2.0, 0.0]]).unwrap();
        let dz = DistanceMatrix::new(array![[0.0, 0.0], [0.0, 0.0]]).unwrap();
        let c = combine_distances(&dx, &dz).unwrap();
        assert_eq!(c, dx);
    }

    #[test]
    fn combine_is_pythagorean() {
        let dx = DistanceMatrix::new(array![[0.0, 3.0], [3.0, 0.0]]).unwrap();
        let dz = DistanceMatrix::new(array![[0.0, 4.0], [4.0, 0.0]]).unwrap();
        let c = combine_distances(&dx, &dz).unwrap();
        assert!((c.get(0, 1) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn combine_matches_concatenated_coordinates() {
        let a: Vec<Vec<f64>> = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]];
        let b: Vec<Vec<f64>> = vec![vec![3.0], vec![-1.0], vec![0.0]];
        let cat: Vec<Vec<f64>> = a
            .iter()
            .zip(&b)
            .map(|(x, z)| x.iter().chain(z.iter()).copied().collect())
            .collect();
        let combined = combine_distances(&euclid_matrix(&a), &euclid_matrix(&b)).unwrap();
        let direct = euclid_matrix(&cat);
        for i in 0..3 {
            for j in 0..3 {
                assert!((combined.get(i, j) - direct.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_roundtrip() {
        let d = DistanceMatrix::new(array![[0.0, 1.5, 0.25], [1.5, 0.0, 2.0], [0.25, 2.0, 0.0]])
            .unwrap();
        let back = DistanceMatrix::from_csv(&d.to_csv()).unwrap();
        assert_eq!(d, back);
    }
}
