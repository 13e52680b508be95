//! Dense symmetric eigendecomposition (cyclic Jacobi) and the small SVD /
//! rotation solves used by the shape module.

use ndarray::{Array1, Array2};

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns eigenvalues in nonincreasing order and the matching eigenvectors
/// as columns. Iterates until the off-diagonal Frobenius norm falls below
/// `1e-12 * ||A||` or 100 sweeps, whichever comes first.
pub fn jacobi_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let norm = frobenius(a).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * norm;

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if (2.0 * off).sqrt() < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() < tol / (n as f64) {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].partial_cmp(&m[[i, i]]).unwrap());
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, col]] = v[[row, i]];
        }
    }
    (eigenvalues, vectors)
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// SVD of a small (m <= 3 in practice) square matrix via the Jacobi
/// eigendecomposition of MᵀM. Returns (U, sigma, V) with M = U diag(sigma) Vᵀ
/// and sigma nonincreasing.
pub fn svd_small(m: &Array2<f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let dim = m.nrows();
    assert_eq!(dim, m.ncols());
    let mtm = m.t().dot(m);
    let (lam, v) = jacobi_eigen(&mtm);
    let sigma = lam.mapv(|x| x.max(0.0).sqrt());
    let mut u = Array2::<f64>::zeros((dim, dim));
    let scale = sigma[0].max(f64::MIN_POSITIVE);
    for j in 0..dim {
        if sigma[j] > 1e-13 * scale {
            let col = m.dot(&v.column(j).to_owned());
            for i in 0..dim {
                u[[i, j]] = col[i] / sigma[j];
            }
        } else {
            // Rank deficient: complete U to an orthonormal basis.
            let mut cand = Array1::<f64>::zeros(dim);
            for trial in 0..dim {
                cand.fill(0.0);
                cand[trial] = 1.0;
                for k in 0..j {
                    let proj: f64 = (0..dim).map(|i| u[[i, k]] * cand[i]).sum();
                    for i in 0..dim {
                        cand[i] -= proj * u[[i, k]];
                    }
                }
                let nrm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm > 1e-8 {
                    for i in 0..dim {
                        u[[i, j]] = cand[i] / nrm;
                    }
                    break;
                }
            }
        }
    }
    (u, sigma, v)
}

fn det_small(m: &Array2<f64>) -> f64 {
    match m.nrows() {
        1 => m[[0, 0]],
        2 => m[[0, 0]] * m[[1, 1]] - m[[0, 1]] * m[[1, 0]],
        3 => {
            m[[0, 0]] * (m[[1, 1]] * m[[2, 2]] - m[[1, 2]] * m[[2, 1]])
                - m[[0, 1]] * (m[[1, 0]] * m[[2, 2]] - m[[1, 2]] * m[[2, 0]])
                + m[[0, 2]] * (m[[1, 0]] * m[[2, 1]] - m[[1, 1]] * m[[2, 0]])
        }
        _ => panic!("det_small supports up to 3x3"),
    }
}

/// Optimal rotation for the orthogonal Procrustes problem restricted to the
/// rotation group (no reflections).
///
/// Given the cross-covariance M, returns (R, g) where R in SO(m) maximizes
/// tr(Rᵀ M) and g is the attained maximum.
pub fn best_rotation(m: &Array2<f64>) -> (Array2<f64>, f64) {
    let dim = m.nrows();
    let (u, sigma, v) = svd_small(m);
    let s = det_small(&u).signum() * det_small(&v).signum();
    let mut d = Array1::<f64>::ones(dim);
    d[dim - 1] = s;
    // R = U D Vᵀ
    let mut ud = u.clone();
    for j in 0..dim {
        for i in 0..dim {
            ud[[i, j]] *= d[j];
        }
    }
    let r = ud.dot(&v.t());
    let g: f64 = (0..dim).map(|j| d[j] * sigma[j]).sum();
    (r, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn jacobi_diagonalizes_known_matrix() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (lam, v) = jacobi_eigen(&a);
        assert!((lam[0] - 3.0).abs() < 1e-12);
        assert!((lam[1] - 1.0).abs() < 1e-12);
        // A v = lambda v
        for j in 0..2 {
            let av = a.dot(&v.column(j).to_owned());
            for i in 0..2 {
                assert!((av[i] - lam[j] * v[[i, j]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric() {
        let mut a = Array2::<f64>::zeros((6, 6));
        let mut state = 42u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..6 {
            for j in i..6 {
                let x = next();
                a[[i, j]] = x;
                a[[j, i]] = x;
            }
        }
        let (lam, v) = jacobi_eigen(&a);
        let mut recon = Array2::<f64>::zeros((6, 6));
        for k in 0..6 {
            for i in 0..6 {
                for j in 0..6 {
                    recon[[i, j]] += lam[k] * v[[i, k]] * v[[j, k]];
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                assert!((recon[[i, j]] - a[[i, j]]).abs() < 1e-9);
            }
        }
        // nonincreasing
        for k in 1..6 {
            assert!(lam[k] <= lam[k - 1] + 1e-12);
        }
    }

    #[test]
    fn best_rotation_recovers_planted_rotation() {
        let theta = 0.7f64;
        let r_true = array![
            [theta.cos(), -theta.sin()],
            [theta.sin(), theta.cos()]
        ];
        // M = c * R_true has optimum R = R_true
        let m = r_true.mapv(|x| 2.5 * x);
        let (r, g) = best_rotation(&m);
        for i in 0..2 {
            for j in 0..2 {
                assert!((r[[i, j]] - r_true[[i, j]]).abs() < 1e-10);
            }
        }
        assert!((g - 5.0).abs() < 1e-10);
        assert!((det_small(&r) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn best_rotation_never_reflects() {
        // A reflection-dominant cross covariance must still yield det +1.
        let m = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        let (r, _) = best_rotation(&m);
        assert!((det_small(&r) - 1.0).abs() < 1e-10);
    }
}
