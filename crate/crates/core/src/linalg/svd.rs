//! One-sided Jacobi SVD and cyclic Jacobi symmetric eigensolver.
//!
//! Both routines work directly on small dense matrices and deliver
//! singular values (eigenvalues) to high relative accuracy, which the
//! proximal threshold tests in the solver depend on.

use super::matrix::Matrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
const ORTHO_TOL: f64 = 1e-15;

/// Singular values below `RANK_TOL * sigma_1` count as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Thin SVD `M = G · diag(sigma) · Hᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `n x p` left singular vectors, `p = min(n, m)`.
    pub g: Matrix,
    /// Nonincreasing singular values.
    pub sigma: Vec<f64>,
    /// `m x p` right singular vectors.
    pub h: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        self.g.scale_columns(&self.sigma).matmul(&self.h.transpose()).expect("svd shapes")
    }

    /// Smallest singular value (0 for an empty factorization).
    pub fn sigma_min(&self) -> f64 {
        self.sigma.last().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `RANK_TOL * sigma_1`.
    pub fn numerical_rank(&self) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|s| **s > RANK_TOL * top && **s > 0.0).count()
    }
}

/// Thin singular value decomposition by one-sided (Hestenes) Jacobi.
pub fn svd(m: &Matrix) -> Result<Svd> {
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose())?;
        return Ok(Svd {
            g: t.h,
            sigma: t.sigma,
            h: t.g,
        });
    }
    svd_tall(m)
}

fn svd_tall(m: &Matrix) -> Result<Svd> {
    let (n, p) = m.shape();
    // Work on columns: a[j] is column j of the evolving matrix M·V.
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = p < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..p - 1 {
            for j in i + 1..p {
                let (alpha, beta, gamma) = column_moments(&a[i], &a[j]);
                if gamma == 0.0 || gamma.abs() <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "one-sided Jacobi SVD",
            iterations: MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = a.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    // Stable: equal singular values keep their Jacobi order.
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).expect("finite singular values"));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let top = sigma.first().copied().unwrap_or(0.0);
    let mut g = Matrix::zeros(n, p);
    let mut h = Matrix::zeros(p, p);
    let mut valid = vec![false; p];
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        if s > 0.0 && s > RANK_TOL * top {
            let col: Vec<f64> = a[src].iter().map(|x| x / s).collect();
            g.set_column(dst, &col);
            valid[dst] = true;
        }
        h.set_column(dst, &v[src]);
    }
    fill_orthonormal_columns(&mut g, &valid);
    Ok(Svd { g, sigma, h })
}

fn column_moments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mut alpha = 0.0;
    let mut beta = 0.0;
    let mut gamma = 0.0;
    for (a, b) in x.iter().zip(y) {
        alpha += a * a;
        beta += b * b;
        gamma += a * b;
    }
    (alpha, beta, gamma)
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(j);
    let (ci, cj) = (&mut left[i], &mut right[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Replace every column `j` with `!valid[j]` by a unit vector orthogonal to
/// all other (valid or already filled) columns.
pub(crate) fn fill_orthonormal_columns(m: &mut Matrix, valid: &[bool]) {
    let n = m.rows();
    let mut basis: Vec<Vec<f64>> = (0..m.cols()).filter(|&j| valid[j]).map(|j| m.column(j)).collect();
    for j in 0..m.cols() {
        if valid[j] {
            continue;
        }
        let col = next_orthogonal_vector(n, &basis);
        m.set_column(j, &col);
        basis.push(col);
    }
}

/// Unit vector orthogonal to the orthonormal `basis`, built from the standard
/// basis vector with the largest residual after two rounds of Gram-Schmidt.
pub(crate) fn next_orthogonal_vector(n: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..n {
        let mut x = vec![0.0; n];
        x[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let d: f64 = b.iter().zip(&x).map(|(p, q)| p * q).sum();
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= d * bi;
                }
            }
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
            best = Some((norm, x));
        }
    }
    let (norm, mut x) = best.expect("n >= 1");
    for v in &mut x {
        *v /= norm;
    }
    x
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues nonincreasing.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigensolver. Only the symmetric part of `a` is used.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::Dimension(format!("eigen of {}x{} matrix", n, a.cols())));
    }
    let mut s = a.sym();
    let mut q = Matrix::identity(n);
    let scale = s.frobenius_norm();
    let mut converged = n < 2 || scale == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[(i, j)] * s[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for r in p + 1..n {
                let apr = s[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (s[(r, r)] - s[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skr = s[(k, r)];
                    s[(k, p)] = c * skp - sn * skr;
                    s[(k, r)] = sn * skp + c * skr;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let srk = s[(r, k)];
                    s[(p, k)] = c * spk - sn * srk;
                    s[(r, k)] = sn * spk + c * srk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - sn * qkr;
                    q[(k, r)] = sn * qkp + c * qkr;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "Jacobi eigensolver",
            iterations: MAX_SWEEPS,
        });
    }
    let diag = s.diagonal();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[y].partial_cmp(&diag[x]).expect("finite eigenvalues"));
    Ok(SymmetricEigen {
        values: order.iter().map(|&j| diag[j]).collect(),
        vectors: q.select_columns(&order),
    })
}
