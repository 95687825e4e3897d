//! Polar decomposition and the error identities of the orthogonal
//! Procrustes problem `min_Q ‖B − QC‖_F`.

use super::matrix::Matrix;
use super::stiefel::OrthonormalMatrix;
use super::svd::{svd, symmetric_eigen, Svd};
use crate::error::{Error, Result};

/// `M = U·H` with `U` orthonormal and `H` symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct PolarFactors {
    pub u: OrthonormalMatrix,
    pub h: Matrix,
}

/// Polar decomposition of an `n x m` matrix, `m <= n`.
///
/// `U = G·Hᵀ` and `H = H_svd·Σ·H_svdᵀ` from the thin SVD. For rank-deficient
/// input the null directions of `U` come from the SVD's completion and are
/// not unique; `U` is still a maximizer of `<Q, M>` over the Stiefel manifold.
pub fn polar(m: &Matrix) -> Result<PolarFactors> {
    let d = svd(m)?;
    polar_from_svd(m, &d)
}

pub(crate) fn polar_from_svd(m: &Matrix, d: &Svd) -> Result<PolarFactors> {
    if m.cols() > m.rows() {
        return Err(Error::Dimension(format!(
            "polar decomposition needs cols <= rows, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let u = d.g.matmul(&d.h.transpose())?;
    let h = d.h.scale_columns(&d.sigma).matmul(&d.h.transpose())?.sym();
    Ok(PolarFactors {
        u: OrthonormalMatrix::new_unchecked(u),
        h,
    })
}

/// Principal square root of a symmetric positive semidefinite matrix.
///
/// Eigenvalues in `[-1e-10·(1 + ‖H‖_F), 0)` are clamped to zero.
pub fn psd_sqrt(h: &Matrix) -> Result<Matrix> {
    if h.rows() != h.cols() {
        return Err(Error::Dimension(format!("square root of {}x{} matrix", h.rows(), h.cols())));
    }
    let scale = 1.0 + h.frobenius_norm();
    let defect = h.asymmetry();
    if defect > 1e-10 * scale {
        return Err(Error::NotSymmetric { defect });
    }
    let e = symmetric_eigen(h)?;
    if let Some(&low) = e.values.last() {
        if low < -1e-10 * scale {
            return Err(Error::Indefinite { eigenvalue: low });
        }
    }
    let roots: Vec<f64> = e.values.iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok(e.vectors.scale_columns(&roots).matmul(&e.vectors.transpose())?.sym())
}

/// Both sides of the Procrustes error identity for `A = B·Cᵀ = W·H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarErrorGap {
    /// `‖B − QC‖²_F − ‖B − WC‖²_F`
    pub lhs: f64,
    /// `‖(W − Q)·√H‖²_F`, equal to `lhs`.
    pub rhs_eq: f64,
    /// `σ_min(A)·‖W − Q‖²_F`, a lower bound of `lhs` when `A` has full rank.
    pub rhs_bound: f64,
    pub sigma_min: f64,
}

/// Evaluate the error identity and the Frobenius lower bound for
/// `B ∈ R^{m×p}`, `C ∈ R^{n×p}`, `Q ∈ V(n, m)`.
pub fn polar_error_gap(b: &Matrix, c: &Matrix, q: &OrthonormalMatrix) -> Result<PolarErrorGap> {
    if b.cols() != c.cols() || q.shape() != (b.rows(), c.rows()) {
        return Err(Error::Dimension(format!(
            "polar error gap with B {}x{}, C {}x{}, Q {}x{}",
            b.rows(),
            b.cols(),
            c.rows(),
            c.cols(),
            q.rows(),
            q.cols()
        )));
    }
    let a = b.matmul(&c.transpose())?;
    let d = svd(&a)?;
    let PolarFactors { u: w, h } = polar_from_svd(&a, &d)?;
    let residual = |x: &Matrix| -> Result<f64> {
        let diff = b - &x.matmul(c)?;
        Ok(diff.dot(&diff))
    };
    let lhs = residual(q)? - residual(&w)?;
    let diff = w.matrix() - q.matrix();
    let weighted = diff.matmul(&psd_sqrt(&h)?)?;
    let sigma_min = d.sigma_min();
    Ok(PolarErrorGap {
        lhs,
        rhs_eq: weighted.dot(&weighted),
        rhs_bound: sigma_min * diff.dot(&diff),
        sigma_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::stiefel::random_orthonormal;
    use crate::rng::gaussian_matrix;

    #[test]
    fn diagonal_and_rotation() {
        let m = Matrix::diag(&[3.0, 2.0]);
        let p = polar(&m).unwrap();
        assert!((p.u.matrix() - &Matrix::identity(2)).frobenius_norm() < 1e-15);
        assert!((&p.h - &m).frobenius_norm() < 1e-15);

        let rot = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let p = polar(&rot).unwrap();
        assert!((p.u.matrix() - &rot).frobenius_norm() < 1e-15);
        assert!((&p.h - &Matrix::identity(2)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn factors_reconstruct() {
        for seed in 0..10 {
            let m = gaussian_matrix(5, 3, seed);
            let p = polar(&m).unwrap();
            let back = p.u.matmul(&p.h).unwrap();
            assert!((&back - &m).frobenius_norm() < 1e-10 * (1.0 + m.frobenius_norm()));
            assert!(p.u.gram_defect() < 1e-10);
            assert!(p.h.asymmetry() < 1e-12);
            let e = symmetric_eigen(&p.h).unwrap();
            assert!(e.values.iter().all(|v| *v >= -1e-10));
        }
    }

    #[test]
    fn rank_deficient_polar_is_valid() {
        let col = [1.0, -2.0, 0.5, 1.0];
        let m = Matrix::from_fn(4, 2, |i, j| col[i] * (j as f64 + 1.0));
        let p = polar(&m).unwrap();
        assert!(p.u.gram_defect() < 1e-10);
        assert!((&p.u.matmul(&p.h).unwrap() - &m).frobenius_norm() < 1e-10);
    }

    #[test]
    fn square_roots() {
        assert!((&psd_sqrt(&Matrix::identity(3)).unwrap() - &Matrix::identity(3)).frobenius_norm() < 1e-15);
        let r = psd_sqrt(&Matrix::diag(&[4.0, 9.0])).unwrap();
        assert!((&r - &Matrix::diag(&[2.0, 3.0])).frobenius_norm() < 1e-14);
        let a = gaussian_matrix(6, 4, 3);
        let h = a.tr_matmul(&a).unwrap();
        let s = psd_sqrt(&h).unwrap();
        assert!((&s.matmul(&s).unwrap() - &h).frobenius_norm() < 1e-9 * (1.0 + h.frobenius_norm()));
    }

    #[test]
    fn square_root_rejects_bad_input() {
        let asym = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(psd_sqrt(&asym), Err(Error::NotSymmetric { .. })));
        assert!(matches!(psd_sqrt(&Matrix::diag(&[1.0, -1.0])), Err(Error::Indefinite { .. })));
        assert!(psd_sqrt(&Matrix::diag(&[1.0, -1e-14])).is_ok());
    }

    #[test]
    fn error_gap_trivial_cases() {
        let b = gaussian_matrix(4, 5, 1);
        let c = gaussian_matrix(3, 5, 2);
        let w = polar(&b.matmul(&c.transpose()).unwrap()).unwrap().u;
        let gap = polar_error_gap(&b, &c, &w).unwrap();
        assert!(gap.lhs.abs() < 1e-10 && gap.rhs_eq.abs() < 1e-20 && gap.rhs_bound.abs() < 1e-20);

        let i = Matrix::identity(3);
        let q = random_orthonormal(3, 3, 4).unwrap();
        let gap = polar_error_gap(&i, &i, &q).unwrap();
        let d = &i - q.matrix();
        let expect = d.dot(&d);
        assert!((gap.lhs - expect).abs() < 1e-12);
        assert!((gap.rhs_eq - expect).abs() < 1e-12);
    }

    #[test]
    fn error_gap_shape_errors() {
        let q = random_orthonormal(4, 3, 0).unwrap();
        assert!(polar_error_gap(&Matrix::zeros(4, 5), &Matrix::zeros(3, 4), &q).is_err());
        assert!(polar_error_gap(&Matrix::zeros(3, 5), &Matrix::zeros(3, 5), &q).is_err());
    }
}
