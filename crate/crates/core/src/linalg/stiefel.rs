//! Points of the Stiefel manifold `V(m, n)` and its tangent/normal geometry.

use std::ops::Deref;

use rand::Rng;

use super::matrix::Matrix;
use super::polar::polar;
use super::svd::next_orthogonal_vector;
use crate::error::{Error, Result};
use crate::rng;

/// Gram defect accepted by [`OrthonormalMatrix::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// `n x m` matrix with orthonormal columns (`m <= n`).
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalMatrix(Matrix);

impl OrthonormalMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.cols() > m.rows() {
            return Err(Error::Dimension(format!(
                "orthonormal matrix needs cols <= rows, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let defect = m.gram_defect();
        if !(defect <= ORTHONORMAL_TOL) {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(Self(m))
    }

    /// Skips validation; callers guarantee orthonormality by construction.
    pub(crate) fn new_unchecked(m: Matrix) -> Self {
        debug_assert!(m.gram_defect() < 1e-8, "gram defect {}", m.gram_defect());
        Self(m)
    }

    /// First `cols` columns of the identity.
    pub fn eye(rows: usize, cols: usize) -> Result<Self> {
        Self::new(Matrix::eye(rows, cols))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn select_columns(&self, keep: &[usize]) -> Self {
        Self(self.0.select_columns(keep))
    }

    /// Negate column `j`.
    pub fn flip_column(&mut self, j: usize) {
        for i in 0..self.0.rows() {
            self.0[(i, j)] = -self.0[(i, j)];
        }
    }
}

impl Deref for OrthonormalMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl AsRef<Matrix> for OrthonormalMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

/// Seeded random point of `V(r, n)`: Gram-Schmidt of a Gaussian matrix.
pub fn random_orthonormal(n: usize, r: usize, seed: u64) -> Result<OrthonormalMatrix> {
    random_orthonormal_from(&mut rng::stream(seed, rng::PURPOSE_ENTRIES), n, r)
}

pub fn random_orthonormal_from<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    r: usize,
) -> Result<OrthonormalMatrix> {
    if r > n {
        return Err(Error::Dimension(format!("cannot draw {r} orthonormal columns in R^{n}")));
    }
    loop {
        let g = rng::gaussian_matrix_from(rng, n, r);
        if let Some(q) = gram_schmidt(&g) {
            return Ok(OrthonormalMatrix(q));
        }
    }
}

/// Modified Gram-Schmidt with reorthogonalization; `None` if the columns are
/// numerically dependent.
fn gram_schmidt(a: &Matrix) -> Option<Matrix> {
    let (n, m) = a.shape();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut x = a.column(j);
        let start = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for _ in 0..2 {
            for q in &cols {
                let d: f64 = q.iter().zip(&x).map(|(p, v)| p * v).sum();
                for (xi, qi) in x.iter_mut().zip(q) {
                    *xi -= d * qi;
                }
            }
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 1e-8 * start) {
            return None;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        cols.push(x);
    }
    Matrix::from_columns(n, &cols).ok()
}

/// Orthogonal projection of `b` onto the tangent space of the Stiefel
/// manifold at `a`: `(I − ½AAᵀ)(B − ABᵀA)`.
pub fn tangent_project(a: &OrthonormalMatrix, b: &Matrix) -> Result<Matrix> {
    a.check_same_shape(b, "tangent projection")?;
    let bta = b.tr_matmul(a)?;
    let inner = b - &a.matmul(&bta)?;
    let at_inner = a.tr_matmul(&inner)?;
    Ok(&inner - &a.matmul(&at_inner)?.scale(0.5))
}

/// Projection onto the normal space at `a`: `A(AᵀB + BᵀA)/2`.
pub fn normal_project(a: &OrthonormalMatrix, b: &Matrix) -> Result<Matrix> {
    a.check_same_shape(b, "normal projection")?;
    a.matmul(&a.tr_matmul(b)?.sym())
}

/// `n x (n − r)` matrix `W` with `[U W]` orthogonal.
pub fn complete_orthonormal(u: &OrthonormalMatrix) -> OrthonormalMatrix {
    let n = u.rows();
    let mut basis: Vec<Vec<f64>> = (0..u.cols()).map(|j| u.column(j)).collect();
    let mut extra = Vec::with_capacity(n - u.cols());
    for _ in u.cols()..n {
        let x = next_orthogonal_vector(n, &basis);
        basis.push(x.clone());
        extra.push(x);
    }
    OrthonormalMatrix(Matrix::from_columns(n, &extra).expect("column lengths"))
}

/// Completion aligned with a reference: given `[V1 V2]` orthogonal, returns
/// `W = U2·Q` where `U2` is any completion of `u` and `Q` the polar factor of
/// `U2ᵀ V2`. Then `‖[U W] − [V1 V2]‖²_F <= 2‖U − V1‖²_F`.
pub fn complete_orthonormal_aligned(
    u: &OrthonormalMatrix,
    v2: &OrthonormalMatrix,
) -> Result<OrthonormalMatrix> {
    let n = u.rows();
    if v2.rows() != n || v2.cols() + u.cols() != n {
        return Err(Error::Dimension(format!(
            "aligned completion of {}x{} against {}x{}",
            u.rows(),
            u.cols(),
            v2.rows(),
            v2.cols()
        )));
    }
    let u2 = complete_orthonormal(u);
    if u2.cols() == 0 {
        return Ok(u2);
    }
    let q = polar(&u2.tr_matmul(v2)?)?.u;
    Ok(OrthonormalMatrix::new_unchecked(u2.matmul(&q)?))
}
