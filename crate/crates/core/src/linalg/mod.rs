//! Small dense linear algebra: SVD, polar decomposition, Stiefel geometry
//! and principal angles.

mod angles;
mod matrix;
mod polar;
mod stiefel;
mod svd;

pub use angles::principal_angles;
pub use matrix::Matrix;
pub use polar::{polar, polar_error_gap, psd_sqrt, PolarErrorGap, PolarFactors};
pub use stiefel::{
    complete_orthonormal, complete_orthonormal_aligned, normal_project, random_orthonormal,
    random_orthonormal_from, tangent_project, OrthonormalMatrix, ORTHONORMAL_TOL,
};
pub use svd::{svd, symmetric_eigen, Svd, SymmetricEigen, RANK_TOL};
