use super::stiefel::OrthonormalMatrix;
use super::svd::svd;
use crate::error::{Error, Result};

/// Principal angles between the column spans of `u` and `v`, nondecreasing
/// in `[0, π/2]`, from `cos θ_i = σ_i(UᵀV)`.
pub fn principal_angles(u: &OrthonormalMatrix, v: &OrthonormalMatrix) -> Result<Vec<f64>> {
    if u.shape() != v.shape() {
        return Err(Error::Dimension(format!(
            "principal angles between {}x{} and {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    if u.cols() == 0 {
        return Ok(Vec::new());
    }
    let d = svd(&u.tr_matmul(v)?)?;
    Ok(d.sigma.iter().map(|s| s.clamp(0.0, 1.0).acos()).collect())
}
