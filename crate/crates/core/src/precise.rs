//! Double-double evaluation of the objective at exactly orthonormal factors.
//!
//! Computed polar factors are orthonormal only to about `1e-16`, and the
//! objective is first-order sensitive to that defect, so `f` of a stored
//! iterate carries noise of a few ulps. Re-orthonormalizing the stored
//! factors and evaluating `f` in double-double arithmetic removes it, which
//! keeps objective gaps resolvable down to the stopping tolerance.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::Result;
use crate::solver::FactorSet;
use crate::tensor::DenseTensor;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl From<f64> for DoubleDouble {
    fn from(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;

    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;

    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

type Dd = DoubleDouble;

/// Row-major `rows x cols` double-double matrix.
struct DdMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Dd>,
}

impl DdMatrix {
    fn at(&self, i: usize, j: usize) -> Dd {
        self.data[i * self.cols + j]
    }

    /// Two Newton-Schulz steps `X ← X(3I − XᵀX)/2`; from a defect of `1e-16`
    /// this reaches the polar factor to double-double precision.
    fn orthonormalize(&mut self) {
        let (n, r) = (self.rows, self.cols);
        for _ in 0..2 {
            let mut m = vec![Dd::ZERO; r * r];
            for a in 0..r {
                for b in 0..r {
                    let mut g = Dd::ZERO;
                    for i in 0..n {
                        g = g + self.at(i, a) * self.at(i, b);
                    }
                    let diag = if a == b { Dd::from(1.5) } else { Dd::ZERO };
                    m[a * r + b] = diag - Dd::from(0.5) * g;
                }
            }
            let mut next = vec![Dd::ZERO; n * r];
            for i in 0..n {
                for b in 0..r {
                    let mut s = Dd::ZERO;
                    for a in 0..r {
                        s = s + self.at(i, a) * m[a * r + b];
                    }
                    next[i * r + b] = s;
                }
            }
            self.data = next;
        }
    }
}

/// `f` at the polar factors of the stored factors, in double-double.
pub fn objective(a: &DenseTensor, u: &FactorSet) -> Result<DoubleDouble> {
    let factors: Vec<DdMatrix> = u
        .factors()
        .iter()
        .map(|f| {
            let mut m = DdMatrix {
                rows: f.rows(),
                cols: f.cols(),
                data: f.as_slice().iter().map(|v| Dd::from(*v)).collect(),
            };
            m.orthonormalize();
            m
        })
        .collect();
    let dims = a.dims();
    let mut f = Dd::ZERO;
    for j in 0..u.rank() {
        let mut t: Vec<Dd> = a.data().iter().map(|v| Dd::from(*v)).collect();
        for mode in (0..dims.len()).rev() {
            let n = dims[mode];
            t = t
                .chunks(n)
                .map(|chunk| {
                    chunk
                        .iter()
                        .enumerate()
                        .fold(Dd::ZERO, |s, (i, v)| s + *v * factors[mode].at(i, j))
                })
                .collect();
        }
        let lambda = t[0];
        f = f + lambda * lambda;
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_orthonormal, Matrix, OrthonormalMatrix};
    use crate::solver::objective_f;
    use crate::tensor::assemble;

    #[test]
    fn arithmetic_keeps_low_part() {
        let one = Dd::from(1.0);
        let tiny = Dd::from(1e-20);
        let s = one + tiny;
        assert_eq!(s.hi, 1.0);
        assert_eq!(s.lo, 1e-20);
        assert_eq!((s - one).to_f64(), 1e-20);
        let third = Dd::from(1.0 / 3.0);
        let p = third * Dd::from(3.0);
        assert_eq!((p - one).to_f64(), (1.0f64 / 3.0).mul_add(3.0, -1.0));
    }

    #[test]
    fn matches_plain_objective() {
        let fs: Vec<OrthonormalMatrix> = (0..3).map(|i| random_orthonormal(4, 2, i).unwrap()).collect();
        let a = assemble(&fs, &[3.0, 1.5]).unwrap();
        let u = FactorSet::new(fs).unwrap();
        let precise = objective(&a, &u).unwrap();
        assert!((precise.to_f64() - 11.25).abs() < 1e-14);
        assert!((precise.to_f64() - objective_f(&a, &u).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn removes_orthonormality_defect() {
        // Scaling a factor by (1 + 1e-12) shifts the plain objective but not
        // the value at the orthonormalized point.
        let fs: Vec<OrthonormalMatrix> = (0..3).map(|i| random_orthonormal(3, 1, 10 + i).unwrap()).collect();
        let a = assemble(&fs, &[2.0]).unwrap();
        let u = FactorSet::new(fs.clone()).unwrap();
        let mut bent = fs;
        bent[0] = OrthonormalMatrix::new(Matrix::from_vec(3, 1, bent[0].as_slice().iter().map(|v| v * (1.0 + 1e-12)).collect()).unwrap()).unwrap();
        let v = FactorSet::new(bent).unwrap();
        assert!((objective_f(&a, &v).unwrap() - 4.0).abs() > 1e-12);
        assert!((objective(&a, &v).unwrap() - objective(&a, &u).unwrap()).to_f64().abs() < 1e-26);
    }
}
