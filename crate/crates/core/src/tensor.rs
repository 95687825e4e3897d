//! Dense real tensors and the multilinear operations on them.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Dense `n_1 x ... x n_k` tensor stored row-major (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

/// One vector per mode, `x = (x_1, ..., x_k)` with `x_i ∈ R^{n_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    pub parts: Vec<Vec<f64>>,
}

impl BlockVector {
    pub fn new(parts: Vec<Vec<f64>>) -> Self {
        Self { parts }
    }

    /// Column `j` of every factor.
    pub fn from_columns<M: AsRef<Matrix>>(factors: &[M], j: usize) -> Self {
        Self {
            parts: factors.iter().map(|f| f.as_ref().column(j)).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.parts.len()
    }

    /// Copy with part `i` replaced.
    pub fn with_part(&self, i: usize, part: Vec<f64>) -> Self {
        let mut parts = self.parts.clone();
        parts[i] = part;
        Self { parts }
    }
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("tensor order must be at least 1".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Dimension(format!("zero extent in dims {dims:?}")));
        }
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(Error::Dimension(format!(
                "dims {dims:?} need {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = dims.iter().product();
        Self::new(dims, vec![0.0; len])
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, &dims);
        }
        Self::new(dims, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    fn check_same_dims(&self, other: &DenseTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!("dims {:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(())
    }

    /// Hilbert-Schmidt inner product.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_dims(other)?;
        Ok(DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_dims(other)?;
        Ok(DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> DenseTensor {
        DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn check_block(&self, x: &BlockVector, skip: Option<usize>) -> Result<()> {
        if x.order() != self.order() {
            return Err(Error::Dimension(format!(
                "block vector of order {} against tensor of order {}",
                x.order(),
                self.order()
            )));
        }
        for (i, (part, n)) in x.parts.iter().zip(&self.dims).enumerate() {
            if Some(i) != skip && part.len() != *n {
                return Err(Error::Dimension(format!(
                    "block part {i} has length {}, mode has {n}",
                    part.len()
                )));
            }
        }
        Ok(())
    }

    /// `⟨A, x_1 ⊗ ... ⊗ x_k⟩`.
    pub fn contract_full(&self, x: &BlockVector) -> Result<f64> {
        self.check_block(x, None)?;
        let v = self.contract_all_but(x, 0);
        Ok(v.iter().zip(&x.parts[0]).map(|(a, b)| a * b).sum())
    }

    /// Contraction with every part of `x` except part `mode`, which is ignored.
    pub fn contract_mode(&self, x: &BlockVector, mode: usize) -> Result<Vec<f64>> {
        if mode >= self.order() {
            return Err(Error::Dimension(format!(
                "mode {mode} out of range for order {}",
                self.order()
            )));
        }
        self.check_block(x, Some(mode))?;
        Ok(self.contract_all_but(x, mode))
    }

    // Trailing modes are folded from the back, leading modes from the front,
    // leaving the mode-`keep` fiber.
    fn contract_all_but(&self, x: &BlockVector, keep: usize) -> Vec<f64> {
        let mut buf = self.data.clone();
        for mode in (keep + 1..self.order()).rev() {
            let n = self.dims[mode];
            let xv = &x.parts[mode];
            buf = buf.chunks_exact(n).map(|c| c.iter().zip(xv).map(|(a, b)| a * b).sum()).collect();
        }
        for mode in 0..keep {
            let n = self.dims[mode];
            let rest = buf.len() / n;
            let mut next = vec![0.0; rest];
            for (l, xl) in x.parts[mode].iter().enumerate() {
                if *xl == 0.0 {
                    continue;
                }
                for (o, v) in next.iter_mut().zip(&buf[l * rest..(l + 1) * rest]) {
                    *o += xl * v;
                }
            }
            buf = next;
        }
        buf
    }

    /// Mode-`mode` product with an `m x n_mode` matrix.
    pub fn mode_product(&self, b: &Matrix, mode: usize) -> Result<DenseTensor> {
        if mode >= self.order() || b.cols() != self.dims[mode] {
            return Err(Error::Dimension(format!(
                "mode-{mode} product of {}x{} matrix with dims {:?}",
                b.rows(),
                b.cols(),
                self.dims
            )));
        }
        let n = self.dims[mode];
        let m = b.rows();
        let outer: usize = self.dims[..mode].iter().product();
        let inner: usize = self.dims[mode + 1..].iter().product();
        let mut dims = self.dims.clone();
        dims[mode] = m;
        let mut data = vec![0.0; outer * m * inner];
        for o in 0..outer {
            let src = &self.data[o * n * inner..(o + 1) * n * inner];
            let dst = &mut data[o * m * inner..(o + 1) * m * inner];
            for i in 0..m {
                let row = &mut dst[i * inner..(i + 1) * inner];
                for l in 0..n {
                    let coef = b[(i, l)];
                    if coef == 0.0 {
                        continue;
                    }
                    for (d, s) in row.iter_mut().zip(&src[l * inner..(l + 1) * inner]) {
                        *d += coef * s;
                    }
                }
            }
        }
        DenseTensor::new(dims, data)
    }

    /// Mode-`i` unfolding: an `n_i x (N / n_i)` matrix whose columns are the
    /// mode-`i` fibers.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        if mode >= self.order() {
            return Err(Error::Dimension(format!("mode {mode} out of range")));
        }
        let n = self.dims[mode];
        let inner: usize = self.dims[mode + 1..].iter().product();
        let outer: usize = self.dims[..mode].iter().product();
        Ok(Matrix::from_fn(n, outer * inner, |i, c| {
            let (o, t) = (c / inner, c % inner);
            self.data[(o * n + i) * inner + t]
        }))
    }
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for d in (0..idx.len()).rev() {
        idx[d] += 1;
        if idx[d] < dims[d] {
            return;
        }
        idx[d] = 0;
    }
}

/// `(B^(1), ..., B^(k)) · A`.
pub fn multilinear_multiply<M: AsRef<Matrix>>(bs: &[M], a: &DenseTensor) -> Result<DenseTensor> {
    if bs.len() != a.order() {
        return Err(Error::Dimension(format!(
            "{} matrices for a tensor of order {}",
            bs.len(),
            a.order()
        )));
    }
    let mut out = a.clone();
    for (mode, b) in bs.iter().enumerate() {
        out = out.mode_product(b.as_ref(), mode)?;
    }
    Ok(out)
}

/// Diagonal tensor of order `k` with `lambda` on the superdiagonal.
pub fn diag_tensor(lambda: &[f64], k: usize) -> Result<DenseTensor> {
    let r = lambda.len();
    let mut t = DenseTensor::zeros(vec![r; k])?;
    for (j, l) in lambda.iter().enumerate() {
        t.set(&vec![j; k], *l);
    }
    Ok(t)
}

/// Superdiagonal of a cubical tensor.
pub fn extract_diag(t: &DenseTensor) -> Result<Vec<f64>> {
    let r = t.dims()[0];
    if t.dims().iter().any(|d| *d != r) {
        return Err(Error::Dimension(format!("diagonal of non-cubical tensor {:?}", t.dims())));
    }
    Ok((0..r).map(|j| t.get(&vec![j; t.order()])).collect())
}

/// `Σ_j λ_j u^(1)_j ⊗ ... ⊗ u^(k)_j`.
pub fn assemble<M: AsRef<Matrix>>(factors: &[M], lambda: &[f64]) -> Result<DenseTensor> {
    let r = lambda.len();
    if factors.is_empty() || factors.iter().any(|f| f.as_ref().cols() != r) {
        return Err(Error::Dimension(format!("factors must all have {r} columns")));
    }
    let core = diag_tensor(lambda, factors.len())?;
    multilinear_multiply(factors, &core)
}
