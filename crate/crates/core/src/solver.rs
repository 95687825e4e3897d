//! Alternating polar decomposition with adaptive proximal correction and
//! truncation.
//!
//! One sweep updates the factors mode by mode. For mode `i` the columns of
//! `V^(i)` are the contractions of `A` against the current columns of all
//! other factors (modes `< i` already updated in this sweep), `Λ^(i)` holds
//! the current weights, and the new factor is the orthonormal polar factor
//! of `V^(i)Λ^(i)`. When the smallest singular value of `V^(i)Λ^(i)` drops
//! below `epsilon` the polar factor of `V^(i)Λ^(i) + epsilon·U^(i)_old` is
//! used instead. After the sweep, columns whose weight magnitude falls below
//! `kappa` are removed from every factor.

use serde::{Deserialize, Serialize};

use crate::diagnostics::kkt_total;
use crate::error::{Error, Result};
use crate::linalg::{random_orthonormal_from, svd, Matrix, OrthonormalMatrix, Svd};
use crate::rng;
use crate::tensor::{BlockVector, DenseTensor};

/// Orthonormal factor matrices `(U^(1), ..., U^(k))` sharing a column count.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    factors: Vec<OrthonormalMatrix>,
}

impl FactorSet {
    pub fn new(factors: Vec<OrthonormalMatrix>) -> Result<Self> {
        let r = factors.first().map_or(0, |f| f.cols());
        if r == 0 {
            return Err(Error::Dimension("factor set needs at least one column".into()));
        }
        if factors.iter().any(|f| f.cols() != r) {
            return Err(Error::Dimension("factors have different column counts".into()));
        }
        Ok(Self { factors })
    }

    pub fn rank(&self) -> usize {
        self.factors[0].cols()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    pub fn factors(&self) -> &[OrthonormalMatrix] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &OrthonormalMatrix {
        &self.factors[mode]
    }

    pub fn into_factors(self) -> Vec<OrthonormalMatrix> {
        self.factors
    }

    pub(crate) fn set_factor(&mut self, mode: usize, u: OrthonormalMatrix) {
        debug_assert_eq!(u.shape(), self.factors[mode].shape());
        self.factors[mode] = u;
    }

    /// `x_j = (u^(1)_j, ..., u^(k)_j)`.
    pub fn column_block(&self, j: usize) -> BlockVector {
        BlockVector::from_columns(&self.factors, j)
    }

    /// `‖U − W‖_F` over all modes.
    pub fn distance(&self, other: &FactorSet) -> Result<f64> {
        if self.order() != other.order() {
            return Err(Error::Dimension("factor sets of different order".into()));
        }
        let mut total = 0.0;
        for (a, b) in self.factors.iter().zip(&other.factors) {
            a.check_same_shape(b, "factor distance")?;
            let d = a.matrix() - b.matrix();
            total += d.dot(&d);
        }
        Ok(total.sqrt())
    }

    /// Keep only the columns listed in `keep`, in that order.
    pub fn select_columns(&self, keep: &[usize]) -> Result<FactorSet> {
        FactorSet::new(self.factors.iter().map(|f| f.select_columns(keep)).collect())
    }

    fn check_against(&self, a: &DenseTensor) -> Result<()> {
        if self.dims() != a.dims() {
            return Err(Error::Dimension(format!(
                "factor rows {:?} do not match tensor dims {:?}",
                self.dims(),
                a.dims()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProximalMode {
    /// Proximal correction whenever `σ_r(VΛ) < epsilon`.
    #[default]
    Classic,
    /// Sign-fixed polar factor for square, rank-one-deficient modes, classic
    /// correction otherwise.
    Revised,
    /// Plain alternating polar decomposition.
    None,
}

impl std::str::FromStr for ProximalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(Self::Classic),
            "revised" => Ok(Self::Revised),
            "none" => Ok(Self::None),
            other => Err(Error::Config(format!("unknown proximal mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for ProximalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Classic => "classic",
            Self::Revised => "revised",
            Self::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Init {
    /// Leading left singular vectors of each unfolding.
    #[default]
    Hosvd,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Proximal threshold; defaults to `1e-4 · max(1, ‖A‖²)`.
    pub epsilon: Option<f64>,
    /// Truncation threshold; defaults to `0.5 · sqrt(f(U_0) / r)`.
    pub kappa: Option<f64>,
    /// Revised-mode threshold; defaults to `10 · epsilon`.
    pub tau: Option<f64>,
    pub proximal_mode: ProximalMode,
    pub truncation_enabled: bool,
    pub max_sweeps: usize,
    pub step_tol: f64,
    pub kkt_tol: f64,
    pub init: Init,
    /// Keep a copy of the factors after every sweep (needed by replay audits).
    pub record_factors: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            kappa: None,
            tau: None,
            proximal_mode: ProximalMode::Classic,
            truncation_enabled: true,
            max_sweeps: 2000,
            step_tol: 1e-10,
            kkt_tol: 1e-8,
            init: Init::Hosvd,
            record_factors: true,
        }
    }
}

/// Thresholds in effect for a run after defaults are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub epsilon: f64,
    pub kappa: f64,
    /// Only meaningful in revised mode.
    pub tau: f64,
    pub proximal_mode: ProximalMode,
}

impl Parameters {
    /// Constant `c` of the per-sweep guarantee `Δf >= c·‖ΔU‖²`, if any.
    pub fn decrease_constant(&self) -> Option<f64> {
        match self.proximal_mode {
            ProximalMode::Classic => Some(0.5 * self.epsilon),
            ProximalMode::Revised => Some(0.5 * self.epsilon.min(self.tau - self.epsilon)),
            ProximalMode::None => None,
        }
    }
}

/// How the new factor of one mode was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeStep {
    /// Plain polar factor of `VΛ`.
    Polar,
    /// Polar factor of `VΛ + epsilon·U_old`.
    Proximal,
    /// Revised mode: polar factor with the sign of the last left singular
    /// vector aligned to the previous factor.
    SignFixed,
}

/// Everything recorded about sweep `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    /// 1-based sweep index `p`.
    pub sweep: usize,
    /// Working rank during the sweep (before truncation).
    pub rank: usize,
    /// `f(U_[p-1])`.
    pub f_prev: f64,
    /// `f(U_{i,[p]})` for `i = 0..=k`; entry 0 equals `f_prev`.
    pub mode_f: Vec<f64>,
    /// `f(U_[p])` after truncation.
    pub f_value: f64,
    /// `f(U_[p]) − f(U_[p-1])`.
    pub delta_f: f64,
    /// End-of-sweep weights `λ^k_{j,[p]}`, before truncation.
    pub lambda: Vec<f64>,
    /// `‖U_[p] − U_[p-1]‖_F` (pre-truncation columns).
    pub step_norm: f64,
    pub mode_step_norms: Vec<f64>,
    /// `σ_r(V^(i)Λ^(i))` per mode.
    pub sigma_min: Vec<f64>,
    /// `σ_{r-1}(V^(i)Λ^(i))` per mode (0 when `r = 1`).
    pub sigma_second: Vec<f64>,
    pub steps: Vec<ModeStep>,
    /// `Σ_j λ^i_j λ^{i-1}_j` for `i = 1..=k`.
    pub weight_correlation: Vec<f64>,
    /// Column indices removed by truncation.
    pub truncated: Vec<usize>,
    /// `f` lost to truncation in this sweep.
    pub truncation_loss: f64,
    /// Total KKT residual at `U_[p]`.
    pub kkt_residual: f64,
    pub factors: Option<FactorSet>,
}

impl SweepRecord {
    pub fn is_truncation(&self) -> bool {
        !self.truncated.is_empty()
    }

    /// Bitmask of modes that took a proximal correction.
    pub fn proximal_mask(&self) -> u64 {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == ModeStep::Proximal)
            .fold(0, |m, (i, _)| m | (1 << i))
    }

}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrace {
    pub dims: Vec<usize>,
    pub initial_rank: usize,
    pub initial_f: f64,
    pub tensor_norm: f64,
    pub params: Parameters,
    pub initial_factors: Option<FactorSet>,
    pub records: Vec<SweepRecord>,
}

impl SweepTrace {
    /// Factors before sweep `index` (0-based into `records`).
    pub fn factors_before(&self, index: usize) -> Option<&FactorSet> {
        if index == 0 {
            self.initial_factors.as_ref()
        } else {
            self.records.get(index - 1)?.factors.as_ref()
        }
    }

    pub fn last_truncation(&self) -> Option<usize> {
        self.records.iter().rposition(SweepRecord::is_truncation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Step norm and KKT residual both below tolerance.
    Converged,
    MaxSweeps,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Normalized factors: `lambda` nonnegative and nonincreasing.
    pub factors: FactorSet,
    pub lambda: Vec<f64>,
    /// `‖A − Σ_j λ_j u^(1)_j ⊗ ... ⊗ u^(k)_j‖`.
    pub residual: f64,
    pub trace: SweepTrace,
    pub termination: Termination,
}

impl Solution {
    pub fn sweeps(&self) -> usize {
        self.trace.records.len()
    }

    pub fn objective(&self) -> f64 {
        self.lambda.iter().map(|l| l * l).sum()
    }
}

/// `λ_j(U) = ⟨A, u^(1)_j ⊗ ... ⊗ u^(k)_j⟩`.
pub fn lambda_of(a: &DenseTensor, u: &FactorSet) -> Result<Vec<f64>> {
    u.check_against(a)?;
    (0..u.rank()).map(|j| a.contract_full(&u.column_block(j))).collect()
}

/// `f(U) = Σ_j λ_j(U)²`.
pub fn objective_f(a: &DenseTensor, u: &FactorSet) -> Result<f64> {
    Ok(lambda_of(a, u)?.iter().map(|l| l * l).sum())
}

/// `V^(i)` (columns: contraction of `A` against every mode but `i`) and the
/// diagonal of `Λ^(i)` at the point `state`.
pub fn mode_matrices(a: &DenseTensor, state: &FactorSet, mode: usize) -> Result<(Matrix, Vec<f64>)> {
    state.check_against(a)?;
    if mode >= state.order() {
        return Err(Error::Dimension(format!("mode {mode} out of range")));
    }
    let r = state.rank();
    let u = state.factor(mode);
    let mut columns = Vec::with_capacity(r);
    let mut lambda = Vec::with_capacity(r);
    for j in 0..r {
        let v = a.contract_mode(&state.column_block(j), mode)?;
        lambda.push(v.iter().zip(u.column(j)).map(|(p, q)| p * q).sum());
        columns.push(v);
    }
    Ok((Matrix::from_columns(u.rows(), &columns)?, lambda))
}

/// Result of updating one factor.
#[derive(Debug, Clone)]
pub struct ModeUpdate {
    pub factor: OrthonormalMatrix,
    pub step: ModeStep,
    /// Diagonal of `Λ^(i)` used for the update.
    pub lambda: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_second: f64,
}

/// Polar step for `mode` at `state`, followed by the correction chosen by
/// `params.proximal_mode` when `σ_r(VΛ) < epsilon`.
pub fn apd_mode_update(
    a: &DenseTensor,
    state: &FactorSet,
    mode: usize,
    params: &Parameters,
) -> Result<ModeUpdate> {
    let (v, lambda) = mode_matrices(a, state, mode)?;
    let x = v.scale_columns(&lambda);
    let d = svd(&x)?;
    let prev = state.factor(mode);
    let sigma_min = d.sigma_min();
    let sigma_second = if d.sigma.len() >= 2 { d.sigma[d.sigma.len() - 2] } else { 0.0 };

    let (factor, step) = if sigma_min >= params.epsilon || params.proximal_mode == ProximalMode::None {
        (polar_factor(&d)?, ModeStep::Polar)
    } else if params.proximal_mode == ProximalMode::Revised {
        revised_correction(&x, &d, prev, params)?
    } else {
        (proximal_factor(&x, prev, params.epsilon)?, ModeStep::Proximal)
    };
    Ok(ModeUpdate {
        factor,
        step,
        lambda,
        sigma_min,
        sigma_second,
    })
}

/// Revised correction for `mode`, applied unconditionally (the caller has
/// established `σ_r(VΛ) < epsilon`).
pub fn revised_mode_update(
    a: &DenseTensor,
    state: &FactorSet,
    mode: usize,
    params: &Parameters,
) -> Result<ModeUpdate> {
    let (v, lambda) = mode_matrices(a, state, mode)?;
    let x = v.scale_columns(&lambda);
    let d = svd(&x)?;
    let sigma_second = if d.sigma.len() >= 2 { d.sigma[d.sigma.len() - 2] } else { 0.0 };
    let (factor, step) = revised_correction(&x, &d, state.factor(mode), params)?;
    Ok(ModeUpdate {
        factor,
        step,
        lambda,
        sigma_min: d.sigma_min(),
        sigma_second,
    })
}

fn polar_factor(d: &Svd) -> Result<OrthonormalMatrix> {
    Ok(OrthonormalMatrix::new_unchecked(d.g.matmul(&d.h.transpose())?))
}

fn proximal_factor(x: &Matrix, prev: &OrthonormalMatrix, epsilon: f64) -> Result<OrthonormalMatrix> {
    let shifted = x + &prev.scale(epsilon);
    polar_factor(&svd(&shifted)?)
}

fn revised_correction(
    x: &Matrix,
    d: &Svd,
    prev: &OrthonormalMatrix,
    params: &Parameters,
) -> Result<(OrthonormalMatrix, ModeStep)> {
    if !(params.tau > params.epsilon) {
        return Err(Error::Config(format!(
            "revised mode needs tau > epsilon (tau = {}, epsilon = {})",
            params.tau, params.epsilon
        )));
    }
    let (n, r) = x.shape();
    if r == n && r >= 2 && d.sigma[r - 2] >= params.tau {
        let reference = prev.matmul(&d.h)?;
        let g_last = d.g.column(r - 1);
        let alignment: f64 = g_last.iter().zip(reference.column(r - 1)).map(|(p, q)| p * q).sum();
        let mut g = d.g.clone();
        if alignment < 0.0 {
            let flipped: Vec<f64> = g_last.iter().map(|v| -v).collect();
            g.set_column(r - 1, &flipped);
        }
        let u = g.matmul(&d.h.transpose())?;
        return Ok((OrthonormalMatrix::new_unchecked(u), ModeStep::SignFixed));
    }
    Ok((proximal_factor(x, prev, params.epsilon)?, ModeStep::Proximal))
}

/// Remove every column `j` with `|λ_j| < kappa`. Returns the reduced set and
/// the removed indices (empty when nothing falls below `kappa`).
pub fn truncate(state: &FactorSet, lambda: &[f64], kappa: f64) -> Result<(FactorSet, Vec<usize>)> {
    if lambda.len() != state.rank() {
        return Err(Error::Dimension(format!(
            "{} weights for rank {}",
            lambda.len(),
            state.rank()
        )));
    }
    let (removed, keep): (Vec<usize>, Vec<usize>) = (0..lambda.len()).partition(|&j| lambda[j].abs() < kappa);
    if removed.is_empty() {
        return Ok((state.clone(), removed));
    }
    if keep.is_empty() {
        return Err(Error::Config(format!(
            "truncation threshold {kappa} would remove every column"
        )));
    }
    Ok((state.select_columns(&keep)?, removed))
}

/// Starting factors with `f(U_0) > 0`.
pub fn init_factors(a: &DenseTensor, r: usize, init: Init) -> Result<FactorSet> {
    let min_dim = a.dims().iter().copied().min().unwrap_or(0);
    if r == 0 || r > min_dim {
        return Err(Error::Config(format!("rank {r} outside 1..={min_dim}")));
    }
    match init {
        Init::Hosvd => {
            let mut factors = Vec::with_capacity(a.order());
            for mode in 0..a.order() {
                let d = svd(&a.unfold(mode)?)?;
                factors.push(OrthonormalMatrix::new_unchecked(d.g.column_range(0, r)));
            }
            let u = FactorSet::new(factors)?;
            if objective_f(a, &u)? > 0.0 {
                Ok(u)
            } else {
                Err(Error::Initialization("HOSVD start has f = 0".into()))
            }
        }
        Init::Random { seed } => {
            for attempt in 0..100u64 {
                let mut factors = Vec::with_capacity(a.order());
                for (mode, n) in a.dims().iter().enumerate() {
                    let id = rng::PURPOSE_INIT + 64 * attempt + mode as u64;
                    factors.push(random_orthonormal_from(&mut rng::stream(seed, id), *n, r)?);
                }
                let u = FactorSet::new(factors)?;
                if objective_f(a, &u)? > 0.0 {
                    return Ok(u);
                }
            }
            Err(Error::Initialization("no random start with f > 0 in 100 attempts".into()))
        }
    }
}

/// Resolve defaults and validate the thresholds against `f(U_0)`.
pub fn resolve_parameters(
    config: &SolverConfig,
    tensor_norm_sq: f64,
    f0: f64,
    r: usize,
) -> Result<Parameters> {
    let epsilon = config.epsilon.unwrap_or(1e-4 * tensor_norm_sq.max(1.0));
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let kappa_max = (f0 / r as f64).sqrt();
    let kappa = config.kappa.unwrap_or(0.5 * kappa_max);
    if config.truncation_enabled && !(kappa >= 0.0 && kappa < kappa_max) {
        return Err(Error::Config(format!(
            "kappa must lie in [0, {kappa_max}) for this start, got {kappa}"
        )));
    }
    let tau = config.tau.unwrap_or(10.0 * epsilon);
    if config.proximal_mode == ProximalMode::Revised && !(tau > epsilon && tau.is_finite()) {
        return Err(Error::Config(format!("tau must exceed epsilon ({epsilon}), got {tau}")));
    }
    Ok(Parameters {
        epsilon,
        kappa,
        tau,
        proximal_mode: config.proximal_mode,
    })
}

/// Approximate `a` by an orthogonally decomposable tensor of rank at most `r`.
pub fn run(a: &DenseTensor, r: usize, config: &SolverConfig) -> Result<Solution> {
    if a.order() < 3 {
        return Err(Error::Config(format!("tensor order must be at least 3, got {}", a.order())));
    }
    let norm_sq = a.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::Config("input tensor is zero".into()));
    }
    if config.max_sweeps == 0 {
        return Err(Error::Config("max_sweeps must be positive".into()));
    }
    let start = init_factors(a, r, config.init)?;
    let f0 = objective_f(a, &start)?;
    let params = resolve_parameters(config, norm_sq, f0, r)?;
    let k = a.order();

    let mut trace = SweepTrace {
        dims: a.dims().to_vec(),
        initial_rank: r,
        initial_f: f0,
        tensor_norm: norm_sq.sqrt(),
        params,
        initial_factors: config.record_factors.then(|| start.clone()),
        records: Vec::new(),
    };
    let mut prev = start;
    let mut f_prev = f0;
    let mut termination = Termination::MaxSweeps;

    for sweep in 1..=config.max_sweeps {
        let mut cur = prev.clone();
        let mut mode_f = Vec::with_capacity(k + 1);
        let mut sigma_min = Vec::with_capacity(k);
        let mut sigma_second = Vec::with_capacity(k);
        let mut steps = Vec::with_capacity(k);
        let mut mode_step_norms = Vec::with_capacity(k);
        let mut weights: Vec<Vec<f64>> = Vec::with_capacity(k + 1);

        for mode in 0..k {
            let update = apd_mode_update(a, &cur, mode, &params)?;
            mode_f.push(update.lambda.iter().map(|l| l * l).sum());
            weights.push(update.lambda);
            let diff = cur.factor(mode).matrix() - update.factor.matrix();
            mode_step_norms.push(diff.frobenius_norm());
            sigma_min.push(update.sigma_min);
            sigma_second.push(update.sigma_second);
            steps.push(update.step);
            cur.set_factor(mode, update.factor);
        }
        let lambda = lambda_of(a, &cur)?;
        mode_f.push(lambda.iter().map(|l| l * l).sum());
        weights.push(lambda.clone());
        let weight_correlation = weights
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(p, q)| p * q).sum())
            .collect();
        let step_norm = mode_step_norms.iter().map(|s| s * s).sum::<f64>().sqrt();
        let rank = cur.rank();

        let (next, truncated) = if config.truncation_enabled {
            truncate(&cur, &lambda, params.kappa)?
        } else {
            (cur, Vec::new())
        };
        let f_pre = mode_f[k];
        let f_value: f64 = lambda
            .iter()
            .enumerate()
            .filter(|(j, _)| !truncated.contains(j))
            .map(|(_, l)| l * l)
            .sum();
        let kkt = kkt_total(a, &next)?;

        trace.records.push(SweepRecord {
            sweep,
            rank,
            f_prev,
            mode_f,
            f_value,
            delta_f: f_value - f_prev,
            lambda,
            step_norm,
            mode_step_norms,
            sigma_min,
            sigma_second,
            steps,
            weight_correlation,
            truncation_loss: f_pre - f_value,
            truncated: truncated.clone(),
            kkt_residual: kkt,
            factors: config.record_factors.then(|| next.clone()),
        });

        prev = next;
        f_prev = f_value;
        if truncated.is_empty() && step_norm <= config.step_tol && kkt <= config.kkt_tol {
            termination = Termination::Converged;
            break;
        }
    }

    let (factors, lambda) = normalize(a, prev)?;
    let residual = a.sub(&crate::tensor::assemble(factors.factors(), &lambda)?)?.norm();
    Ok(Solution {
        factors,
        lambda,
        residual,
        trace,
        termination,
    })
}

/// Flip columns of the first factor so every weight is nonnegative, then
/// order columns by nonincreasing weight.
fn normalize(a: &DenseTensor, u: FactorSet) -> Result<(FactorSet, Vec<f64>)> {
    let lambda = lambda_of(a, &u)?;
    let mut factors = u.into_factors();
    for (j, l) in lambda.iter().enumerate() {
        if *l < 0.0 {
            factors[0].flip_column(j);
        }
    }
    let mut order: Vec<usize> = (0..lambda.len()).collect();
    order.sort_by(|&x, &y| lambda[y].abs().total_cmp(&lambda[x].abs()));
    let sorted = FactorSet::new(factors)?.select_columns(&order)?;
    let lambda = lambda_of(a, &sorted)?;
    Ok((sorted, lambda))
}
