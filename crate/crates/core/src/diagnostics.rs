//! Optimality tests, replay audits of a solver trace, rate fitting and the
//! closed-form dimension counts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{svd, tangent_project, Matrix};
use crate::solver::{lambda_of, mode_matrices, FactorSet, ModeStep, Solution, SweepTrace, Termination};
use crate::precise;
use crate::tensor::{assemble, DenseTensor};

/// First-order optimality of a factor set.
#[derive(Debug, Clone)]
pub struct KktReport {
    /// `ρ_i = ‖X_i − U^(i) X_iᵀ U^(i)‖_F` with `X_i = V^(i)Λ`.
    pub residuals: Vec<f64>,
    /// `sym(U^(i)ᵀ X_i)`.
    pub multipliers: Vec<Matrix>,
    /// `‖U^(i)ᵀX_i − X_iᵀU^(i)‖_F`.
    pub symmetry_defects: Vec<f64>,
    /// `σ_min(X_i)`.
    pub sigma_min: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `sqrt(Σ ρ_i²)`.
    pub total: f64,
}

impl KktReport {
    pub fn max_symmetry_defect(&self) -> f64 {
        self.symmetry_defects.iter().copied().fold(0.0, f64::max)
    }

    /// All weights nonzero, up to `1e-12` relative to the largest.
    pub fn is_primitive(&self) -> bool {
        let scale = self.lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        self.lambda.iter().all(|l| l.abs() > 1e-12 * scale)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.total <= tol
    }
}

pub fn kkt_residual(a: &DenseTensor, u: &FactorSet) -> Result<KktReport> {
    let lambda = lambda_of(a, u)?;
    let k = u.order();
    let mut report = KktReport {
        residuals: Vec::with_capacity(k),
        multipliers: Vec::with_capacity(k),
        symmetry_defects: Vec::with_capacity(k),
        sigma_min: Vec::with_capacity(k),
        lambda: lambda.clone(),
        total: 0.0,
    };
    for mode in 0..k {
        let (v, _) = mode_matrices(a, u, mode)?;
        let x = v.scale_columns(&lambda);
        let uf = u.factor(mode);
        let p = uf.tr_matmul(&x)?;
        let reflected = uf.matmul(&p.transpose())?;
        report.residuals.push((&x - &reflected).frobenius_norm());
        report.symmetry_defects.push((&p - &p.transpose()).frobenius_norm());
        report.multipliers.push(p.sym());
        report.sigma_min.push(svd(&x)?.sigma_min());
    }
    report.total = report.residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
    Ok(report)
}

/// `sqrt(Σ ρ_i²)` alone, without the per-mode SVDs of [`kkt_residual`].
pub fn kkt_total(a: &DenseTensor, u: &FactorSet) -> Result<f64> {
    let lambda = lambda_of(a, u)?;
    let mut total = 0.0;
    for mode in 0..u.order() {
        let (v, _) = mode_matrices(a, u, mode)?;
        let x = v.scale_columns(&lambda);
        let uf = u.factor(mode);
        let r = &x - &uf.matmul(&uf.tr_matmul(&x)?.transpose())?;
        total += r.dot(&r);
    }
    Ok(total.sqrt())
}

/// `g(U, x) = ½‖A − Σ_j x_j u^(1)_j ⊗ ... ⊗ u^(k)_j‖²`, evaluated for any
/// (not necessarily orthonormal) factor matrices.
pub fn g_value(a: &DenseTensor, factors: &[Matrix], x: &[f64]) -> Result<f64> {
    Ok(0.5 * a.sub(&assemble(factors, x)?)?.norm_squared())
}

/// Riemannian gradient of `g` on the product of Stiefel manifolds and `R^r`.
#[derive(Debug, Clone)]
pub struct GradG {
    /// `−P_T(V^(i)Γ)` with `Γ = diag(x)`.
    pub modes: Vec<Matrix>,
    /// `x − λ(U)`.
    pub x: Vec<f64>,
}

impl GradG {
    pub fn norm(&self) -> f64 {
        let m: f64 = self.modes.iter().map(|g| g.dot(g)).sum();
        let x: f64 = self.x.iter().map(|v| v * v).sum();
        (m + x).sqrt()
    }
}

pub fn riemannian_grad_g(a: &DenseTensor, u: &FactorSet, x: &[f64]) -> Result<GradG> {
    if x.len() != u.rank() {
        return Err(Error::Dimension(format!("{} weights for rank {}", x.len(), u.rank())));
    }
    let lambda = lambda_of(a, u)?;
    let mut modes = Vec::with_capacity(u.order());
    for mode in 0..u.order() {
        let (v, _) = mode_matrices(a, u, mode)?;
        modes.push(tangent_project(u.factor(mode), &v.scale_columns(x))?.scale(-1.0));
    }
    let x = x.iter().zip(&lambda).map(|(p, q)| p - q).collect();
    Ok(GradG { modes, x })
}

/// A sweep or substep whose objective gain falls short of `c·‖ΔU‖²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecreaseViolation {
    /// 1-based sweep index.
    pub sweep: usize,
    /// `None` for the whole sweep, `Some(i)` for the substep of mode `i`.
    pub mode: Option<usize>,
    pub gain: f64,
    pub required: f64,
}

impl DecreaseViolation {
    pub fn slack(&self) -> f64 {
        self.gain - self.required
    }
}

pub const DECREASE_SLACK: f64 = 1e-9;

/// Per-sweep sufficient increase `f(U_[p]) − f(U_[p-1]) >= c·‖U_[p] − U_[p-1]‖²`
/// on every sweep without truncation. `c` is `ε/2` (classic) or
/// `min(ε, τ − ε)/2` (revised); plain mode checks monotonicity only.
pub fn sufficient_decrease_audit(trace: &SweepTrace) -> Vec<DecreaseViolation> {
    let c = trace.params.decrease_constant().unwrap_or(0.0);
    trace
        .records
        .iter()
        .filter(|r| !r.is_truncation())
        .filter_map(|r| {
            let v = DecreaseViolation {
                sweep: r.sweep,
                mode: None,
                gain: r.delta_f,
                required: c * r.step_norm * r.step_norm,
            };
            (v.slack() < -DECREASE_SLACK).then_some(v)
        })
        .collect()
}

/// The same inequality for every single-mode update, including those of
/// truncation sweeps (truncation happens after the substeps).
pub fn substep_decrease_audit(trace: &SweepTrace) -> Vec<DecreaseViolation> {
    let c = trace.params.decrease_constant().unwrap_or(0.0);
    let mut out = Vec::new();
    for r in &trace.records {
        for (i, step) in r.mode_step_norms.iter().enumerate() {
            let v = DecreaseViolation {
                sweep: r.sweep,
                mode: Some(i),
                gain: r.mode_f[i + 1] - r.mode_f[i],
                required: c * step * step,
            };
            if v.slack() < -DECREASE_SLACK {
                out.push(v);
            }
        }
    }
    out
}

/// Total truncation loss and the budget `(removed columns)·κ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationBudget {
    pub loss: f64,
    pub budget: f64,
    pub removed: usize,
}

pub fn truncation_budget(trace: &SweepTrace) -> TruncationBudget {
    let kappa = trace.params.kappa;
    let removed: usize = trace.records.iter().map(|r| r.truncated.len()).sum();
    TruncationBudget {
        loss: trace.records.iter().map(|r| r.truncation_loss).sum(),
        budget: removed as f64 * kappa * kappa,
        removed,
    }
}

/// One audited sweep of the subdifferential bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubdiffEntry {
    pub sweep: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl SubdiffEntry {
    pub fn passes(&self) -> bool {
        self.lhs <= self.rhs + 1e-9
    }
}

/// Replays every non-truncation sweep and compares `‖W‖_F` with
/// `√k(2r√r‖A‖² + ε)·‖U_[p+1] − U_[p]‖_F`, where mode `i` of `W` is
/// `2V^(i)Λ` at the new point minus `2V^(i)Λ^(i)` at the mixed point used by
/// the update, minus `2α(U^(i)_[p] − U^(i)_[p+1])` (`α = ε` for proximal
/// steps, 0 otherwise).
pub fn subdiff_bound_audit(a: &DenseTensor, trace: &SweepTrace) -> Result<Vec<SubdiffEntry>> {
    let k = trace.dims.len() as f64;
    let eps = trace.params.epsilon;
    let norm_sq = trace.tensor_norm * trace.tensor_norm;
    let mut out = Vec::new();
    for (idx, rec) in trace.records.iter().enumerate() {
        if rec.is_truncation() {
            continue;
        }
        let missing = || Error::Trace(format!("sweep {} lacks factor snapshots", rec.sweep));
        let prev = trace.factors_before(idx).ok_or_else(missing)?;
        let next = rec.factors.as_ref().ok_or_else(missing)?;
        let lambda = lambda_of(a, next)?;
        let mut mixed = prev.clone();
        let mut total = 0.0;
        for mode in 0..next.order() {
            let (v_new, _) = mode_matrices(a, next, mode)?;
            let (v_mid, l_mid) = mode_matrices(a, &mixed, mode)?;
            let mut w = &v_new.scale_columns(&lambda).scale(2.0) - &v_mid.scale_columns(&l_mid).scale(2.0);
            if rec.steps[mode] == ModeStep::Proximal {
                let d = prev.factor(mode).matrix() - next.factor(mode).matrix();
                w = &w - &d.scale(2.0 * eps);
            }
            total += w.dot(&w);
            mixed.set_factor(mode, next.factor(mode).clone());
        }
        let r = rec.rank as f64;
        out.push(SubdiffEntry {
            sweep: rec.sweep,
            lhs: total.sqrt(),
            rhs: k.sqrt() * (2.0 * r * r.sqrt() * norm_sq + eps) * rec.step_norm,
        });
    }
    Ok(out)
}

/// `N = Σ_i (r·n_i + r(r+1)/2)` and `τ = 1 − 1/(2k(6k−3)^(N−1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LojasiewiczExponent {
    pub n: u64,
    /// `2k`
    pub coefficient: u64,
    /// `6k − 3`
    pub base: u64,
    /// `N − 1`
    pub power: u64,
    /// `1 − τ`, computed in log space.
    pub gap: f64,
    pub tau: f64,
}

pub fn lojasiewicz_exponent(dims: &[usize], r: usize) -> Result<LojasiewiczExponent> {
    if r == 0 || dims.is_empty() {
        return Err(Error::Config("exponent needs r >= 1 and at least one mode".into()));
    }
    let k = dims.len() as u64;
    let r = r as u64;
    let n: u64 = dims.iter().map(|&ni| r * ni as u64 + r * (r + 1) / 2).sum();
    let coefficient = 2 * k;
    let base = 6 * k - 3;
    let power = n - 1;
    let gap = (-((coefficient as f64).ln() + power as f64 * (base as f64).ln())).exp();
    Ok(LojasiewiczExponent {
        n,
        coefficient,
        base,
        power,
        gap,
        tau: 1.0 - gap,
    })
}

/// Dimension `r[Σ n_i − k(r+1)/2 + 1]` of the set of odeco tensors of rank `r`.
pub fn manifold_dim(dims: &[usize], r: usize) -> Result<u64> {
    check_rank(dims, r, 0)?;
    let k = dims.len() as i128;
    let r = r as i128;
    let sum: i128 = dims.iter().map(|&n| n as i128).sum();
    let twice = r * (2 * sum - k * (r + 1) + 2);
    assert!(twice % 2 == 0, "dimension count must be integral");
    Ok((twice / 2) as u64)
}

/// `d_{n,r−1} < Π(n_i − r + 1)`: a generic local minimizer of rank at most
/// `r` has rank exactly `r`.
pub fn truncation_safe(dims: &[usize], r: usize) -> Result<bool> {
    check_rank(dims, r, 1)?;
    let lower = manifold_dim(dims, r - 1)? as u128;
    let product = dims
        .iter()
        .fold(1u128, |acc, &n| acc.saturating_mul((n - r + 1) as u128));
    Ok(lower < product)
}

fn check_rank(dims: &[usize], r: usize, min: usize) -> Result<()> {
    let max = dims.iter().copied().min().unwrap_or(0);
    if dims.is_empty() || r < min || r > max {
        return Err(Error::Config(format!("rank {r} outside {min}..={max}")));
    }
    Ok(())
}

/// Distance between a computed decomposition and a known one, up to column
/// order and signs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryError {
    /// `max_j | |λ_j| − |λ*_π(j)| |`
    pub lambda_error: f64,
    /// Largest sine of the angle between matched columns over all modes.
    pub subspace_error: f64,
    /// `matching[j]` is the truth column matched to computed column `j`.
    pub matching: Vec<usize>,
    pub rank_mismatch: bool,
}

pub fn recovery_error(
    factors: &FactorSet,
    lambda: &[f64],
    truth: &FactorSet,
    truth_lambda: &[f64],
) -> Result<RecoveryError> {
    if factors.dims() != truth.dims() {
        return Err(Error::Dimension("recovery against factors of other shape".into()));
    }
    if factors.rank() != truth.rank() || lambda.len() != truth_lambda.len() {
        return Ok(RecoveryError {
            lambda_error: f64::INFINITY,
            subspace_error: f64::INFINITY,
            matching: Vec::new(),
            rank_mismatch: true,
        });
    }
    let r = lambda.len();
    let correlation = |j: usize, l: usize| -> f64 {
        (0..factors.order())
            .map(|i| {
                let a = factors.factor(i).column(j);
                let b = truth.factor(i).column(l);
                a.iter().zip(&b).map(|(p, q)| p * q).sum::<f64>().abs()
            })
            .product()
    };
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&x, &y| lambda[y].abs().total_cmp(&lambda[x].abs()));
    let mut matching = vec![usize::MAX; r];
    let mut used = vec![false; r];
    for &j in &order {
        let gap = |l: usize| (lambda[j].abs() - truth_lambda[l].abs()).abs();
        let best = (0..r).filter(|&l| !used[l]).map(gap).fold(f64::INFINITY, f64::min);
        let tie = best + 1e-6 * (1.0 + lambda[j].abs());
        let pick = (0..r)
            .filter(|&l| !used[l] && gap(l) <= tie)
            .max_by(|&x, &y| correlation(j, x).total_cmp(&correlation(j, y)))
            .expect("an unmatched column remains");
        used[pick] = true;
        matching[j] = pick;
    }
    let mut lambda_error = 0.0f64;
    let mut subspace_error = 0.0f64;
    for (j, &l) in matching.iter().enumerate() {
        lambda_error = lambda_error.max((lambda[j].abs() - truth_lambda[l].abs()).abs());
        for i in 0..factors.order() {
            let a = factors.factor(i).column(j);
            let b = truth.factor(i).column(l);
            let c: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
            let sine = a.iter().zip(&b).map(|(p, q)| (p - c * q).powi(2)).sum::<f64>().sqrt();
            subspace_error = subspace_error.max(sine);
        }
    }
    Ok(RecoveryError {
        lambda_error,
        subspace_error,
        matching,
        rank_mismatch: false,
    })
}

/// Fitted convergence rate of the objective gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    /// `exp(slope)` of the log-linear fit; 0 when the gap vanishes at once.
    pub rho: f64,
    pub superlinear: bool,
    pub tail_len: usize,
    /// Root mean square residual of the log-linear fit.
    pub fit_residual: f64,
    /// Limit estimate used for the gaps.
    pub f_star: f64,
    pub lojasiewicz: Option<LojasiewiczExponent>,
}

pub const MIN_TAIL: usize = 10;

/// Rate fit over the sweeps after the last truncation of a tolerance-
/// terminated run. Each recorded iterate is re-evaluated at its exactly
/// orthonormal projection in double-double arithmetic, so gaps stay
/// resolvable far below the rounding level of `f`. Gaps below
/// `1e-24·max(1, f*)` are dropped.
pub fn fit_linear_rate(a: &DenseTensor, sol: &Solution) -> Result<RateReport> {
    if sol.termination != Termination::Converged {
        return Err(Error::Insufficient("rate fit needs a run that met the tolerances".into()));
    }
    let t = &sol.trace;
    let from = t.last_truncation().map_or(0, |p| p + 1);
    let values = (from..=t.records.len())
        .map(|idx| {
            let u = t
                .factors_before(idx)
                .ok_or_else(|| Error::Insufficient("rate fit needs recorded factors".into()))?;
            precise::objective(a, u)
        })
        .collect::<Result<Vec<_>>>()?;
    let last = *values.last().expect("at least one iterate");
    let gaps: Vec<f64> = values.iter().map(|v| (last - *v).to_f64()).collect();
    let mut report = fit_gaps(&gaps, last.to_f64(), 1e-24)?;
    report.lojasiewicz = Some(lojasiewicz_exponent(&t.dims, sol.factors.rank())?);
    Ok(report)
}

/// `f` after the last truncation (inclusive) up to the final sweep.
pub fn objective_values(trace: &SweepTrace) -> Vec<f64> {
    let mut values: Vec<f64> = std::iter::once(trace.initial_f)
        .chain(trace.records.iter().map(|r| r.f_value))
        .collect();
    if let Some(last) = trace.last_truncation() {
        values.drain(..=last);
    }
    values
}

/// Rate fit of a nondecreasing sequence given by its values. Gaps at or
/// below `1e-12·max(1, f*)` are treated as rounding noise.
pub fn fit_linear_rate_values(values: &[f64]) -> Result<RateReport> {
    let Some(&last) = values.last() else {
        return Err(Error::Insufficient("no objective values".into()));
    };
    let gaps: Vec<f64> = values.iter().map(|v| last - v).collect();
    fit_gaps(&gaps, last, 1e-12)
}

/// `gaps[p] = f_last − f_p`. The limit is `f_last` plus a geometric
/// extrapolation of the last three increments. With fewer than three gaps
/// above `rel_floor·max(1, f*)` the sequence is reported as superlinear
/// (`ρ = 0`); otherwise the last 30% of them (at least [`MIN_TAIL`]) are
/// fitted.
fn fit_gaps(gaps: &[f64], f_last: f64, rel_floor: f64) -> Result<RateReport> {
    let m = gaps.len();
    if m < 2 {
        return Err(Error::Insufficient("no increments".into()));
    }
    let mut extra = 0.0;
    if m >= 4 {
        let (d0, d2) = (gaps[m - 4] - gaps[m - 3], gaps[m - 2]);
        if d0 > 0.0 && d2 > 0.0 {
            let ratio = (d2 / d0).sqrt();
            if ratio < 1.0 {
                extra = d2 * ratio / (1.0 - ratio);
            }
        }
    }
    let f_star = f_last + extra;
    let floor = rel_floor * f_star.abs().max(1.0);
    let points: Vec<(f64, f64)> = gaps[..m - 1]
        .iter()
        .enumerate()
        .map(|(p, g)| (p as f64, g + extra))
        .filter(|(_, g)| *g > floor)
        .map(|(p, g)| (p, g.ln()))
        .collect();
    if points.len() < 3 {
        return Ok(RateReport {
            rho: 0.0,
            superlinear: true,
            tail_len: points.len(),
            fit_residual: 0.0,
            f_star,
            lojasiewicz: None,
        });
    }
    let tail_len = ((points.len() as f64 * 0.3).ceil() as usize).max(MIN_TAIL);
    if tail_len > points.len() {
        return Err(Error::Insufficient(format!(
            "{} resolvable gaps, need at least {MIN_TAIL}",
            points.len()
        )));
    }
    let tail = &points[points.len() - tail_len..];
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let fit_residual = (tail
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateReport {
        rho: slope.exp(),
        superlinear: false,
        tail_len,
        fit_residual,
        f_star,
        lojasiewicz: None,
    })
}
