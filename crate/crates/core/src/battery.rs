//! Seeded verification battery: each criterion runs a fixed family of
//! instances and checks one guarantee at a fixed tolerance.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::diagnostics::{
    fit_linear_rate, fit_linear_rate_values, g_value, kkt_residual, lojasiewicz_exponent, manifold_dim,
    recovery_error, riemannian_grad_g, subdiff_bound_audit, substep_decrease_audit, sufficient_decrease_audit,
    truncation_budget, truncation_safe, DECREASE_SLACK,
};
use crate::error::{Error, Result};
use crate::generate::{generate_tensor, GeneratorKind, GeneratorSpec};
use crate::linalg::{
    complete_orthonormal, complete_orthonormal_aligned, polar_error_gap, principal_angles, random_orthonormal_from,
    svd, symmetric_eigen, tangent_project, Matrix,
};
use crate::rng::{gaussian_matrix_from, gaussian_vec, stream, stream_id, PURPOSE_PROBE};
use crate::solver::{run, FactorSet, Init, ModeStep, ProximalMode, Solution, SolverConfig, SweepTrace, Termination};
use crate::tensor::DenseTensor;

/// Deliberate corruption used to check that a criterion can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// One sweep of the sufficient-decrease family gains only half of the
    /// guaranteed amount.
    Decrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatteryOptions {
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self { seed: 7, fault: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub instances: usize,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {:<20} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    check: fn(&BatteryOptions) -> Result<Outcome>,
}

struct Outcome {
    passed: bool,
    instances: usize,
    detail: String,
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "exact-recovery", check: exact_recovery },
    Criterion { id: 2, name: "sufficient-decrease", check: sufficient_decrease },
    Criterion { id: 3, name: "truncation-budget", check: truncation_family },
    Criterion { id: 4, name: "subdiff-bound", check: subdiff_bound },
    Criterion { id: 5, name: "kkt-limit", check: kkt_limit },
    Criterion { id: 6, name: "linear-rate", check: linear_rate },
    Criterion { id: 7, name: "polar-error-bound", check: polar_error_bound },
    Criterion { id: 8, name: "principal-angles", check: principal_angle_suite },
    Criterion { id: 9, name: "gradient-check", check: gradient_check },
    Criterion { id: 10, name: "apd-reduction", check: apd_reduction },
    Criterion { id: 11, name: "formulas", check: formulas },
];

pub fn criterion_names() -> Vec<&'static str> {
    CRITERIA.iter().map(|c| c.name).collect()
}

pub fn run_criterion(c: &Criterion, opts: &BatteryOptions) -> Result<CriterionReport> {
    let start = Instant::now();
    let o = (c.check)(opts)?;
    Ok(CriterionReport {
        id: c.id,
        name: c.name,
        passed: o.passed,
        instances: o.instances,
        detail: o.detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs the selected criteria (all when `only` is empty), in order.
pub fn run_battery(opts: &BatteryOptions, only: &[String]) -> Result<Vec<CriterionReport>> {
    for name in only {
        if !CRITERIA.iter().any(|c| c.name == name) {
            return Err(Error::Config(format!(
                "unknown criterion '{name}' (known: {})",
                criterion_names().join(", ")
            )));
        }
    }
    CRITERIA
        .iter()
        .filter(|c| only.is_empty() || only.iter().any(|n| n == c.name))
        .map(|c| run_criterion(c, opts))
        .collect()
}

fn family_seed(opts: &BatteryOptions, id: u64) -> u64 {
    opts.seed ^ (id << 48)
}

fn shape(i: usize) -> (Vec<usize>, usize) {
    match i % 3 {
        0 => (vec![4, 4, 4], 2),
        1 => (vec![3, 3, 3], 3),
        _ => (vec![5, 4, 3], 3),
    }
}

fn generated(kind: GeneratorKind, dims: Vec<usize>, rank: usize, seed: u64, repeat: usize) -> Result<(DenseTensor, Option<(FactorSet, Vec<f64>)>)> {
    let g = generate_tensor(&GeneratorSpec::new(kind, dims, rank, seed).with_noise(0.1), repeat as u32)?;
    Ok((g.tensor, g.truth))
}

/// Smallest true weight of the odeco generators is 0.5; this threshold
/// removes spurious columns without touching true ones.
const RECOVERY_KAPPA: f64 = 0.25;

fn exact_recovery(opts: &BatteryOptions) -> Result<Outcome> {
    let seed = family_seed(opts, 1);
    let start = Instant::now();
    let cfg = SolverConfig {
        kappa: Some(RECOVERY_KAPPA),
        ..SolverConfig::default()
    };
    let (mut worst_res, mut worst_l, mut worst_s) = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = 0;
    for i in 0..50 {
        let dims = if i % 2 == 0 { vec![4, 4, 4] } else { vec![5, 4, 3] };
        let rank = 2 + (i / 2) % 2;
        let (a, truth) = generated(GeneratorKind::OdecoExact, dims, rank, seed, i)?;
        let (tu, tl) = truth.expect("odeco truth");
        let sol = run(&a, rank, &cfg)?;
        let e = recovery_error(&sol.factors, &sol.lambda, &tu, &tl)?;
        worst_res = worst_res.max(sol.residual);
        worst_l = worst_l.max(e.lambda_error);
        worst_s = worst_s.max(e.subspace_error);
        if !(sol.residual <= 1e-8 && e.lambda_error <= 1e-8 && e.subspace_error <= 1e-7) {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Outcome {
        passed: failures == 0 && secs < 10.0,
        instances: 50,
        detail: format!(
            "failures={failures} max residual={worst_res:.2e} lambda err={worst_l:.2e} subspace err={worst_s:.2e} time={secs:.2}s"
        ),
    })
}

fn decrease_runs(opts: &BatteryOptions, id: u64, count: usize) -> Result<Vec<(ProximalMode, DenseTensor, Solution)>> {
    let seed = family_seed(opts, id);
    let mut out = Vec::with_capacity(2 * count);
    for i in 0..count {
        let kind = if i < count / 2 { GeneratorKind::Gaussian } else { GeneratorKind::OdecoNoisy };
        let (dims, r) = shape(i);
        let (a, _) = generated(kind, dims, r, seed, i)?;
        for mode in [ProximalMode::Classic, ProximalMode::Revised] {
            let cfg = SolverConfig {
                proximal_mode: mode,
                ..SolverConfig::default()
            };
            let sol = run(&a, r, &cfg)?;
            out.push((mode, a.clone(), sol));
        }
    }
    Ok(out)
}

fn inject_decrease_fault(trace: &mut SweepTrace) {
    let c = trace.params.decrease_constant().unwrap_or(0.0);
    if let Some(rec) = trace.records.iter_mut().find(|r| !r.is_truncation() && r.step_norm > 1e-3) {
        rec.delta_f = 0.5 * c * rec.step_norm * rec.step_norm - 2.0 * DECREASE_SLACK;
    }
}

fn sufficient_decrease(opts: &BatteryOptions) -> Result<Outcome> {
    let mut runs = decrease_runs(opts, 2, 100)?;
    if opts.fault == Some(Fault::Decrease) {
        inject_decrease_fault(&mut runs[0].2.trace);
    }
    let (mut sweeps, mut violations, mut sub_violations, mut sign_fixed) = (0, 0, 0, 0);
    let mut worst = f64::INFINITY;
    for (_, _, sol) in &runs {
        let t = &sol.trace;
        let c = t.params.decrease_constant().unwrap_or(0.0);
        for r in t.records.iter().filter(|r| !r.is_truncation()) {
            sweeps += 1;
            worst = worst.min(r.delta_f - c * r.step_norm * r.step_norm);
        }
        violations += sufficient_decrease_audit(t).len();
        sub_violations += substep_decrease_audit(t).len();
        sign_fixed += t
            .records
            .iter()
            .flat_map(|r| &r.steps)
            .filter(|s| **s == ModeStep::SignFixed)
            .count();
    }
    Ok(Outcome {
        passed: violations == 0,
        instances: runs.len(),
        detail: format!(
            "sweeps={sweeps} violations={violations} substep violations={sub_violations} min slack={worst:.2e} sign-fixed steps={sign_fixed}"
        ),
    })
}

fn monotone_after_last_truncation(t: &SweepTrace) -> bool {
    let from = t.last_truncation().map_or(0, |p| p + 1);
    t.records[from..].iter().all(|r| r.delta_f >= -DECREASE_SLACK)
}

fn truncation_family(opts: &BatteryOptions) -> Result<Outcome> {
    let seed = family_seed(opts, 3);
    let (mut fired, mut rank_ok, mut budget_ok, mut monotone) = (0, 0, 0, 0);
    let defective = 20;
    for i in 0..defective {
        let dims = if i % 2 == 0 { vec![4, 4, 4] } else { vec![5, 4, 3] };
        let rank = 2 + (i / 2) % 2;
        let (a, truth) = generated(GeneratorKind::DefectiveRank, dims, rank, seed, i)?;
        let true_rank = truth.expect("odeco truth").1.len();
        let cfg = SolverConfig {
            kappa: Some(RECOVERY_KAPPA),
            ..SolverConfig::default()
        };
        let sol = run(&a, rank, &cfg)?;
        let b = truncation_budget(&sol.trace);
        fired += usize::from(b.removed > 0);
        rank_ok += usize::from(sol.factors.rank() == true_rank);
        budget_ok += usize::from(b.loss <= rank as f64 * RECOVERY_KAPPA.powi(2) && b.loss <= b.budget + 1e-12);
        monotone += usize::from(monotone_after_last_truncation(&sol.trace));
    }
    let generic = 20;
    let (mut g_budget, mut g_monotone, mut g_fired) = (0, 0, 0);
    for i in 0..generic {
        let (dims, r) = shape(i);
        let (a, _) = generated(GeneratorKind::Gaussian, dims, r, seed ^ 1, i)?;
        let sol = run(&a, r, &SolverConfig::default())?;
        let b = truncation_budget(&sol.trace);
        let kappa = sol.trace.params.kappa;
        g_fired += usize::from(b.removed > 0);
        g_budget += usize::from(b.loss <= r as f64 * kappa * kappa && b.loss <= b.budget + 1e-12);
        g_monotone += usize::from(monotone_after_last_truncation(&sol.trace));
    }
    Ok(Outcome {
        passed: fired == defective
            && rank_ok == defective
            && budget_ok == defective
            && monotone == defective
            && g_budget == generic
            && g_monotone == generic,
        instances: defective + generic,
        detail: format!(
            "defective: fired={fired}/{defective} rank={rank_ok}/{defective} budget={budget_ok}/{defective} monotone={monotone}/{defective}; gaussian: fired={g_fired}/{generic} budget={g_budget}/{generic} monotone={g_monotone}/{generic}"
        ),
    })
}

fn subdiff_bound(opts: &BatteryOptions) -> Result<Outcome> {
    let seed = family_seed(opts, 4);
    let (mut audited, mut failed) = (0, 0);
    let mut max_ratio = 0.0f64;
    for i in 0..20 {
        let (kind, dims, r) = if i % 2 == 0 {
            (GeneratorKind::Gaussian, vec![4, 4, 4], 2)
        } else {
            (GeneratorKind::OdecoNoisy, vec![5, 4, 3], 3)
        };
        let (a, _) = generated(kind, dims, r, seed, i)?;
        let sol = run(&a, r, &SolverConfig::default())?;
        for e in subdiff_bound_audit(&a, &sol.trace)? {
            audited += 1;
            failed += usize::from(!e.passes());
            if e.rhs > 0.0 {
                max_ratio = max_ratio.max(e.lhs / e.rhs);
            }
        }
    }
    Ok(Outcome {
        passed: failed == 0 && audited > 0,
        instances: 20,
        detail: format!("audited sweeps={audited} failures={failed} max lhs/rhs={max_ratio:.2e}"),
    })
}

fn kkt_limit(opts: &BatteryOptions) -> Result<Outcome> {
    let runs = decrease_runs(opts, 5, 20)?;
    let (mut converged, mut failed) = (0, 0);
    let (mut worst_total, mut worst_sym) = (0.0f64, 0.0f64);
    for (_, a, sol) in &runs {
        if sol.termination != Termination::Converged {
            continue;
        }
        converged += 1;
        let rep = kkt_residual(a, &sol.factors)?;
        worst_total = worst_total.max(rep.total);
        worst_sym = worst_sym.max(rep.max_symmetry_defect());
        failed += usize::from(!(rep.total <= 1e-8 && rep.max_symmetry_defect() <= 1e-8));
    }
    Ok(Outcome {
        passed: failed == 0 && converged > 0,
        instances: runs.len(),
        detail: format!(
            "converged={converged}/{} failures={failed} max residual={worst_total:.2e} max symmetry defect={worst_sym:.2e}",
            runs.len()
        ),
    })
}

fn linear_rate(opts: &BatteryOptions) -> Result<Outcome> {
    let seed = family_seed(opts, 6);
    let (mut converged, mut failed) = (0, 0);
    let (mut max_rho, mut max_resid) = (0.0f64, 0.0f64);
    let mut errors = Vec::new();
    for i in 0..20 {
        let (a, _) = generated(GeneratorKind::Gaussian, vec![5, 5, 5], 2, seed, i)?;
        let sol = run(&a, 2, &SolverConfig::default())?;
        if sol.termination != Termination::Converged {
            failed += 1;
            continue;
        }
        converged += 1;
        match fit_linear_rate(&a, &sol) {
            Ok(rep) => {
                max_rho = max_rho.max(rep.rho);
                max_resid = max_resid.max(rep.fit_residual);
                failed += usize::from(!(rep.rho < 1.0 && rep.fit_residual < 0.1));
            }
            Err(e) => {
                failed += 1;
                errors.push(format!("run {i}: {e}"));
            }
        }
    }
    let mut calib = 0.0f64;
    for rho in [0.2, 0.5, 0.8, 0.95] {
        let len = ((1e-9f64).ln() / f64::ln(rho)).floor().min(80.0) as i32;
        let values: Vec<f64> = (0..=len).map(|p| 3.0 - 2.0 * rho.powi(p)).collect();
        let rep = fit_linear_rate_values(&values)?;
        calib = calib.max((rep.rho - rho).abs());
    }
    let mut detail = format!(
        "converged={converged}/20 failures={failed} max rho={max_rho:.4} max fit residual={max_resid:.3e} calibration err={calib:.1e}"
    );
    if !errors.is_empty() {
        detail.push_str(&format!(" ({})", errors.join("; ")));
    }
    Ok(Outcome {
        passed: failed == 0 && calib <= 1e-6,
        instances: 20,
        detail,
    })
}

fn probe(opts: &BatteryOptions, id: u64, i: usize) -> rand_chacha::ChaCha8Rng {
    stream(family_seed(opts, id), stream_id(i as u32, PURPOSE_PROBE))
}

fn polar_error_bound(opts: &BatteryOptions) -> Result<Outcome> {
    let (mut eq_fail, mut bound_fail) = (0, 0);
    let (mut worst_eq, mut worst_bound) = (0.0f64, f64::INFINITY);
    for i in 0..500 {
        let mut rng = probe(opts, 7, i);
        let m = rng.random_range(1..=6);
        let n = rng.random_range(1..=m);
        let p = rng.random_range(1..=6);
        let b = gaussian_matrix_from(&mut rng, m, p);
        let c = gaussian_matrix_from(&mut rng, n, p);
        let q = random_orthonormal_from(&mut rng, m, n)?;
        let g = polar_error_gap(&b, &c, &q)?;
        let eq = (g.lhs - g.rhs_eq).abs() / (1.0 + g.lhs.abs());
        worst_eq = worst_eq.max(eq);
        worst_bound = worst_bound.min(g.lhs - g.rhs_bound);
        eq_fail += usize::from(eq > 1e-8);
        bound_fail += usize::from(g.lhs < g.rhs_bound - 1e-10);
    }
    Ok(Outcome {
        passed: eq_fail == 0 && bound_fail == 0,
        instances: 500,
        detail: format!(
            "equality failures={eq_fail} (max rel gap {worst_eq:.1e}) bound failures={bound_fail} (min lhs-bound {worst_bound:.1e})"
        ),
    })
}

fn frob_sq(m: &Matrix) -> f64 {
    m.dot(m)
}

fn principal_angle_suite(opts: &BatteryOptions) -> Result<Outcome> {
    const TOL: f64 = 1e-8;
    let mut fails = [0usize; 4];
    let mut worst = [0.0f64; 4];
    for i in 0..200 {
        let mut rng = probe(opts, 8, i);
        let n = rng.random_range(2..=7);
        let r = rng.random_range(1..n);
        let u = random_orthonormal_from(&mut rng, n, r)?;
        let v = random_orthonormal_from(&mut rng, n, r)?;
        let utv = u.tr_matmul(&v)?;

        // Cosines of the angles are the square roots of the eigenvalues of
        // UᵀV VᵀU; complements share the nonzero angles.
        let angles = principal_angles(&u, &v)?;
        let eig = symmetric_eigen(&utv.matmul(&utv.transpose())?)?;
        let mut cos_sq: Vec<f64> = eig.values.iter().map(|e| e.clamp(0.0, 1.0)).collect();
        cos_sq.sort_by(|a, b| b.total_cmp(a));
        let mut err = angles
            .iter()
            .zip(&cos_sq)
            .map(|(t, c2)| (t.cos().powi(2) - c2).abs())
            .fold(0.0f64, f64::max);
        if 2 * r <= n {
            let uc = complete_orthonormal(&u);
            let vc = complete_orthonormal(&v);
            let big = principal_angles(&uc, &vc)?;
            let nonzero = |a: &[f64]| -> Vec<f64> { a.iter().copied().filter(|t| *t > 1e-6).collect() };
            let (x, y) = (nonzero(&angles), nonzero(&big));
            if x.len() != y.len() {
                err = f64::INFINITY;
            } else {
                for (p, q) in x.iter().zip(&y) {
                    err = err.max((p.sin() - q.sin()).abs());
                }
            }
        }
        worst[0] = worst[0].max(err);
        fails[0] += usize::from(err > TOL);

        let sigma_sum: f64 = svd(&utv)?.sigma.iter().sum();
        let gap = u.dot(&v) - sigma_sum;
        worst[1] = worst[1].max(gap);
        fails[1] += usize::from(gap > TOL);

        let gap = frob_sq(&(&utv - &Matrix::identity(r))) - frob_sq(&(u.matrix() - v.matrix()));
        worst[2] = worst[2].max(gap);
        fails[2] += usize::from(gap > TOL);

        let full = random_orthonormal_from(&mut rng, n, n)?;
        let v1 = full.select_columns(&(0..r).collect::<Vec<_>>());
        let v2 = full.select_columns(&(r..n).collect::<Vec<_>>());
        let w = complete_orthonormal_aligned(&u, &v2)?;
        let p = u.hstack(&w)?;
        let gap = frob_sq(&(&p - full.matrix())) - 2.0 * frob_sq(&(u.matrix() - v1.matrix()));
        worst[3] = worst[3].max(gap);
        fails[3] += usize::from(gap > TOL);
    }
    Ok(Outcome {
        passed: fails.iter().all(|f| *f == 0),
        instances: 800,
        detail: format!(
            "angles/cos fails={} (err {:.1e}) trace ineq fails={} (max {:.1e}) UtV-I fails={} (max {:.1e}) completion fails={} (max {:.1e})",
            fails[0], worst[0], fails[1], worst[1], fails[2], worst[2], fails[3], worst[3]
        ),
    })
}

fn gradient_check(opts: &BatteryOptions) -> Result<Outcome> {
    let h = 1e-5;
    let dims = [3usize, 4, 5];
    let r = 2;
    let mut worst = 0.0f64;
    let mut fails = 0;
    for i in 0..20 {
        let mut rng = probe(opts, 9, i);
        let len = dims.iter().product();
        let a = DenseTensor::new(dims.to_vec(), gaussian_vec(&mut rng, len))?;
        let u = FactorSet::new(
            dims.iter()
                .map(|&n| random_orthonormal_from(&mut rng, n, r))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let x = gaussian_vec(&mut rng, r);
        let grad = riemannian_grad_g(&a, &u, &x)?;
        for _ in 0..20 {
            let ds = u
                .factors()
                .iter()
                .map(|f| tangent_project(f, &gaussian_matrix_from(&mut rng, f.rows(), r)))
                .collect::<Result<Vec<_>>>()?;
            let dx = gaussian_vec(&mut rng, r);
            let at = |t: f64| -> Result<f64> {
                let fs: Vec<Matrix> = u.factors().iter().zip(&ds).map(|(f, d)| f.matrix() + &d.scale(t)).collect();
                let xs: Vec<f64> = x.iter().zip(&dx).map(|(p, q)| p + t * q).collect();
                g_value(&a, &fs, &xs)
            };
            let fd = (at(h)? - at(-h)?) / (2.0 * h);
            let exact = grad.modes.iter().zip(&ds).map(|(p, q)| p.dot(q)).sum::<f64>()
                + grad.x.iter().zip(&dx).map(|(p, q)| p * q).sum::<f64>();
            let rel = (fd - exact).abs() / exact.abs().max(1e-3);
            worst = worst.max(rel);
            fails += usize::from(rel > 1e-5);
        }
    }
    Ok(Outcome {
        passed: fails == 0,
        instances: 400,
        detail: format!("failures={fails} max relative error={worst:.2e}"),
    })
}

fn apd_reduction(opts: &BatteryOptions) -> Result<Outcome> {
    let seed = family_seed(opts, 10);
    let mut clean = 0;
    let mut early = 0;
    for i in 0..40 {
        let dims = if i % 2 == 0 { vec![4, 4, 4] } else { vec![5, 4, 3] };
        let rank = 2 + (i / 2) % 2;
        let (a, _) = generated(GeneratorKind::OdecoExact, dims, rank, seed, i)?;
        let cfg = SolverConfig {
            init: Init::Random { seed: seed.wrapping_add(i as u64) },
            ..SolverConfig::default()
        };
        let sol = run(&a, rank, &cfg)?;
        let recs = &sol.trace.records;
        let half = recs.len() / 2;
        let late = recs[half..].iter().any(|r| r.proximal_mask() != 0);
        clean += usize::from(!late);
        early += usize::from(recs[..half].iter().any(|r| r.proximal_mask() != 0));
    }
    Ok(Outcome {
        passed: clean * 100 >= 95 * 40,
        instances: 40,
        detail: format!("runs without late proximal steps={clean}/40 (runs with early ones={early})"),
    })
}

fn formulas(_: &BatteryOptions) -> Result<Outcome> {
    let e = lojasiewicz_exponent(&[2, 2, 2], 1)?;
    let tau_gap = 1.0 / (6.0 * 15f64.powi(8));
    let checks = [
        ("manifold_dim((2,2,2),1)=4", manifold_dim(&[2, 2, 2], 1)? == 4),
        ("manifold_dim((3,3,3),2)=11", manifold_dim(&[3, 3, 3], 2)? == 11),
        ("truncation_safe((4,4,4),2)", truncation_safe(&[4, 4, 4], 2)?),
        ("N((2,2,2),1)=9", e.n == 9),
        ("tau gap=1/(6*15^8)", (e.gap - tau_gap).abs() <= 1e-12 * tau_gap),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Ok(Outcome {
        passed: failed.is_empty(),
        instances: checks.len(),
        detail: if failed.is_empty() {
            checks.iter().map(|c| c.0).collect::<Vec<_>>().join(", ")
        } else {
            format!("failed: {}", failed.join(", "))
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criterion_rejected() {
        assert!(run_battery(&BatteryOptions::default(), &["nope".into()]).is_err());
    }

    #[test]
    fn filtering_and_formulas() {
        let reps = run_battery(&BatteryOptions::default(), &["formulas".into()]).unwrap();
        assert_eq!(reps.len(), 1);
        assert!(reps[0].passed);
        assert!(reps[0].line().starts_with("PASS [11]"));
    }
}
