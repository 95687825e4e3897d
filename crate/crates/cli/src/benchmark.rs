use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use iapd::diagnostics::{fit_linear_rate, kkt_residual, sufficient_decrease_audit, truncation_budget, RateReport};
use iapd::generate::{generate_tensor, GeneratorSpec};
use iapd::solver::{run as solve, ProximalMode, Solution, SolverConfig, Termination};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{trace_csv, write, write_json, Summary};
use crate::BenchmarkArgs;

fn default_name() -> String {
    "experiment".into()
}

fn default_repeats() -> u32 {
    1
}

fn default_modes() -> Vec<ProximalMode> {
    vec![ProximalMode::Classic, ProximalMode::Revised, ProximalMode::None]
}

/// Experiment description; unknown keys are rejected at every level.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub generator: GeneratorSpec,
    /// Target rank of the decomposition.
    pub rank: usize,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    /// Every repeat is run once per mode; overrides `solver.proximal_mode`.
    #[serde(default = "default_modes")]
    pub modes: Vec<ProximalMode>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Used when neither `--out` nor the environment names a directory.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        let min_dim = *self.generator.dims.iter().min().expect("validated dims");
        if self.rank == 0 || self.rank > min_dim {
            bail!("rank {} outside 1..={min_dim} for dims {:?}", self.rank, self.generator.dims);
        }
        if self.repeats == 0 {
            bail!("repeats must be at least 1");
        }
        if self.modes.is_empty() {
            bail!("modes must not be empty");
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            bail!("invalid experiment name '{}'", self.name);
        }
        Ok(())
    }
}

/// `None` when an audit does not apply to the run.
#[derive(Debug, Clone, Serialize)]
struct Audits {
    sufficient_decrease: Option<bool>,
    monotone_after_truncation: bool,
    truncation_budget: bool,
    kkt: Option<bool>,
    late_proximal_free: bool,
    rate: Option<bool>,
}

impl Audits {
    fn all_pass(&self) -> bool {
        [self.sufficient_decrease, self.kkt, self.rate]
            .into_iter()
            .flatten()
            .chain([self.monotone_after_truncation, self.truncation_budget])
            .all(|v| v)
    }
}

#[derive(Debug, Clone, Serialize)]
struct RunRecord {
    repeat: u32,
    mode: ProximalMode,
    summary: Summary,
    audits: Audits,
    rate: Option<RateReport>,
    seconds: f64,
    trace: String,
}

#[derive(Debug, Clone, Serialize)]
struct ModeAggregate {
    mode: ProximalMode,
    runs: usize,
    converged: usize,
    max_sweeps_reached: usize,
    median_sweeps: f64,
    rho: Vec<f64>,
    rho_median: Option<f64>,
    rho_max: Option<f64>,
    superlinear: usize,
    truncation_frequency: f64,
    proximal_sweep_frequency: f64,
    late_proximal_free: usize,
    audit_failures: usize,
}

#[derive(Serialize)]
struct Aggregate<'a> {
    config: &'a ExperimentConfig,
    modes: Vec<ModeAggregate>,
    runs: Vec<RunRecord>,
}

fn audit(a: &iapd::DenseTensor, sol: &Solution, kkt_tol: f64) -> Result<(Audits, Option<RateReport>)> {
    let t = &sol.trace;
    let from = t.last_truncation().map_or(0, |p| p + 1);
    let budget = truncation_budget(t);
    let late = &t.records[t.records.len() / 2..];
    let converged = sol.termination == Termination::Converged;
    let rate = if converged { fit_linear_rate(a, sol).ok() } else { None };
    let audits = Audits {
        sufficient_decrease: t
            .params
            .decrease_constant()
            .map(|_| sufficient_decrease_audit(t).is_empty()),
        monotone_after_truncation: t.records[from..].iter().all(|r| r.delta_f >= -1e-9),
        truncation_budget: budget.removed <= t.initial_rank
            && budget.loss <= budget.budget + 1e-9
            && (budget.removed == 0 || budget.budget < t.initial_f),
        kkt: converged.then(|| kkt_residual(a, &sol.factors).map(|k| k.passes(kkt_tol))).transpose()?,
        late_proximal_free: late.iter().all(|r| r.proximal_mask() == 0),
        rate: rate.as_ref().map(|r| r.superlinear || (r.rho < 1.0 && r.fit_residual < 0.1)),
    };
    Ok((audits, rate))
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { 0.5 * (v[m - 1] + v[m]) } else { v[m] })
}

fn aggregate(mode: ProximalMode, runs: &[&RunRecord]) -> ModeAggregate {
    let rho: Vec<f64> = runs.iter().filter_map(|r| r.rate.as_ref()).filter(|r| !r.superlinear).map(|r| r.rho).collect();
    let total_sweeps: usize = runs.iter().map(|r| r.summary.sweeps).sum();
    let n = runs.len() as f64;
    ModeAggregate {
        mode,
        runs: runs.len(),
        converged: runs.iter().filter(|r| r.summary.termination == Termination::Converged).count(),
        max_sweeps_reached: runs.iter().filter(|r| r.summary.termination == Termination::MaxSweeps).count(),
        median_sweeps: median(runs.iter().map(|r| r.summary.sweeps as f64).collect()).unwrap_or(0.0),
        rho_median: median(rho.clone()),
        rho_max: rho.iter().copied().reduce(f64::max),
        rho,
        superlinear: runs.iter().filter(|r| r.rate.as_ref().is_some_and(|x| x.superlinear)).count(),
        truncation_frequency: runs.iter().filter(|r| !r.summary.truncation_sweeps.is_empty()).count() as f64 / n,
        proximal_sweep_frequency: runs.iter().map(|r| r.summary.proximal_sweeps).sum::<usize>() as f64
            / total_sweeps.max(1) as f64,
        late_proximal_free: runs.iter().filter(|r| r.audits.late_proximal_free).count(),
        audit_failures: runs.iter().filter(|r| !r.audits.all_pass()).count(),
    }
}

pub fn run(args: &BenchmarkArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.input.display()))?;
    config.validate()?;
    let root = args
        .out
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(crate::DEFAULT_OUT_DIR))
        .join(&config.name);

    let jobs: Vec<(ProximalMode, u32)> = config
        .modes
        .iter()
        .flat_map(|&m| (0..config.repeats).map(move |i| (m, i)))
        .collect();
    let mut records = jobs
        .par_iter()
        .map(|&(mode, repeat)| -> Result<RunRecord> {
            let start = Instant::now();
            let g = generate_tensor(&config.generator, repeat)?;
            let solver = SolverConfig {
                proximal_mode: mode,
                record_factors: true,
                ..config.solver.clone()
            };
            let sol = solve(&g.tensor, config.rank, &solver)
                .with_context(|| format!("mode {mode}, repeat {repeat}"))?;
            let (audits, rate) = audit(&g.tensor, &sol, solver.kkt_tol)?;
            let rel = format!("{mode}/run_{repeat:04}.csv");
            write(&root.join(&rel), trace_csv(&sol.trace)?)?;
            Ok(RunRecord {
                repeat,
                mode,
                summary: Summary::new(&sol),
                audits,
                rate,
                seconds: start.elapsed().as_secs_f64(),
                trace: rel,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| (config.modes.iter().position(|m| *m == r.mode), r.repeat));

    let modes: Vec<ModeAggregate> = config
        .modes
        .iter()
        .map(|&m| aggregate(m, &records.iter().filter(|r| r.mode == m).collect::<Vec<_>>()))
        .collect();
    println!("{:<8} {:>5} {:>9} {:>8} {:>9} {:>9} {:>10} {:>10} {:>7}", "mode", "runs", "converged", "sweeps", "rho_med", "rho_max", "truncated", "proximal", "audits");
    for m in &modes {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        println!(
            "{:<8} {:>5} {:>9} {:>8} {:>9} {:>9} {:>9.0}% {:>9.2}% {:>7}",
            m.mode.to_string(),
            m.runs,
            m.converged,
            m.median_sweeps,
            fmt(m.rho_median),
            fmt(m.rho_max),
            100.0 * m.truncation_frequency,
            100.0 * m.proximal_sweep_frequency,
            if m.audit_failures == 0 { "ok".to_string() } else { format!("{} bad", m.audit_failures) }
        );
    }
    let report = Aggregate {
        config: &config,
        modes,
        runs: records,
    };
    write_json(&root.join("aggregate.json"), &report)?;
    if let Some(path) = &args.out.json_report {
        write_json(path, &report)?;
    }
    println!("wrote {}", root.display());
    Ok(ExitCode::SUCCESS)
}
