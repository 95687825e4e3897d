use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use iapd::solver::{Parameters, Solution, SweepTrace, Termination};
use iapd::Matrix;
use serde::Serialize;

/// Shortest decimal that parses back to the same value.
fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Columns: `sweep, f, delta_f, step_norm, kkt_residual,
/// sigma_min_mode_1..k, proximal_flags, truncated_indices`. The flags are a
/// bitmask with bit `i − 1` set when mode `i` took a proximal step; truncated
/// column indices are 1-based and separated by `;`.
pub fn trace_csv(trace: &SweepTrace) -> Result<Vec<u8>> {
    let k = trace.dims.len();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["sweep", "f", "delta_f", "step_norm", "kkt_residual"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=k).map(|i| format!("sigma_min_mode_{i}")));
    header.push("proximal_flags".into());
    header.push("truncated_indices".into());
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![
            r.sweep.to_string(),
            num(r.f_value),
            num(r.delta_f),
            num(r.step_norm),
            num(r.kkt_residual),
        ];
        row.extend(r.sigma_min.iter().map(|s| num(*s)));
        row.push(r.proximal_mask().to_string());
        row.push(
            r.truncated
                .iter()
                .map(|j| (j + 1).to_string())
                .collect::<Vec<_>>()
                .join(";"),
        );
        w.write_record(&row)?;
    }
    w.into_inner().context("flushing trace")
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub dims: Vec<usize>,
    pub initial_rank: usize,
    pub rank: usize,
    pub f: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub lambda: Vec<f64>,
    pub sweeps: usize,
    pub termination: Termination,
    pub truncation_sweeps: Vec<usize>,
    pub proximal_sweeps: usize,
    pub params: Parameters,
}

impl Summary {
    pub fn new(sol: &Solution) -> Self {
        let t = &sol.trace;
        Self {
            dims: t.dims.clone(),
            initial_rank: t.initial_rank,
            rank: sol.factors.rank(),
            f: sol.objective(),
            residual: sol.residual,
            relative_residual: sol.residual / t.tensor_norm,
            lambda: sol.lambda.clone(),
            sweeps: sol.sweeps(),
            termination: sol.termination,
            truncation_sweeps: t.records.iter().filter(|r| r.is_truncation()).map(|r| r.sweep).collect(),
            proximal_sweeps: t.records.iter().filter(|r| r.proximal_mask() != 0).count(),
            params: t.params,
        }
    }
}

pub fn exit_code(t: Termination) -> std::process::ExitCode {
    match t {
        Termination::Converged => std::process::ExitCode::SUCCESS,
        Termination::MaxSweeps => std::process::ExitCode::from(2),
    }
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text)
}

/// `factor_<i>.txt` per mode, `lambda.txt` as an `r x 1` matrix and
/// `trace.csv`.
pub fn write_solution(dir: &Path, sol: &Solution) -> Result<()> {
    for (i, f) in sol.factors.factors().iter().enumerate() {
        write(&dir.join(format!("factor_{}.txt", i + 1)), iapd::io::matrix_to_string(f.matrix()))?;
    }
    let lambda = Matrix::from_vec(sol.lambda.len(), 1, sol.lambda.clone())?;
    write(&dir.join("lambda.txt"), iapd::io::matrix_to_string(&lambda))?;
    write(&dir.join("trace.csv"), trace_csv(&sol.trace)?)
}
