use iapd::battery::{criterion_names, run_battery, BatteryOptions};
use iapd::diagnostics;
use iapd::generate::{generate_tensor, GeneratorSpec};
use iapd::solver::{self, Init, ProximalMode, SolverConfig, Termination};
use iapd::{DenseTensor, Matrix};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type Rows = Vec<Vec<f64>>;
type Truth = (Vec<Rows>, Vec<f64>);

fn rows(m: &Matrix) -> Rows {
    m.to_rows()
}

/// Dense tensor, row-major with the last index fastest.
#[pyclass(name = "Tensor", module = "pyiapd", frozen)]
pub struct PyTensor {
    pub inner: DenseTensor,
}

#[pymethods]
impl PyTensor {
    #[new]
    fn new(dims: Vec<usize>, data: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: DenseTensor::new(dims, data).map_err(err)?,
        })
    }

    /// Seeded test tensor; returns `(tensor, truth)` where `truth` is
    /// `(factors, weights)` for the odeco kinds and `None` otherwise.
    #[staticmethod]
    #[pyo3(signature = (kind, dims, rank=1, noise=0.0, seed=0, repeat=0))]
    fn generate(
        kind: &str,
        dims: Vec<usize>,
        rank: usize,
        noise: f64,
        seed: u64,
        repeat: u32,
    ) -> PyResult<(Self, Option<Truth>)> {
        let kind = serde_kind(kind)?;
        let spec = GeneratorSpec::new(kind, dims, rank, seed).with_noise(noise);
        let g = generate_tensor(&spec, repeat).map_err(err)?;
        let truth = g
            .truth
            .map(|(u, l)| (u.factors().iter().map(|f| rows(f.matrix())).collect(), l));
        Ok((Self { inner: g.tensor }, truth))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: iapd::io::read_tensor(path).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        iapd::io::write_tensor(path, &self.inner).map_err(err)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn __getitem__(&self, idx: Vec<usize>) -> PyResult<f64> {
        if idx.len() != self.inner.order() || idx.iter().zip(self.inner.dims()).any(|(i, n)| i >= n) {
            return Err(pyo3::exceptions::PyIndexError::new_err(format!("index {idx:?} out of range")));
        }
        Ok(self.inner.get(&idx))
    }

    fn __repr__(&self) -> String {
        format!("Tensor(dims={:?}, norm={:.6})", self.inner.dims(), self.inner.norm())
    }
}

fn serde_kind(kind: &str) -> PyResult<iapd::generate::GeneratorKind> {
    match kind {
        "gaussian" => Ok(iapd::generate::GeneratorKind::Gaussian),
        "odeco_exact" => Ok(iapd::generate::GeneratorKind::OdecoExact),
        "odeco_noisy" => Ok(iapd::generate::GeneratorKind::OdecoNoisy),
        "defective_rank" => Ok(iapd::generate::GeneratorKind::DefectiveRank),
        other => Err(err(format!("unknown generator kind '{other}'"))),
    }
}

/// Result of [`decompose`].
#[pyclass(name = "Solution", module = "pyiapd", frozen)]
pub struct PySolution {
    pub inner: solver::Solution,
    tensor: DenseTensor,
}

#[pymethods]
impl PySolution {
    /// Nonnegative weights in nonincreasing order.
    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.lambda.clone()
    }

    /// One `n_i x r` factor per mode, as lists of rows.
    #[getter]
    fn factors(&self) -> Vec<Rows> {
        self.inner.factors.factors().iter().map(|f| rows(f.matrix())).collect()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective()
    }

    #[getter]
    fn sweeps(&self) -> usize {
        self.inner.sweeps()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.factors.rank()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.termination == Termination::Converged
    }

    #[getter]
    fn termination(&self) -> &'static str {
        match self.inner.termination {
            Termination::Converged => "converged",
            Termination::MaxSweeps => "max_sweeps",
        }
    }

    fn kkt_residual(&self) -> PyResult<f64> {
        Ok(diagnostics::kkt_residual(&self.tensor, &self.inner.factors).map_err(err)?.total)
    }

    /// Per-sweep records with the columns of the CSV trace.
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .trace
            .records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("sweep", r.sweep)?;
                d.set_item("f", r.f_value)?;
                d.set_item("delta_f", r.delta_f)?;
                d.set_item("step_norm", r.step_norm)?;
                d.set_item("kkt_residual", r.kkt_residual)?;
                d.set_item("sigma_min", r.sigma_min.clone())?;
                d.set_item("proximal_flags", r.proximal_mask())?;
                d.set_item("truncated", r.truncated.clone())?;
                Ok(d)
            })
            .collect()
    }

    /// Fitted rate of the objective gap: `(rho, fit_residual, superlinear)`.
    fn linear_rate(&self) -> PyResult<(f64, f64, bool)> {
        let r = diagnostics::fit_linear_rate(&self.tensor, &self.inner).map_err(err)?;
        Ok((r.rho, r.fit_residual, r.superlinear))
    }

    /// Sweeps violating the per-sweep sufficient decrease, as `(sweep, gain, required)`.
    fn decrease_violations(&self) -> Vec<(usize, f64, f64)> {
        diagnostics::sufficient_decrease_audit(&self.inner.trace)
            .into_iter()
            .map(|v| (v.sweep, v.gain, v.required))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(rank={}, weights={:?}, residual={:.3e}, sweeps={}, {})",
            self.rank(),
            self.inner.lambda,
            self.inner.residual,
            self.inner.sweeps(),
            self.termination()
        )
    }
}

/// Rank-`rank` orthogonal approximation of `tensor`.
#[pyfunction]
#[pyo3(signature = (
    tensor, rank, *, epsilon=None, kappa=None, tau=None, mode="classic", max_sweeps=2000,
    step_tol=1e-10, kkt_tol=1e-8, seed=None, truncation=true
))]
#[allow(clippy::too_many_arguments)]
fn decompose(
    tensor: &PyTensor,
    rank: usize,
    epsilon: Option<f64>,
    kappa: Option<f64>,
    tau: Option<f64>,
    mode: &str,
    max_sweeps: usize,
    step_tol: f64,
    kkt_tol: f64,
    seed: Option<u64>,
    truncation: bool,
) -> PyResult<PySolution> {
    let config = SolverConfig {
        epsilon,
        kappa,
        tau,
        proximal_mode: mode.parse::<ProximalMode>().map_err(err)?,
        truncation_enabled: truncation,
        max_sweeps,
        step_tol,
        kkt_tol,
        init: seed.map_or(Init::Hosvd, |seed| Init::Random { seed }),
        record_factors: true,
    };
    let inner = solver::run(&tensor.inner, rank, &config).map_err(err)?;
    Ok(PySolution {
        inner,
        tensor: tensor.inner.clone(),
    })
}

/// Polar decomposition `M = U·H` of a tall matrix given as rows.
#[pyfunction]
fn polar(m: Rows) -> PyResult<(Rows, Rows)> {
    let m = Matrix::from_rows(&m).map_err(err)?;
    let p = iapd::linalg::polar(&m).map_err(err)?;
    Ok((rows(p.u.matrix()), rows(&p.h)))
}

#[pyfunction]
fn manifold_dim(dims: Vec<usize>, rank: usize) -> PyResult<u64> {
    diagnostics::manifold_dim(&dims, rank).map_err(err)
}

#[pyfunction]
fn truncation_safe(dims: Vec<usize>, rank: usize) -> PyResult<bool> {
    diagnostics::truncation_safe(&dims, rank).map_err(err)
}

#[pyfunction]
fn criteria() -> Vec<&'static str> {
    criterion_names()
}

/// Runs the invariant battery; returns `(name, passed, detail)` per criterion.
#[pyfunction]
#[pyo3(signature = (only=None, seed=7))]
fn verify(only: Option<Vec<String>>, seed: u64) -> PyResult<Vec<(String, bool, String)>> {
    let opts = BatteryOptions { seed, fault: None };
    let reports = run_battery(&opts, &only.unwrap_or_default()).map_err(err)?;
    Ok(reports.into_iter().map(|r| (r.name.to_string(), r.passed, r.detail)).collect())
}

#[pymodule]
pub fn pyiapd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(polar, m)?)?;
    m.add_function(wrap_pyfunction!(manifold_dim, m)?)?;
    m.add_function(wrap_pyfunction!(truncation_safe, m)?)?;
    m.add_function(wrap_pyfunction!(criteria, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
