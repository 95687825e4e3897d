use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &std::ffi::CStr) {
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(pyiapd::pyiapd)(py);
        let globals = PyDict::new(py);
        globals.set_item("pyiapd", module).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.display(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn decompose_from_python() {
    run(c"
t, truth = pyiapd.Tensor.generate('odeco_exact', [4, 4, 4], rank=2, seed=3)
factors, weights = truth
assert t.dims == [4, 4, 4]
assert len(factors) == 3 and len(factors[0]) == 4 and len(factors[0][0]) == 2
sol = pyiapd.decompose(t, 2, kappa=0.25)
assert sol.converged and sol.termination == 'converged'
assert sol.residual <= 1e-8, sol.residual
assert all(abs(a - b) <= 1e-8 for a, b in zip(sol.weights, weights))
assert sol.kkt_residual() <= 1e-8
assert sol.decrease_violations() == []
rows = sol.trace()
assert rows[-1]['sweep'] == sol.sweeps and len(rows[0]['sigma_min']) == 3
");
}

#[test]
fn helpers_and_errors() {
    run(c"
assert pyiapd.manifold_dim([3, 3, 3], 2) == 11
assert pyiapd.truncation_safe([4, 4, 4], 2)
u, h = pyiapd.polar([[2.0, 0.0], [0.0, 3.0], [0.0, 0.0]])
assert abs(u[0][0] - 1.0) < 1e-12 and abs(h[1][1] - 3.0) < 1e-12
assert 'polar-error-bound' in pyiapd.criteria()
[(name, passed, _)] = pyiapd.verify(only=['formulas'])
assert name == 'formulas' and passed
t = pyiapd.Tensor([2, 2, 2], [1.0] * 8)
assert t[1, 0, 1] == 1.0
for bad in (lambda: pyiapd.Tensor([2, 2], [1.0]),
            lambda: pyiapd.decompose(t, 3),
            lambda: pyiapd.decompose(t, 1, mode='fast'),
            lambda: pyiapd.Tensor.generate('bogus', [2, 2, 2]),
            lambda: pyiapd.verify(only=['nope'])):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError('expected ValueError')
");
}
