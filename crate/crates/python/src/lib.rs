//! Python bindings for the stochastic Galerkin traffic solvers.
//!
//! The module exposes the chaos-expansion algebra (basis construction,
//! projection, reconstruction, Galerkin products and solves, hyperbolicity
//! certification) plus the SG-LWR finite-volume solver and the Monte Carlo
//! cross-check. Coefficient vectors are plain Python lists of floats.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sgtraffic::chaos::{check_hyperbolicity, HYPERBOLICITY_TOL};
use sgtraffic::macroscale::{BoundaryMode, MacroGrid, MacroSolver};
use sgtraffic::mc::{compare, mc_lwr_riemann, COMPARE_ATOL};
use sgtraffic::{Basis, BasisFamily, BasisSpec, GalerkinVector, TripleProductTensor};

fn to_py_err(e: sgtraffic::SgError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_boundary(s: &str) -> PyResult<BoundaryMode> {
    match s {
        "outflow" => Ok(BoundaryMode::Outflow),
        "periodic" => Ok(BoundaryMode::Periodic),
        other => Err(PyValueError::new_err(format!(
            "unknown boundary mode '{other}' (expected 'outflow' or 'periodic')"
        ))),
    }
}

/// A chaos basis together with its precomputed triple-product tensor.
#[pyclass(name = "Basis")]
struct PyBasis {
    basis: Basis,
    tensor: TripleProductTensor,
}

impl PyBasis {
    fn coeffs(&self, c: &[f64]) -> PyResult<GalerkinVector> {
        if c.len() != self.basis.modes() {
            return Err(PyValueError::new_err(format!(
                "expected {} coefficients, got {}",
                self.basis.modes(),
                c.len()
            )));
        }
        Ok(GalerkinVector::from_slice(c))
    }
}

#[pymethods]
impl PyBasis {
    /// Basis("haar" | "legendre", order K); the expansion keeps K + 1 modes.
    #[new]
    fn new(family: &str, order: usize) -> PyResult<Self> {
        let fam = BasisFamily::parse(family).ok_or_else(|| {
            PyValueError::new_err(format!(
                "unknown basis family '{family}' (expected 'haar' or 'legendre')"
            ))
        })?;
        let basis = Basis::build(BasisSpec::new(fam, order)).map_err(to_py_err)?;
        let tensor = TripleProductTensor::compute(&basis);
        Ok(Self { basis, tensor })
    }

    #[getter]
    fn family(&self) -> &'static str {
        match self.basis.spec().family {
            BasisFamily::Haar => "haar",
            BasisFamily::Legendre => "legendre",
        }
    }

    #[getter]
    fn order(&self) -> usize {
        self.basis.spec().order
    }

    #[getter]
    fn modes(&self) -> usize {
        self.basis.modes()
    }

    fn quad_nodes(&self) -> Vec<f64> {
        self.basis.quad_nodes().to_vec()
    }

    fn quad_weights(&self) -> Vec<f64> {
        self.basis.quad_weights().to_vec()
    }

    /// Projects a Python callable f(xi) onto the basis by quadrature.
    fn project(&self, f: Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
        let m = self.basis.modes();
        let mut coeffs = vec![0.0; m];
        for (q, &x) in self.basis.quad_nodes().iter().enumerate() {
            let fx: f64 = f.call1((x,))?.extract()?;
            if !fx.is_finite() {
                return Err(PyValueError::new_err(format!(
                    "projected function returned {fx} at quadrature node xi = {x}"
                )));
            }
            let w = self.basis.quad_weights()[q];
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c += w * fx * self.basis.value_at_node(k, q);
            }
        }
        Ok(coeffs)
    }

    /// Evaluates the truncated expansion at a point xi in (0, 1).
    fn reconstruct(&self, coeffs: Vec<f64>, xi: f64) -> PyResult<f64> {
        let u = self.coeffs(&coeffs)?;
        self.basis.reconstruct(&u, xi).map_err(to_py_err)
    }

    /// Galerkin product: the projection of the pointwise product u·v.
    fn galerkin_product(&self, u: Vec<f64>, v: Vec<f64>) -> PyResult<Vec<f64>> {
        let (u, v) = (self.coeffs(&u)?, self.coeffs(&v)?);
        let p = self.tensor.galerkin_product(&u, &v).map_err(to_py_err)?;
        Ok(p.as_slice().to_vec())
    }

    /// Solves P(u) x = b for the coefficient vector x.
    fn galerkin_solve(&self, u: Vec<f64>, b: Vec<f64>) -> PyResult<Vec<f64>> {
        let (u, b) = (self.coeffs(&u)?, self.coeffs(&b)?);
        let x = self.tensor.galerkin_solve(&u, &b).map_err(to_py_err)?;
        Ok(x.as_slice().to_vec())
    }

    /// Residuals for the hyperbolicity conditions of the SG system.
    #[pyo3(signature = (n_samples = 200, tolerance = HYPERBOLICITY_TOL))]
    fn hyperbolicity<'py>(
        &self,
        py: Python<'py>,
        n_samples: usize,
        tolerance: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = check_hyperbolicity(&self.tensor, n_samples, tolerance);
        let d = PyDict::new(py);
        d.set_item("family", r.family)?;
        d.set_item("order", r.order)?;
        d.set_item("a1_max_commutator", r.a1_max_commutator)?;
        d.set_item("a2_max_commutator", r.a2_max_commutator)?;
        d.set_item("a3_diagonalization_residual", r.a3_diagonalization_residual)?;
        d.set_item("tolerance", r.tolerance)?;
        d.set_item("passed", r.passed)?;
        d.set_item("detail", r.detail)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Basis(family='{}', order={})", self.family(), self.order())
    }
}

/// Mean of a coefficient vector (the first mode).
#[pyfunction]
fn mean(coeffs: Vec<f64>) -> f64 {
    GalerkinVector::from_slice(&coeffs).mean()
}

/// Variance of a coefficient vector (sum of squared higher modes).
#[pyfunction]
fn variance(coeffs: Vec<f64>) -> f64 {
    GalerkinVector::from_slice(&coeffs).variance()
}

/// Runs the SG-LWR solver on a Riemann problem with uncertain left state
/// rho_l(xi) = u1 + (u2 - u1) xi and deterministic right state rho_r.
///
/// Returns a dict with cell centers "x", snapshot "times", and per-snapshot
/// per-cell "mean", "variance" and raw "coeffs".
#[pyfunction]
#[pyo3(signature = (
    basis, *, n_x = 200, a = 0.0, b = 2.0, cfl = 0.45, t_f = 0.5,
    u1 = 0.75, u2 = 0.95, rho_r = 0.2, x_jump = 1.0,
    boundary = "outflow", snapshots = None
))]
#[allow(clippy::too_many_arguments)]
fn solve_lwr_riemann<'py>(
    py: Python<'py>,
    basis: &PyBasis,
    n_x: usize,
    a: f64,
    b: f64,
    cfl: f64,
    t_f: f64,
    u1: f64,
    u2: f64,
    rho_r: f64,
    x_jump: f64,
    boundary: &str,
    snapshots: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = MacroGrid {
        a,
        b,
        n_x,
        cfl,
        t_f,
        boundary: parse_boundary(boundary)?,
    };
    let solver = MacroSolver::new_lwr(grid, &basis.basis, &basis.tensor).map_err(to_py_err)?;
    let field = solver
        .init_riemann(u1, u2, rho_r, x_jump, false)
        .map_err(to_py_err)?;
    let run = solver
        .run(field, &snapshots.unwrap_or_default())
        .map_err(to_py_err)?;

    let x: Vec<f64> = (0..n_x).map(|j| grid.cell_center(j)).collect();
    let mut times = Vec::new();
    let mut means = Vec::new();
    let mut variances = Vec::new();
    let mut coeffs = Vec::new();
    for snap in &run.snapshots {
        times.push(snap.t);
        means.push(snap.rho.iter().map(|u| u.mean()).collect::<Vec<f64>>());
        variances.push(snap.rho.iter().map(|u| u.variance()).collect::<Vec<f64>>());
        coeffs.push(
            snap.rho
                .iter()
                .map(|u| u.as_slice().to_vec())
                .collect::<Vec<Vec<f64>>>(),
        );
    }
    let d = PyDict::new(py);
    d.set_item("x", x)?;
    d.set_item("times", times)?;
    d.set_item("mean", means)?;
    d.set_item("variance", variances)?;
    d.set_item("coeffs", coeffs)?;
    d.set_item("conservation_drift", run.conservation_drift)?;
    Ok(d)
}

/// Cross-validates SG per-cell moments against a seeded Monte Carlo run of
/// the same LWR Riemann problem. Passes iff the mean discrepancy is within
/// max(3 standard errors, atol).
#[pyfunction]
#[pyo3(signature = (
    sg_mean, sg_variance, *, n_x = 200, a = 0.0, b = 2.0, cfl = 0.45,
    t_f = 0.5, u1 = 0.75, u2 = 0.95, rho_r = 0.2, x_jump = 1.0,
    boundary = "outflow", samples = 500, seed = 0, atol = COMPARE_ATOL
))]
#[allow(clippy::too_many_arguments)]
fn mc_compare_lwr<'py>(
    py: Python<'py>,
    sg_mean: Vec<f64>,
    sg_variance: Vec<f64>,
    n_x: usize,
    a: f64,
    b: f64,
    cfl: f64,
    t_f: f64,
    u1: f64,
    u2: f64,
    rho_r: f64,
    x_jump: f64,
    boundary: &str,
    samples: usize,
    seed: u64,
    atol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = MacroGrid {
        a,
        b,
        n_x,
        cfl,
        t_f,
        boundary: parse_boundary(boundary)?,
    };
    let mc = mc_lwr_riemann(grid, u1, u2, rho_r, x_jump, samples, seed).map_err(to_py_err)?;
    let report = compare(&sg_mean, &sg_variance, &mc, atol).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("samples", samples)?;
    d.set_item("seed", seed)?;
    d.set_item("mean_discrepancy", report.mean_discrepancy)?;
    d.set_item("linf_mean", report.linf_mean)?;
    d.set_item("variance_discrepancy", report.variance_discrepancy)?;
    d.set_item("avg_std_error", report.avg_std_error)?;
    d.set_item("atol", report.atol)?;
    d.set_item("passed", report.passed)?;
    Ok(d)
}

#[pymodule]
fn sgtraffic_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBasis>()?;
    m.add_function(wrap_pyfunction!(mean, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lwr_riemann, m)?)?;
    m.add_function(wrap_pyfunction!(mc_compare_lwr, m)?)?;
    m.add("HYPERBOLICITY_TOL", HYPERBOLICITY_TOL)?;
    m.add("COMPARE_ATOL", COMPARE_ATOL)?;
    Ok(())
}
