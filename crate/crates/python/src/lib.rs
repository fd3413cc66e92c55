//! Python bindings for `mixkde`.

use mixkde::densities::{self, PointSet};
use mixkde::estimator::{bandwidth_rule, kde_eval, KdeModel};
use mixkde::kernel1d::{build_order_kernel, verify_order, UnivariateKernel};
use mixkde::product_kernel::{strict_tensor_kernel, verify_class, ProductKernel};
use mixkde::quadrature::{AxisBox, QuadRule};
use mixkde::risk_harness::{self, ExperimentConfig, RateRegime};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: mixkde::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// An order-s kernel on [-1,1].
#[pyclass(name = "Kernel", module = "mixkde", frozen)]
struct PyKernel(UnivariateKernel);

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (order, strict = true))]
    fn new(order: usize, strict: bool) -> PyResult<Self> {
        build_order_kernel(order, strict).map(PyKernel).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        UnivariateKernel::from_json(text).map(PyKernel).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(py_err)
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order
    }

    #[getter]
    fn poly_coeffs(&self) -> Vec<f64> {
        self.0.poly_coeffs.clone()
    }

    fn __call__(&self, u: f64) -> f64 {
        self.0.eval(u)
    }

    /// JSON report of the moment conditions for a claimed order.
    #[pyo3(signature = (order, tol = 1e-8))]
    fn verify(&self, order: usize, tol: f64) -> PyResult<String> {
        to_json(&verify_order(&self.0, order, tol).map_err(py_err)?)
    }
}

/// A tensor product of two univariate kernels over d1 + d2 axes.
#[pyclass(name = "ProductKernel", module = "mixkde", frozen)]
struct PyProductKernel(ProductKernel);

#[pymethods]
impl PyProductKernel {
    #[new]
    fn new(s1: usize, s2: usize, d1: usize, d2: usize) -> PyResult<Self> {
        strict_tensor_kernel(s1, s2, d1, d2)
            .map(PyProductKernel)
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ProductKernel::from_json(text).map(PyProductKernel).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __call__(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0.eval(&u).map_err(py_err)
    }

    #[pyo3(signature = (tol = 1e-8))]
    fn verify(&self, tol: f64) -> PyResult<String> {
        let rule = QuadRule::new(8, vec![1]).map_err(py_err)?;
        to_json(&verify_class(&self.0, tol, &rule).map_err(py_err)?)
    }
}

/// A density with a sampler.
#[pyclass(name = "Density", module = "mixkde", frozen)]
struct PyDensity(densities::Density);

#[pymethods]
impl PyDensity {
    #[staticmethod]
    fn bump(centers: Vec<f64>, half_widths: Vec<f64>) -> PyResult<Self> {
        densities::tensor_bump(&centers, &half_widths)
            .map(PyDensity)
            .map_err(py_err)
    }

    #[staticmethod]
    fn gaussian(means: Vec<f64>, sds: Vec<f64>) -> PyResult<Self> {
        densities::tensor_gaussian(&means, &sds).map(PyDensity).map_err(py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.0.dim() {
            return Err(PyValueError::new_err(format!(
                "expected {} coordinates, got {}",
                self.0.dim(),
                x.len()
            )));
        }
        Ok(self.0.eval(&x))
    }

    fn sample(&self, seed: u64, count: usize) -> PyResult<Vec<Vec<f64>>> {
        let pts = densities::sample(&self.0, seed, count).map_err(py_err)?;
        Ok(pts.iter().map(|p| p.to_vec()).collect())
    }

    /// (mass, minimum on the check grid, grid points per axis).
    fn check(&self) -> PyResult<(f64, f64, usize)> {
        let c = self.0.check().map_err(py_err)?;
        Ok((c.mass, c.min_value, c.grid_per_axis))
    }
}

/// The product kernel density estimator fitted to a sample.
#[pyclass(name = "Kde", module = "mixkde", frozen)]
struct PyKde(KdeModel);

#[pymethods]
impl PyKde {
    #[new]
    fn new(kernel: &PyProductKernel, h: f64, points: Vec<Vec<f64>>) -> PyResult<Self> {
        let pts = PointSet::from_points(kernel.0.dim(), &points).map_err(py_err)?;
        KdeModel::new(kernel.0.clone(), h, pts).map(PyKde).map_err(py_err)
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        kde_eval(&self.0, &x).map_err(py_err)
    }
}

#[pyfunction]
fn bandwidth(n: usize, s1: usize, s2: usize, d1: usize, d2: usize) -> PyResult<f64> {
    bandwidth_rule(n, s1, s2, d1, d2).map_err(py_err)
}

/// (numerator, denominator) of the named rate exponent.
#[pyfunction]
#[pyo3(signature = (s, d, regime, p = 2.0))]
fn rate_exponent(s: Vec<usize>, d: Vec<usize>, regime: &str, p: f64) -> PyResult<(i64, i64)> {
    let regime: RateRegime = regime.parse().map_err(py_err)?;
    let r = risk_harness::rate_exponent(&s, &d, p, regime).map_err(py_err)?;
    Ok((r.numer(), r.denom()))
}

/// ‖K_h ∗ f − f‖_p over the box [lower, upper] with a uniform panel rule.
#[pyfunction]
#[pyo3(signature = (kernel, h, truth, p, lower, upper, panels = 100, nodes_per_panel = 8))]
#[allow(clippy::too_many_arguments)]
fn bias_lp(
    kernel: &PyProductKernel,
    h: f64,
    truth: &PyDensity,
    p: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    panels: usize,
    nodes_per_panel: usize,
) -> PyResult<f64> {
    let bx = AxisBox::new(lower, upper).map_err(py_err)?;
    let rule = QuadRule::uniform(bx.dim(), nodes_per_panel, panels).map_err(py_err)?;
    mixkde::estimator::bias_lp(&kernel.0, h, &truth.0, p, &bx, &rule).map_err(py_err)
}

/// Run a risk experiment from its JSON config; returns the summary JSON.
#[pyfunction]
#[pyo3(signature = (config_json, threads = 1))]
fn risk_run(py: Python<'_>, config_json: &str, threads: usize) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let report = py
        .detach(|| risk_harness::mc_risk_with_threads(&cfg, threads))
        .map_err(py_err)?;
    to_json(&report.summary())
}

/// Lower-bound family parameters chosen for sample size n, as JSON.
#[pyfunction]
#[pyo3(signature = (n, r, s, d, p = 2.0, compact = true))]
fn family_summary(n: u64, r: f64, s: (usize, usize), d: (usize, usize), p: f64, compact: bool) -> PyResult<String> {
    let req = densities::ParameterRequest::new(n, r, p, s.0, s.1, d.0, d.1, compact);
    let params = densities::choose_parameters(&req).map_err(py_err)?;
    let fam = densities::build_family(&params).map_err(py_err)?;
    to_json(&fam.summary())
}

/// Codewords of a Varshamov–Gilbert code of length m.
#[pyfunction]
fn vg_code(m: usize) -> PyResult<Vec<Vec<bool>>> {
    let code = densities::vg_code(m).map_err(py_err)?;
    Ok(code.words.iter().map(|w| w.to_bools()).collect())
}

#[pymodule]
#[pyo3(name = "mixkde")]
fn mixkde_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyProductKernel>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyKde>()?;
    m.add_function(wrap_pyfunction!(bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(rate_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(bias_lp, m)?)?;
    m.add_function(wrap_pyfunction!(risk_run, m)?)?;
    m.add_function(wrap_pyfunction!(family_summary, m)?)?;
    m.add_function(wrap_pyfunction!(vg_code, m)?)?;
    Ok(())
}
