//! Python bindings: side lengths, configurations, classification and the
//! transition data.

use pentabend::geom::{self, SideLengths, TheoremHypotheses, Vec3};
use pentabend::hamiltonians::{self, IndexSet, Observable};
use pentabend::singularities::{self, LocalModelParams, Thresholds};
use pentabend::{moment, reduction, transition, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NumericalFailure(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Converts any serializable value into Python objects via JSON.
fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn rows(m: &impl std::ops::Index<(usize, usize), Output = f64>) -> Vec<Vec<f64>> {
    (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect()
}

fn index_set(n: usize, labels: &[usize]) -> PyResult<IndexSet> {
    IndexSet::new(n, labels).map_err(py_err)
}

#[pyclass(name = "Configuration", module = "pentabend", frozen)]
struct PyConfiguration {
    inner: geom::Configuration,
}

#[pymethods]
impl PyConfiguration {
    /// Closed polygon from edge vectors; lengths are taken from the edges.
    #[new]
    fn new(edges: Vec<[f64; 3]>) -> PyResult<Self> {
        let rho = edges.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
        geom::Configuration::from_edges(rho)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Random configuration with the given side lengths.
    #[staticmethod]
    #[pyo3(signature = (r, seed = 0))]
    fn sample(r: Vec<f64>, seed: u64) -> PyResult<Self> {
        let l = SideLengths::new(&r).map_err(py_err)?;
        geom::sample_configuration(&l, seed)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn edges(&self) -> Vec<[f64; 3]> {
        self.inner.edges().iter().map(|p| [p.x, p.y, p.z]).collect()
    }

    fn lengths(&self) -> Vec<f64> {
        self.inner.lengths().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// |sum of the labelled edges| (labels are 1-based).
    fn ell(&self, labels: Vec<usize>) -> PyResult<f64> {
        Ok(hamiltonians::ell(&self.inner, &index_set(self.inner.len(), &labels)?))
    }

    fn family_h(&self, t: f64) -> f64 {
        hamiltonians::family_h(&self.inner, t)
    }

    /// {ell_I^2, ell_K^2} at this configuration.
    fn poisson_bracket_sq(&self, i: Vec<usize>, k: Vec<usize>) -> PyResult<f64> {
        let n = self.inner.len();
        let f = Observable::EllSquared(index_set(n, &i)?);
        let g = Observable::EllSquared(index_set(n, &k)?);
        hamiltonians::poisson_bracket(&self.inner, &f, &g).map_err(py_err)
    }

    fn bending_rotate(&self, labels: Vec<usize>, theta: f64) -> PyResult<Self> {
        let i = index_set(self.inner.len(), &labels)?;
        hamiltonians::bending_rotate(&self.inner, &i, theta)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn max_diff(&self, other: PyRef<'_, Self>) -> f64 {
        self.inner.max_diff(&other.inner)
    }

    fn rank(&self, t: f64) -> PyResult<usize> {
        singularities::rank_at(&self.inner, t).map_err(py_err)
    }

    /// Multiplier of the singular-point criterion, or None.
    #[pyo3(signature = (t, tol = 1e-9))]
    fn detect_singular(&self, t: f64, tol: f64) -> Option<f64> {
        singularities::detect_singular(&self.inner, t, tol).map(|w| w.a)
    }

    /// Rank, type and evidence as a dict.
    fn classify<'py>(&self, py: Python<'py>, t: f64) -> PyResult<Bound<'py, PyAny>> {
        let r = singularities::classify_point(&self.inner, t, &Thresholds::default()).map_err(py_err)?;
        to_py(py, &r)
    }

    /// (c, edges of the reduced 4-gon).
    fn reduce(&self) -> PyResult<(f64, Vec<[f64; 3]>)> {
        let q = reduction::reduce_point(&self.inner).map_err(py_err)?;
        Ok((q.c, q.quad.edges().iter().map(|p| [p.x, p.y, p.z]).collect()))
    }

    fn __repr__(&self) -> String {
        format!("Configuration(n={}, lengths={:?})", self.inner.len(), self.inner.lengths())
    }
}

#[pyclass(name = "Hypotheses", module = "pentabend", frozen)]
struct PyHypotheses {
    inner: TheoremHypotheses,
}

#[pymethods]
impl PyHypotheses {
    #[new]
    fn new(r: Vec<f64>) -> PyResult<Self> {
        TheoremHypotheses::from_slice(&r)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn r(&self) -> Vec<f64> {
        self.inner.r().to_vec()
    }

    #[getter]
    fn j(&self) -> f64 {
        self.inner.j
    }

    #[getter]
    fn j_min(&self) -> f64 {
        self.inner.j_min
    }

    #[getter]
    fn j_max(&self) -> f64 {
        self.inner.j_max
    }

    fn transition_times(&self) -> PyResult<(f64, f64)> {
        transition::transition_times(&self.inner).map_err(py_err)
    }

    /// (A(t), B(t)) of the characteristic quadratic at the transition point.
    fn chi(&self, t: f64) -> (f64, f64) {
        transition::chi_coefficients(&self.inner, t)
    }

    /// (a, b, c) of the quadratic factor.
    fn f_coeffs(&self) -> (f64, f64, f64) {
        let [a, b, c] = transition::QuadraticData::new(&self.inner).f_coeffs;
        (a, b, c)
    }

    fn delta(&self) -> f64 {
        transition::QuadraticData::new(&self.inner).delta
    }

    fn transition_point(&self) -> PyResult<PyConfiguration> {
        geom::build_transition_point(&self.inner)
            .map(|inner| PyConfiguration { inner })
            .map_err(py_err)
    }

    /// Matrices at the transition point as nested lists.
    #[pyo3(signature = (numeric = false))]
    fn matrices<'py>(&self, py: Python<'py>, numeric: bool) -> PyResult<Bound<'py, PyAny>> {
        let m = if numeric {
            transition::numeric_matrices(&self.inner, Default::default()).map_err(py_err)?
        } else {
            transition::analytic_matrices(&self.inner)
        };
        let d = serde_json::json!({
            "hess_h0": rows(&m.hess_h0),
            "hess_h1": rows(&m.hess_h1),
            "hess_j": rows(&m.hess_j),
            "omega_inv": rows(&m.omega_inv),
        });
        to_py(py, &d)
    }

    #[pyo3(signature = (num_t = 101))]
    fn sweep<'py>(&self, py: Python<'py>, num_t: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &transition::sweep(&self.inner, num_t).map_err(py_err)?)
    }

    fn delzant_vertices<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &moment::delzant_vertices(&self.inner))
    }

    /// List of (J, H_t, ell_34, ell_45).
    #[pyo3(signature = (count, t = 0.5, seed = 0))]
    fn sample_moment_image(&self, count: usize, t: f64, seed: u64) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let s = moment::sample_moment_image(&self.inner, count, t, seed).map_err(py_err)?;
        Ok(s.iter().map(|x| (x.j, x.h, x.ell34, x.ell45)).collect())
    }

    fn __repr__(&self) -> String {
        format!("Hypotheses(r={:?})", self.inner.r())
    }
}

/// Flags of a side-length vector.
#[pyfunction]
fn validate_side_lengths<'py>(py: Python<'py>, r: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let (_, f) = geom::validate_side_lengths(&r).map_err(py_err)?;
    to_py(
        py,
        &serde_json::json!({
            "generic": f.generic,
            "nonempty": f.nonempty,
            "theorem_hypotheses_ok": f.theorem_hypotheses_ok,
        }),
    )
}

#[pyfunction]
#[pyo3(signature = (mu1, mu2, mu3, psi = 0.0, tol = 1e-12))]
fn classify_local_model(mu1: f64, mu2: f64, mu3: f64, psi: f64, tol: f64) -> PyResult<String> {
    let p = LocalModelParams {
        psi,
        ..LocalModelParams::new(mu1, mu2, mu3)
    };
    singularities::classify_local_model(&p, tol)
        .map(|k| k.to_string())
        .map_err(py_err)
}

#[pyfunction]
fn local_transition_times(mu1: f64, mu2: f64, mu3: f64, nu2: f64, nu3: f64) -> PyResult<(f64, f64)> {
    singularities::local_transition_times(mu1, mu2, mu3, nu2, nu3).map_err(py_err)
}

/// Planar singular 4-gons of the reduced space at level c.
#[pyfunction]
#[pyo3(signature = (c, r3, r4, r5, t, grid = 720))]
fn solve_star<'py>(py: Python<'py>, c: f64, r3: f64, r4: f64, r5: f64, t: f64, grid: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &singularities::solve_star(c, r3, r4, r5, t, grid).map_err(py_err)?)
}

/// Runs the acceptance suites and returns the JSON summary as a dict.
#[pyfunction]
#[pyo3(signature = (r = None, seed = 0, samples = None))]
fn verify<'py>(py: Python<'py>, r: Option<Vec<f64>>, seed: u64, samples: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = pentabend_cli::RunConfig::default();
    if let Some(r) = r {
        cfg.r = r;
    }
    cfg.seed = seed;
    cfg.samples = samples;
    let out = py
        .detach(|| pentabend_cli::commands::cmd_verify(&cfg))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (out.primary,))
}

#[pymodule(name = "pentabend")]
fn pentabend_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PyHypotheses>()?;
    m.add_function(wrap_pyfunction!(validate_side_lengths, m)?)?;
    m.add_function(wrap_pyfunction!(classify_local_model, m)?)?;
    m.add_function(wrap_pyfunction!(local_transition_times, m)?)?;
    m.add_function(wrap_pyfunction!(solve_star, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
