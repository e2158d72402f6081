//! Python bindings: chaos vectors, the two products, noise objects, the
//! expression evaluator, growth classification and the Feynman-Kac solver.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use wnchaos::chaos::{read_chaos, write_chaos};
use wnchaos::colombeau::{self, ClassifyConfig, GenSequence};
use wnchaos::experiments::{self as exp, Tolerances};
use wnchaos::lang::{self, Env, Value};
use wnchaos::spde::{self, McParams, SdeSpec};
use wnchaos::{noise, products, BasisLayout, MultiIndex};

fn err(e: wnchaos::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn layout(dim: usize, modes: usize, order: usize) -> PyResult<Arc<BasisLayout>> {
    BasisLayout::new(dim, modes, order).map_err(err)
}

/// Truncated chaos expansion `sum c_alpha H_alpha`.
#[pyclass(name = "ChaosVector", module = "wnchaos_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyChaos(wnchaos::ChaosVector);

#[pymethods]
impl PyChaos {
    #[staticmethod]
    #[pyo3(signature = (c, dim = 1, modes = 8, order = 4))]
    fn constant(c: f64, dim: usize, modes: usize, order: usize) -> PyResult<Self> {
        Ok(Self(wnchaos::ChaosVector::constant(&layout(dim, modes, order)?, c)))
    }

    /// `terms` is a list of `([(mode, power), ...], coefficient)`.
    #[staticmethod]
    #[pyo3(signature = (terms, dim = 1, modes = 8, order = 4))]
    fn from_terms(terms: Vec<(Vec<(u32, u32)>, f64)>, dim: usize, modes: usize, order: usize) -> PyResult<Self> {
        let l = layout(dim, modes, order)?;
        let coeffs = terms.into_iter().map(|(a, c)| (MultiIndex::from_pairs(a), c));
        Ok(Self(wnchaos::ChaosVector::from_coeffs(&l, coeffs).map_err(err)?))
    }

    #[staticmethod]
    #[pyo3(signature = (g, dim = 1, modes = 8, order = 4))]
    fn first_order(g: Vec<f64>, dim: usize, modes: usize, order: usize) -> PyResult<Self> {
        let l = layout(dim, modes, order)?;
        Ok(Self(wnchaos::ChaosVector::from_first_order(&l, &g).map_err(err)?))
    }

    #[staticmethod]
    #[pyo3(signature = (g, dim = 1, modes = 8, order = 4))]
    fn wick_exp(g: Vec<f64>, dim: usize, modes: usize, order: usize) -> PyResult<Self> {
        let l = layout(dim, modes, order)?;
        Ok(Self(wnchaos::ChaosVector::wick_exp(&l, &g).map_err(err)?))
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self(read_chaos(text).map_err(err)?))
    }

    fn to_text(&self) -> String {
        write_chaos(&self.0)
    }

    fn terms(&self) -> Vec<(Vec<(u32, u32)>, f64)> {
        self.0.iter().map(|(a, c)| (a.pairs().to_vec(), c)).collect()
    }

    fn get(&self, alpha: Vec<(u32, u32)>) -> f64 {
        self.0.get(&MultiIndex::from_pairs(alpha))
    }

    #[getter]
    fn tail_mass(&self) -> f64 {
        self.0.tail_mass()
    }

    fn norm(&self, p: i32) -> f64 {
        self.0.norm_value(p)
    }

    fn log_norm(&self, p: i32) -> f64 {
        self.0.norm(p).log_value
    }

    fn expectation(&self) -> f64 {
        self.0.expectation()
    }

    fn s_transform(&self, phi: Vec<f64>) -> f64 {
        self.0.s_transform(&phi)
    }

    fn evaluate_at(&self, xi: Vec<f64>) -> f64 {
        self.0.evaluate_at(&xi)
    }

    fn pairing(&self, other: &Self) -> PyResult<f64> {
        self.0.pairing(&other.0).map_err(err)
    }

    fn project_order(&self, m: usize) -> Self {
        Self(self.0.project_order(m))
    }

    fn wick(&self, other: &Self) -> PyResult<Self> {
        Ok(Self(products::wick(&self.0, &other.0).map_err(err)?))
    }

    /// Pointwise product.
    fn mul(&self, other: &Self) -> PyResult<Self> {
        Ok(Self(products::mul(&self.0, &other.0).map_err(err)?))
    }

    fn scale(&self, a: f64) -> Self {
        Self(self.0.scale(a))
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self(self.0.add(&other.0).map_err(err)?))
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self(self.0.sub(&other.0).map_err(err)?))
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        self.mul(other)
    }

    fn __neg__(&self) -> Self {
        Self(self.0.scale(-1.0))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        let l = self.0.layout();
        format!(
            "ChaosVector(dim={}, modes={}, order={}, terms={}, tail_mass={:e})",
            l.dim(),
            l.mode_cap(),
            l.order_cap(),
            self.0.len(),
            self.0.tail_mass()
        )
    }
}

#[pyfunction]
fn hermite_fn(j: usize, x: f64) -> f64 {
    wnchaos::hermite::hermite_fn(j, x)
}

#[pyfunction]
#[pyo3(signature = (x, m, modes = None))]
fn white_noise(x: Vec<f64>, m: usize, modes: Option<usize>) -> PyResult<PyChaos> {
    let l = layout(x.len(), modes.unwrap_or(m + 1), 2)?;
    Ok(PyChaos(noise::white_noise(&l, &x, m).map_err(err)?))
}

#[pyfunction]
fn brownian(t: f64, modes: usize) -> PyResult<PyChaos> {
    let l = layout(1, modes, 1)?;
    Ok(PyChaos(noise::brownian(&l, t, modes).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (a, t, order = 4, modes = 8))]
fn donsker_delta(a: f64, t: f64, order: usize, modes: usize) -> PyResult<PyChaos> {
    let l = layout(1, modes, order)?;
    Ok(PyChaos(noise::donsker_delta(&l, a, t, order, modes).map_err(err)?))
}

/// Evaluates an expression program; returns a float or a ChaosVector.
#[pyfunction]
#[pyo3(signature = (src, dim = 1, modes = 8, order = 4, bindings = None))]
fn eval(
    py: Python<'_>,
    src: &str,
    dim: usize,
    modes: usize,
    order: usize,
    bindings: Option<Vec<(String, PyChaos)>>,
) -> PyResult<Py<PyAny>> {
    let mut env = Env::new(layout(dim, modes, order)?);
    for (name, v) in bindings.unwrap_or_default() {
        env.bind(name, Value::Chaos(v.0));
    }
    match lang::run(src, &mut env).map_err(err)? {
        Value::Real(v) => Ok(v.into_pyobject(py)?.into_any().unbind()),
        Value::Chaos(c) => Ok(Py::new(py, PyChaos(c))?.into_any()),
    }
}

/// Growth classification of a sequence; one `(p, rate, C, verdict)` per `p`.
#[pyfunction]
#[pyo3(signature = (terms, p_grid = vec![0, 1]))]
fn classify(terms: Vec<PyChaos>, p_grid: Vec<i32>) -> PyResult<Vec<(i32, f64, f64, String)>> {
    let seq = GenSequence::new(terms.into_iter().map(|t| t.0).collect(), "py").map_err(err)?;
    Ok(colombeau::classify(&seq, &p_grid, &ClassifyConfig::default())
        .into_iter()
        .map(|r| (r.p.unwrap_or(0), r.rate, r.c, r.verdict.to_string()))
        .collect())
}

/// Feynman-Kac solution `u_m(t, x)`; returns `(value, stderr)`.
#[pyfunction]
#[pyo3(signature = (preset, t, x, m = None, order = 2, n_paths = 10_000, dt = 1e-3, seed = 0, wick = false))]
#[allow(clippy::too_many_arguments)]
fn fk_solve(
    preset: &str,
    t: f64,
    x: f64,
    m: Option<usize>,
    order: usize,
    n_paths: usize,
    dt: f64,
    seed: u64,
    wick: bool,
) -> PyResult<(PyChaos, PyChaos)> {
    let spec = SdeSpec::preset(preset).map_err(err)?;
    let l = layout(2, m.map_or(1, |m| m + 1), order)?;
    let params = McParams::new(n_paths, dt, seed);
    let u = if wick {
        spde::fk_solve_wick(&spec, &l, t, x, m, order, &params)
    } else {
        spde::fk_solve(&spec, &l, t, x, m, order, &params)
    }
    .map_err(err)?;
    Ok((PyChaos(u.value), PyChaos(u.stderr)))
}

/// Runs a batch experiment with its default configuration; returns
/// `(passed, summary, manifest_json)` and optionally writes the artifacts.
#[pyfunction]
#[pyo3(signature = (name, out = None))]
fn run_experiment(name: &str, out: Option<&str>) -> PyResult<(bool, String, String)> {
    let tol = Tolerances::new();
    let report = match name {
        "hermite-suite" => exp::hermite_suite(&Default::default(), &tol),
        "algebra-suite" => exp::algebra_suite(&Default::default(), &tol),
        "embed-study" => exp::embed_study(&Default::default(), &tol),
        "noise-growth" => exp::noise_growth(&Default::default(), &tol),
        "donsker-check" => exp::donsker_check(&Default::default(), &tol),
        "spde-compare-wick" => exp::spde_compare_wick(&Default::default(), &tol),
        "uniqueness" => exp::uniqueness(&Default::default(), &tol),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown or preset-dependent experiment `{other}`; use the CLI for spde-solve and spde-residual"
            )))
        }
    }
    .map_err(err)?;
    if let Some(dir) = out {
        report.write_to(std::path::Path::new(dir)).map_err(err)?;
    }
    Ok((report.passed(), report.summary(), report.manifest().to_string()))
}

#[pymodule]
fn wnchaos_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChaos>()?;
    m.add_function(wrap_pyfunction!(hermite_fn, m)?)?;
    m.add_function(wrap_pyfunction!(white_noise, m)?)?;
    m.add_function(wrap_pyfunction!(brownian, m)?)?;
    m.add_function(wrap_pyfunction!(donsker_delta, m)?)?;
    m.add_function(wrap_pyfunction!(eval, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(fk_solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
