//! Python bindings for the core library: states, the catalog, the Markov
//! test, the monotone family, conversion arrows, the classical theory, and
//! the named verification suites.

use std::collections::HashMap;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use nonmarkov::classical::{
    classical_cmi as core_classical_cmi, classical_intrinsic, make_dist, ClassicalDist,
    IntrinsicConfig,
};
use nonmarkov::entropy::{cqmi as core_cqmi, entropy_of};
use nonmarkov::freeops::{check_convertibility, named_arrow, NAMED_ARROWS};
use nonmarkov::markov::is_markov as core_is_markov;
use nonmarkov::monotones::{compute_report, i_m as core_i_m, OptimizerConfig};
use nonmarkov::suites;
use nonmarkov::tensor::{state_from_json, state_to_json, MultipartiteState};
use nonmarkov::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(|s| s.as_str()).collect()
}

/// A labeled multipartite density operator.
#[pyclass(name = "State")]
#[derive(Clone)]
struct PyState {
    inner: MultipartiteState,
}

#[pymethods]
impl PyState {
    /// Parse the JSON state file format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyState {
            inner: state_from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        state_to_json(&self.inner)
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels().iter().map(|l| l.to_string()).collect()
    }

    fn dims(&self) -> Vec<(String, usize)> {
        self.inner.dims().to_vec()
    }

    fn dim_of(&self, label: &str) -> PyResult<usize> {
        self.inner.dim_of(label).map_err(err)
    }

    /// Dense matrix as a nested list of complex numbers.
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.matrix();
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    }

    fn partial_trace(&self, keep: Vec<String>) -> PyResult<Self> {
        Ok(PyState {
            inner: self.inner.partial_trace(&refs(&keep)).map_err(err)?,
        })
    }

    fn tensor(&self, other: &PyState) -> PyResult<Self> {
        Ok(PyState {
            inner: self.inner.tensor(&other.inner).map_err(err)?,
        })
    }

    fn relabeled(&self, old: &str, new: &str) -> PyResult<Self> {
        Ok(PyState {
            inner: self.inner.relabeled(old, new).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        let dims: Vec<String> = self
            .inner
            .dims()
            .iter()
            .map(|(l, d)| format!("{l}:{d}"))
            .collect();
        format!("State({})", dims.join(", "))
    }
}

/// Verdict of the Markov test.
#[pyclass(name = "MarkovVerdict")]
struct PyMarkovVerdict {
    #[pyo3(get)]
    cqmi: f64,
    #[pyo3(get)]
    petz_residual: f64,
    #[pyo3(get)]
    is_markov: bool,
}

#[pymethods]
impl PyMarkovVerdict {
    fn __repr__(&self) -> String {
        format!(
            "MarkovVerdict(cqmi={:.9}, petz_residual={:.3e}, is_markov={})",
            self.cqmi, self.petz_residual, self.is_markov
        )
    }
}

/// All seven monotone values of one state.
#[pyclass(name = "Monotones")]
struct PyMonotones {
    #[pyo3(get)]
    i_m: f64,
    #[pyo3(get)]
    i_down: f64,
    #[pyo3(get)]
    i_down_star: f64,
    #[pyo3(get)]
    i_sq: f64,
    #[pyo3(get)]
    j_down: f64,
    #[pyo3(get)]
    j_down_star: f64,
    #[pyo3(get)]
    d_rec: f64,
}

#[pymethods]
impl PyMonotones {
    fn values(&self) -> HashMap<String, f64> {
        HashMap::from([
            ("i_m".to_string(), self.i_m),
            ("i_down".to_string(), self.i_down),
            ("i_down_star".to_string(), self.i_down_star),
            ("i_sq".to_string(), self.i_sq),
            ("j_down".to_string(), self.j_down),
            ("j_down_star".to_string(), self.j_down_star),
            ("d_rec".to_string(), self.d_rec),
        ])
    }

    fn __repr__(&self) -> String {
        format!(
            "Monotones(i_m={:.4}, i_down={:.4}, i_down_star={:.4}, i_sq={:.4}, j_down={:.4}, j_down_star={:.4}, d_rec={:.4})",
            self.i_m, self.i_down, self.i_down_star, self.i_sq, self.j_down, self.j_down_star, self.d_rec
        )
    }
}

/// Result of verifying a conversion arrow.
#[pyclass(name = "Conversion")]
struct PyConversion {
    #[pyo3(get)]
    epsilon_achieved: f64,
    #[pyo3(get)]
    ok: bool,
    #[pyo3(get)]
    steps: usize,
}

#[pymethods]
impl PyConversion {
    fn __repr__(&self) -> String {
        format!(
            "Conversion(epsilon_achieved={:.3e}, ok={}, steps={})",
            self.epsilon_achieved, self.ok, self.steps
        )
    }
}

/// Outcome of a named verification suite.
#[pyclass(name = "SuiteResult")]
struct PySuiteResult {
    #[pyo3(get)]
    name: String,
    #[pyo3(get)]
    passed: usize,
    #[pyo3(get)]
    total: usize,
    #[pyo3(get)]
    all_pass: bool,
    rendered: String,
}

#[pymethods]
impl PySuiteResult {
    fn render(&self) -> String {
        self.rendered.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "SuiteResult(name={}, passed={}/{})",
            self.name, self.passed, self.total
        )
    }
}

#[pyfunction]
fn catalog_names() -> Vec<String> {
    nonmarkov::catalog::list()
}

#[pyfunction]
fn catalog(name: &str) -> PyResult<PyState> {
    Ok(PyState {
        inner: nonmarkov::catalog::make(name).map_err(err)?.state,
    })
}

#[pyfunction]
fn expected_monotones(name: &str) -> PyResult<Option<HashMap<String, f64>>> {
    let named = nonmarkov::catalog::make(name).map_err(err)?;
    Ok(named.expected_monotones.map(|row| {
        HashMap::from([
            ("i_m".to_string(), row.i_m),
            ("i_down".to_string(), row.i_down),
            ("i_down_star".to_string(), row.i_down_star),
            ("i_sq".to_string(), row.i_sq),
            ("j_down".to_string(), row.j_down),
            ("j_down_star".to_string(), row.j_down_star),
        ])
    }))
}

#[pyfunction]
fn arrow_names() -> Vec<String> {
    NAMED_ARROWS.iter().map(|(n, _, _)| n.to_string()).collect()
}

#[pyfunction]
#[pyo3(signature = (name, epsilon=1e-8))]
fn verify_arrow(name: &str, epsilon: f64) -> PyResult<PyConversion> {
    let (_, from_name, to_name) = NAMED_ARROWS
        .iter()
        .find(|(n, _, _)| *n == name)
        .ok_or_else(|| PyValueError::new_err(format!("no conversion arrow named {name}")))?;
    let from = nonmarkov::catalog::make(from_name).map_err(err)?.state;
    let to = nonmarkov::catalog::make(to_name).map_err(err)?.state;
    let (protocol, witness) = named_arrow(name).map_err(err)?;
    let verdict = check_convertibility(&from, &to, &protocol, &witness, epsilon).map_err(err)?;
    Ok(PyConversion {
        epsilon_achieved: verdict.epsilon_achieved,
        ok: verdict.ok,
        steps: protocol.steps.len(),
    })
}

#[pyfunction]
fn cqmi(state: &PyState, a: Vec<String>, b: Vec<String>, e: Vec<String>) -> PyResult<f64> {
    core_cqmi(&state.inner, &refs(&a), &refs(&b), &refs(&e)).map_err(err)
}

#[pyfunction]
fn entropy(state: &PyState, labels: Vec<String>) -> PyResult<f64> {
    entropy_of(&state.inner, &refs(&labels)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (state, a, b, e, tol=1e-8))]
fn is_markov(
    state: &PyState,
    a: Vec<String>,
    b: Vec<String>,
    e: Vec<String>,
    tol: f64,
) -> PyResult<PyMarkovVerdict> {
    let v = core_is_markov(&state.inner, &refs(&a), &refs(&b), &refs(&e), tol).map_err(err)?;
    Ok(PyMarkovVerdict {
        cqmi: v.cqmi,
        petz_residual: v.petz_residual,
        is_markov: v.is_markov,
    })
}

#[pyfunction]
fn i_m(state: &PyState, a: Vec<String>, b: Vec<String>, e: Vec<String>) -> PyResult<f64> {
    core_i_m(&state.inner, &refs(&a), &refs(&b), &refs(&e)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (state, a, b, e, seed=0, restarts=64, ext_dim_cap=None, threads=1))]
#[allow(clippy::too_many_arguments)]
fn analyze(
    state: &PyState,
    a: Vec<String>,
    b: Vec<String>,
    e: Vec<String>,
    seed: u64,
    restarts: usize,
    ext_dim_cap: Option<usize>,
    threads: usize,
) -> PyResult<PyMonotones> {
    let cfg = OptimizerConfig {
        seed,
        restarts,
        extension_dim_cap: ext_dim_cap,
        env_dim_cap: ext_dim_cap,
        threads,
        ..OptimizerConfig::default()
    };
    let r = compute_report(&state.inner, &refs(&a), &refs(&b), &refs(&e), &cfg).map_err(err)?;
    Ok(PyMonotones {
        i_m: r.i_m,
        i_down: r.i_down.value,
        i_down_star: r.i_down_star.value,
        i_sq: r.i_sq.value,
        j_down: r.j_down.value,
        j_down_star: r.j_down_star.value,
        d_rec: r.d_rec.value,
    })
}

fn dist_from_parts(nx: usize, ny: usize, nz: usize, table: Vec<f64>) -> PyResult<ClassicalDist> {
    ClassicalDist::new(nx, ny, nz, table).map_err(err)
}

#[pyfunction]
fn classical_table(name: &str) -> PyResult<(usize, usize, usize, Vec<f64>)> {
    let p = make_dist(name).map_err(err)?;
    Ok((p.nx(), p.ny(), p.nz(), p.table().to_vec()))
}

#[pyfunction]
fn classical_cmi(nx: usize, ny: usize, nz: usize, table: Vec<f64>) -> PyResult<f64> {
    Ok(core_classical_cmi(&dist_from_parts(nx, ny, nz, table)?))
}

#[pyfunction]
#[pyo3(signature = (nx, ny, nz, table, seed=0, restarts=24))]
fn classical_intrinsic_info(
    nx: usize,
    ny: usize,
    nz: usize,
    table: Vec<f64>,
    seed: u64,
    restarts: usize,
) -> PyResult<f64> {
    let p = dist_from_parts(nx, ny, nz, table)?;
    let cfg = IntrinsicConfig {
        seed,
        restarts,
        ..IntrinsicConfig::default()
    };
    Ok(classical_intrinsic(&p, &cfg).map_err(err)?.0)
}

#[pyfunction]
#[pyo3(signature = (name, seed=0, restarts=64))]
fn run_suite(name: &str, seed: u64, restarts: usize) -> PyResult<PySuiteResult> {
    let cfg = OptimizerConfig {
        seed,
        restarts,
        ..OptimizerConfig::default()
    };
    let report = match name {
        "table1" => suites::table1_suite(&cfg).map_err(err)?,
        "fig3" => suites::fig3_suite().map_err(err)?,
        "pauli" => suites::pauli_suite(),
        "classical" => suites::classical_suite(seed).map_err(err)?,
        "properties" => suites::properties_suite(seed, &cfg).map_err(err)?,
        other => {
            return Err(PyValueError::new_err(format!(
                "no suite named {other}; pick table1, fig3, pauli, classical, or properties"
            )))
        }
    };
    Ok(PySuiteResult {
        name: report.name.clone(),
        passed: report.passed(),
        total: report.checks.len(),
        all_pass: report.all_pass(),
        rendered: report.render(),
    })
}

#[pymodule]
fn nonmarkov_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyMarkovVerdict>()?;
    m.add_class::<PyMonotones>()?;
    m.add_class::<PyConversion>()?;
    m.add_class::<PySuiteResult>()?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(expected_monotones, m)?)?;
    m.add_function(wrap_pyfunction!(arrow_names, m)?)?;
    m.add_function(wrap_pyfunction!(verify_arrow, m)?)?;
    m.add_function(wrap_pyfunction!(cqmi, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(is_markov, m)?)?;
    m.add_function(wrap_pyfunction!(i_m, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(classical_table, m)?)?;
    m.add_function(wrap_pyfunction!(classical_cmi, m)?)?;
    m.add_function(wrap_pyfunction!(classical_intrinsic_info, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
