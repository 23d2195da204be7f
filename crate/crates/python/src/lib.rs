//! Python bindings: table bundles, ZC/PQ checks, single orders and the Wagner test.
//!
//! Tuples cross the boundary as `{order: {class name: partial augmentation}}`.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use help_core::chartab::{CharacterTable, TableBundle};
use help_core::cli::resolve_bundle;
use help_core::driver::{self, OrderResult, Options, SolutionStore, Verdict};
use help_core::isolve::RedundPolicy;
use help_core::sysbuild::PATuple;
use help_core::wagner::wagner_check;

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A character table bundle: the ordinary table plus any Brauer tables.
#[pyclass(name = "Bundle", module = "help_py", frozen)]
pub struct PyBundle {
    inner: TableBundle,
}

#[pymethods]
impl PyBundle {
    #[getter]
    fn group(&self) -> String {
        self.inner.group_name().to_string()
    }

    #[getter]
    fn order(&self) -> u64 {
        self.inner.ordinary.group_order
    }

    /// (name, element order, class size) for every conjugacy class.
    #[getter]
    fn classes(&self) -> Vec<(String, u64, u64)> {
        self.inner.ordinary.classes.iter().map(|c| (c.name.clone(), c.element_order, c.size)).collect()
    }

    #[getter]
    fn element_orders(&self) -> Vec<u64> {
        self.inner.ordinary.element_orders().into_iter().collect()
    }

    #[getter]
    fn exponent(&self) -> u64 {
        self.inner.ordinary.exponent()
    }

    #[getter]
    fn missing_pq_orders(&self) -> Vec<u64> {
        self.inner.ordinary.prime_graph_missing_pq().into_iter().collect()
    }

    #[getter]
    fn brauer_primes(&self) -> Vec<u64> {
        self.inner.brauer_primes()
    }

    #[getter]
    fn is_solvable(&self) -> bool {
        self.inner.ordinary.is_solvable()
    }

    #[getter]
    fn is_nilpotent(&self) -> bool {
        self.inner.ordinary.is_nilpotent()
    }

    /// The group elements of order k as tuples.
    fn trivial_tuples<'py>(&self, py: Python<'py>, k: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        driver::trivial_solutions(&self.inner.ordinary, k).iter().map(|t| tuple_to_py(py, t, &self.inner.ordinary)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Bundle({:?}, order={})", self.inner.group_name(), self.inner.ordinary.group_order)
    }
}

fn tuple_to_py<'py>(py: Python<'py>, t: &PATuple, table: &CharacterTable) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    for (&e, pa) in &t.per_divisor {
        let inner = PyDict::new(py);
        for (&c, &v) in &pa.entries {
            inner.set_item(&table.classes[c].name, v)?;
        }
        out.set_item(e, inner)?;
    }
    Ok(out)
}

fn tuple_from_py(d: &Bound<'_, PyDict>, k: u64, table: &CharacterTable) -> PyResult<PATuple> {
    let mut obj = serde_json::Map::new();
    for (e, pa) in d.iter() {
        let e: u64 = e.extract()?;
        let pa = pa.cast::<PyDict>().map_err(|_| PyKeyError::new_err(format!("level {e} is not a dict")))?;
        let mut level = serde_json::Map::new();
        for (name, v) in pa.iter() {
            let v: i64 = v.extract()?;
            level.insert(name.extract::<String>()?, v.into());
        }
        obj.insert(e.to_string(), level.into());
    }
    driver::tuple_from_json(&obj.into(), k, table).map_err(value_error)
}

fn options(shortcuts: bool, brauer: bool, p_constant: bool, redund: bool, max_nodes: Option<u64>) -> Options {
    let mut o = Options { shortcuts, use_brauer: brauer, p_constant, ..Options::default() };
    if !redund {
        o.solve.redund = RedundPolicy::Off;
    }
    if let Some(n) = max_nodes {
        o.solve.max_nodes = n;
    }
    o
}

/// Result of a ZC or PQ check.
#[pyclass(name = "Report", module = "help_py", frozen)]
pub struct PyReport {
    report: driver::Report,
    table: CharacterTable,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn proved(&self) -> bool {
        self.report.verdict.is_proved()
    }

    /// "proved", "proved (nilpotent shortcut)", "proved (solvable shortcut)" or "unknown".
    #[getter]
    fn verdict(&self) -> String {
        match &self.report.verdict {
            Verdict::Proved(None) => "proved".into(),
            Verdict::Proved(Some(s)) => format!("proved ({} shortcut)", format!("{s:?}").to_lowercase()),
            Verdict::Unknown(_) => "unknown".into(),
        }
    }

    #[getter]
    fn orders(&self) -> Vec<u64> {
        self.report.orders.clone()
    }

    /// (order, reason) for every order that blocks a proof.
    #[getter]
    fn obstructions(&self) -> Vec<(u64, String)> {
        match &self.report.verdict {
            Verdict::Unknown(obs) => obs.iter().map(|(k, r)| (*k, r.to_string())).collect(),
            Verdict::Proved(_) => vec![],
        }
    }

    /// Admissible tuples of order k, or None if order k was not solved.
    fn solutions<'py>(&self, py: Python<'py>, k: u64) -> PyResult<Option<Vec<Bound<'py, PyDict>>>> {
        self.report
            .store
            .solutions
            .get(&k)
            .map(|v| v.iter().map(|t| tuple_to_py(py, t, &self.table)).collect())
            .transpose()
    }

    /// The solution store as a JSON string, in the format read by `--store`.
    fn store_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.report.store.to_json(&self.table)).map_err(value_error)
    }
}

/// Loads a bundle by path, by name in the data directory, or as `cyclic:N`.
#[pyfunction]
fn load_bundle(name: &str) -> PyResult<PyBundle> {
    resolve_bundle(name).map(|inner| PyBundle { inner }).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (bundle, shortcuts=true, brauer=true, p_constant=false, redund=true, max_nodes=None))]
fn check_zc(
    py: Python<'_>,
    bundle: &PyBundle,
    shortcuts: bool,
    brauer: bool,
    p_constant: bool,
    redund: bool,
    max_nodes: Option<u64>,
) -> PyResult<PyReport> {
    let o = options(shortcuts, brauer, p_constant, redund, max_nodes);
    let b = &bundle.inner;
    let report = py.detach(|| driver::check_zc(b, &o)).map_err(value_error)?;
    Ok(PyReport { report, table: b.ordinary.clone() })
}

#[pyfunction]
#[pyo3(signature = (bundle, shortcuts=true, brauer=true, p_constant=false, redund=true, max_nodes=None))]
fn check_pq(
    py: Python<'_>,
    bundle: &PyBundle,
    shortcuts: bool,
    brauer: bool,
    p_constant: bool,
    redund: bool,
    max_nodes: Option<u64>,
) -> PyResult<PyReport> {
    let o = options(shortcuts, brauer, p_constant, redund, max_nodes);
    let b = &bundle.inner;
    let report = py.detach(|| driver::check_pq(b, &o)).map_err(value_error)?;
    Ok(PyReport { report, table: b.ordinary.clone() })
}

/// Solves order k (and everything below it). Returns a dict with keys
/// "status" ("solved" or the obstruction), "admissible" and "rejected".
#[pyfunction]
#[pyo3(signature = (bundle, k, brauer=true, p_constant=false, redund=true, max_nodes=None))]
fn solve_order<'py>(
    py: Python<'py>,
    bundle: &PyBundle,
    k: u64,
    brauer: bool,
    p_constant: bool,
    redund: bool,
    max_nodes: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    if k < 2 {
        return Err(PyValueError::new_err("order must be at least 2"));
    }
    let o = options(true, brauer, p_constant, redund, max_nodes);
    let b = &bundle.inner;
    let mut store = SolutionStore::new(b.group_name());
    let res = py.detach(|| driver::solve_order(b, k, &mut store, &o)).map_err(value_error)?;
    let out = PyDict::new(py);
    let convert = |ts: &[PATuple]| ts.iter().map(|t| tuple_to_py(py, t, &b.ordinary)).collect::<PyResult<Vec<_>>>();
    match res {
        OrderResult::Solved(s) => {
            out.set_item("status", "solved")?;
            out.set_item("admissible", convert(&s)?)?;
        }
        OrderResult::Obstructed(r) => {
            out.set_item("status", r.to_string())?;
            out.set_item("admissible", Vec::<Bound<'py, PyDict>>::new())?;
        }
    }
    out.set_item("rejected", convert(store.rejected.get(&k).map(Vec::as_slice).unwrap_or(&[]))?)?;
    Ok(out)
}

/// True if the tuple of order k satisfies every Wagner congruence.
#[pyfunction]
fn wagner_test(bundle: &PyBundle, k: u64, tuple: &Bound<'_, PyDict>) -> PyResult<bool> {
    let t = tuple_from_py(tuple, k, &bundle.inner.ordinary)?;
    Ok(wagner_check(&bundle.inner.ordinary, &t).map_err(value_error)?.is_none())
}

#[pymodule]
fn help_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBundle>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(load_bundle, m)?)?;
    m.add_function(wrap_pyfunction!(check_zc, m)?)?;
    m.add_function(wrap_pyfunction!(check_pq, m)?)?;
    m.add_function(wrap_pyfunction!(solve_order, m)?)?;
    m.add_function(wrap_pyfunction!(wagner_test, m)?)?;
    Ok(())
}
