//! Python bindings. Points cross the boundary as the canonical JSON strings of
//! the core crate; spaces, points and stabilizer computations are wrapped.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use drinfeld_core::atlas::{build_atlas, export, AtlasOptions, Format};
use drinfeld_core::group::{enumerate_pgl, prepare, stabilizer_bruteforce, stabilizer_predicted, unipotent_elements};
use drinfeld_core::io::{point_from_str, point_to_string};
use drinfeld_core::points::{classify, enumerate, stratum_flag, Variety};
use drinfeld_core::verify::{verify_all, VerifyConfig};

fn err(e: drinfeld_core::Error) -> PyErr {
    match e {
        drinfeld_core::Error::Rejected(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn variety(s: &str) -> PyResult<Variety> {
    s.parse().map_err(err)
}

/// `V = k^(n+1)` over `k = F_(p^e)`, with an ambient field containing `k_m`
/// for every `m` in `ms`.
#[pyclass(frozen, name = "Space")]
struct PySpace(Arc<drinfeld_core::Space>);

#[pymethods]
impl PySpace {
    #[new]
    #[pyo3(signature = (p, e, n_plus_1, ms = vec![1]))]
    fn new(p: u32, e: u32, n_plus_1: usize, ms: Vec<u32>) -> PyResult<Self> {
        Ok(PySpace(Arc::new(drinfeld_core::Space::new(p, e, n_plus_1, &ms).map_err(err)?)))
    }

    #[getter]
    fn q(&self) -> u64 {
        self.0.q()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Degree `D` of the ambient field over `F_p`.
    #[getter]
    fn degree(&self) -> usize {
        self.0.field().degree()
    }

    #[getter]
    fn modulus(&self) -> Vec<u32> {
        self.0.field().modulus().to_vec()
    }

    /// All `k_m`-points of the variety `"P"`, `"Q"` or `"B"`.
    fn points(&self, variety_name: &str, m: u32) -> PyResult<Vec<PyPoint>> {
        let pts = enumerate(&self.0, variety(variety_name)?, m).map_err(err)?;
        Ok(pts.into_iter().map(|x| PyPoint { space: self.0.clone(), x }).collect())
    }

    fn __repr__(&self) -> String {
        format!("Space(q={}, n_plus_1={}, D={})", self.0.q(), self.0.dim(), self.0.field().degree())
    }
}

#[pyclass(frozen, name = "Point")]
struct PyPoint {
    space: Arc<drinfeld_core::Space>,
    x: drinfeld_core::Point,
}

#[pymethods]
impl PyPoint {
    /// Parses and validates a point JSON document; raises `ValueError` if the
    /// axioms fail.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (space, raw) = point_from_str(text).map_err(err)?;
        let x = raw.validate(&space).map_err(err)?;
        Ok(PyPoint { space: Arc::new(space), x })
    }

    fn to_json(&self) -> PyResult<String> {
        point_to_string(&self.space, &self.x).map_err(err)
    }

    #[getter]
    fn variety(&self) -> &'static str {
        self.x.variety().name()
    }

    #[getter]
    fn space(&self) -> PySpace {
        PySpace(self.space.clone())
    }

    /// Key of the stratum containing the point.
    fn stratum(&self) -> PyResult<String> {
        Ok(classify(&self.space, &self.x).map_err(err)?.key())
    }

    /// Key of the flag attached to the stratum.
    fn stratum_flag(&self) -> PyResult<String> {
        Ok(stratum_flag(&self.space, &self.x).map_err(err)?.key())
    }

    /// `(order, unipotent_count, matches_prediction)` for `Stab(x)` in `PGL(V)(k)`.
    fn stabilizer(&self, py: Python<'_>) -> PyResult<(usize, usize, bool)> {
        let (s, x) = (&self.space, &self.x);
        py.detach(|| {
            let group = enumerate_pgl(s)?;
            let stab = stabilizer_bruteforce(s, &prepare(s, &group), x)?;
            let pred = stabilizer_predicted(s, &group, x)?;
            let unip = unipotent_elements(s, &stab)?;
            Ok((stab.len(), unip.len(), stab == pred))
        })
        .map_err(err)
    }

    fn __eq__(&self, other: &PyPoint) -> bool {
        self.space.field().modulus() == other.space.field().modulus() && self.x == other.x
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.x)
    }
}

/// The stratification of a variety with per-stratum point counts, exported
/// as `"json"`, `"dot"` or `"text"`.
#[pyfunction]
#[pyo3(signature = (variety_name, p, e, n, ms, format = "json", jobs = None, cache_dir = None))]
#[allow(clippy::too_many_arguments)]
fn strata(
    py: Python<'_>,
    variety_name: &str,
    p: u32,
    e: u32,
    n: usize,
    ms: Vec<u32>,
    format: &str,
    jobs: Option<usize>,
    cache_dir: Option<std::path::PathBuf>,
) -> PyResult<String> {
    let v = variety(variety_name)?;
    let fmt: Format = format.parse().map_err(err)?;
    let opts = AtlasOptions { jobs, cache_dir };
    py.detach(|| export(&build_atlas(v, p, e, n + 1, &ms, &opts)?, fmt)).map_err(err)
}

/// Runs the verification suites; returns `(passed, report_text)`.
#[pyfunction]
#[pyo3(signature = (p = 2, e = 1, n = vec![1, 2], ms = vec![1, 2], suites = None, seed = 0, perturbations = 1000))]
#[allow(clippy::too_many_arguments)]
fn verify(
    py: Python<'_>,
    p: u32,
    e: u32,
    n: Vec<usize>,
    ms: Vec<u32>,
    suites: Option<Vec<String>>,
    seed: u64,
    perturbations: usize,
) -> PyResult<(bool, String)> {
    let cfg = VerifyConfig {
        p,
        e,
        n_plus_1: n.iter().map(|n| n + 1).collect(),
        ms,
        suites,
        seed,
        perturbations,
        ..Default::default()
    };
    let rep = py.detach(|| verify_all(&cfg)).map_err(err)?;
    Ok((rep.passed(), rep.render_text()))
}

#[pymodule]
fn drinfeld(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpace>()?;
    m.add_class::<PyPoint>()?;
    m.add_function(wrap_pyfunction!(strata, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
