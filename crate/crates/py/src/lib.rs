//! Python bindings: `import skgraph`.
//!
//! Structured results cross the boundary as JSON and are decoded with
//! `json.loads`, so Python callers get plain dicts and lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;
use skg_core::annotator;
use skg_core::metrics::{compare_extractions, AliasTable, Extraction};
use skg_core::queries::{self, CascadeDirection, QueryError};
use skg_core::seo::score_linguistic;

fn loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn query_err(e: QueryError) -> PyErr {
    match e {
        QueryError::KeyError(m) => PyKeyError::new_err(m),
        QueryError::RangeError(m) => PyValueError::new_err(m),
    }
}

fn node_key(s: &str) -> PyResult<skg_core::NodeKey> {
    s.parse().map_err(|e: skg_core::GraphError| PyKeyError::new_err(e.to_string()))
}

fn required<'a>(value: Option<&'a str>, query: &str, arg: &str) -> PyResult<&'a str> {
    value.ok_or_else(|| PyValueError::new_err(format!("{query} requires `{arg}`")))
}

#[pyclass(name = "SeoDocument", module = "skgraph", from_py_object)]
#[derive(Clone)]
struct PySeoDocument {
    inner: skg_core::SeoDocument,
}

#[pymethods]
impl PySeoDocument {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        skg_core::parse_seo(text.as_bytes())
            .map(|inner| PySeoDocument { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        skg_core::parse_seo(&bytes)
            .map(|inner| PySeoDocument { inner })
            .map_err(value_err)
    }

    #[getter]
    fn session_mode(&self) -> &'static str {
        self.inner.session_mode.as_str()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    /// Validation issues as a list of dicts; empty when the document is valid.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, &queries::to_json(&skg_core::validate_seo(&self.inner)))
    }

    fn compile(&self, subgraph: &str) -> PyResult<PyMergePlan> {
        annotator::compile(&self.inner, subgraph, &skg_core::builtin_registry())
            .map(|inner| PyMergePlan { inner })
            .map_err(value_err)
    }

    fn failure_mode_names(&self) -> Vec<String> {
        self.inner.failure_modes().map(|(_, fm)| fm.name.clone()).collect()
    }
}

#[pyclass(name = "MergePlan", module = "skgraph", skip_from_py_object)]
#[derive(Clone)]
struct PyMergePlan {
    inner: annotator::MergePlan,
}

#[pymethods]
impl PyMergePlan {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        annotator::MergePlan::from_json(text)
            .map(|inner| PyMergePlan { inner })
            .map_err(value_err)
    }

    #[getter]
    fn subgraph(&self) -> &str {
        &self.inner.subgraph
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn emit_cypher(&self) -> String {
        annotator::emit_cypher(&self.inner)
    }

    fn count_label(&self, label: &str) -> usize {
        self.inner.count_label(label)
    }

    fn __len__(&self) -> usize {
        self.inner.statements.len() + self.inner.pending_edges.len()
    }
}

#[pyclass(name = "Graph", module = "skgraph", skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: skg_core::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new() -> Self {
        PyGraph {
            inner: skg_core::Graph::new(skg_core::builtin_registry().version),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        skg_core::Graph::load(&path)
            .map(|inner| PyGraph { inner })
            .map_err(|e| PyOSError::new_err(e.to_string()))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner
            .save(&path)
            .map(|_| ())
            .map_err(|e| PyOSError::new_err(e.to_string()))
    }

    /// Returns a new graph with the plan merged in.
    fn apply(&self, plan: &PyMergePlan) -> PyResult<PyGraph> {
        annotator::apply(&plan.inner, &self.inner, &skg_core::builtin_registry())
            .map(|inner| PyGraph { inner })
            .map_err(value_err)
    }

    /// Returns a new graph with every pending edge approved.
    fn converge(&self) -> PyResult<PyGraph> {
        let selectors: Vec<_> = self.inner.pending_edges().map(|e| e.key()).collect();
        annotator::approve_pending(&self.inner, &selectors)
            .map(|inner| PyGraph { inner })
            .map_err(value_err)
    }

    fn graph_hash(&self) -> String {
        self.inner.graph_hash()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn pending_count(&self) -> usize {
        self.inner.pending_edges().count()
    }

    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let report = skg_core::validate_graph(&self.inner, &skg_core::builtin_registry());
        loads(py, &queries::to_json(&report))
    }

    /// Runs one query class (`q1` .. `q7`) and returns its rows.
    #[pyo3(signature = (name, subgraph=None, step=None, root=None, depth=2, direction="downstream", threshold=0.60))]
    #[allow(clippy::too_many_arguments)]
    fn query<'py>(
        &self,
        py: Python<'py>,
        name: &str,
        subgraph: Option<&str>,
        step: Option<&str>,
        root: Option<&str>,
        depth: usize,
        direction: &str,
        threshold: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let g = &self.inner;
        let sg = |default: &'static str| subgraph.unwrap_or(default);
        let text = match name {
            "q1" => queries::to_json(&queries::q_ranked_failures(g, sg(queries::ELISA_SUBGRAPH)).map_err(query_err)?),
            "q5" => queries::to_json(&queries::q_ranked_failures(g, sg(queries::LCMS_SUBGRAPH)).map_err(query_err)?),
            "q2" => {
                let step = node_key(required(step, name, "step")?)?;
                queries::to_json(&queries::q2_decision_logic(g, &step).map_err(query_err)?)
            }
            "q3" => {
                let root = node_key(required(root, name, "root")?)?;
                let direction: CascadeDirection = direction.parse().map_err(PyValueError::new_err)?;
                queries::to_json(&queries::q3_cascade(g, &root, depth, direction).map_err(query_err)?)
            }
            "q4a" => queries::to_json(&queries::q4a_coverage_gaps(g, sg(queries::ELISA_SUBGRAPH))),
            "q4b" => queries::to_json(
                &queries::q4b_confidence_floor(g, sg(queries::LCMS_SUBGRAPH), threshold).map_err(query_err)?,
            ),
            "q6" => queries::to_json(&queries::q6_masking_audit(g)),
            "q7" => queries::to_json(&queries::q7_shared_assets(g)),
            other => return Err(PyValueError::new_err(format!("unknown query `{other}`"))),
        };
        loads(py, &text)
    }

    fn stats<'py>(&self, py: Python<'py>, subgraph: &str) -> PyResult<Bound<'py, PyAny>> {
        let stats = queries::subgraph_stats(&self.inner, subgraph).map_err(query_err)?;
        loads(py, &queries::to_json(&stats))
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={}, hash={})",
            self.inner.node_count(),
            self.inner.edge_count(),
            &self.inner.graph_hash()[..12]
        )
    }
}

/// Linguistic confidence for an expert phrase: `(confidence, band, matched)`.
#[pyfunction]
fn score_phrase(phrase: &str) -> PyResult<(f64, String, String)> {
    let s = score_linguistic(phrase).map_err(value_err)?;
    Ok((s.confidence.to_f64(), s.band, s.matched))
}

/// Failure-mode agreement of candidate documents against a reference
/// document, or pairwise across candidates when `reference` is None.
#[pyfunction]
#[pyo3(signature = (runs, reference=None))]
fn consistency<'py>(
    py: Python<'py>,
    runs: Vec<PySeoDocument>,
    reference: Option<PySeoDocument>,
) -> PyResult<Bound<'py, PyAny>> {
    let runs: Vec<Extraction> = runs.into_iter().map(|d| Extraction::Document(d.inner)).collect();
    let reference = reference.map(|d| Extraction::Document(d.inner));
    let report = compare_extractions(&runs, reference.as_ref(), AliasTable::builtin()).map_err(value_err)?;
    loads(py, &report.to_json())
}

#[pymodule]
fn skgraph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PySeoDocument>()?;
    m.add_class::<PyMergePlan>()?;
    m.add_function(wrap_pyfunction!(score_phrase, m)?)?;
    m.add_function(wrap_pyfunction!(consistency, m)?)?;
    m.add("REGISTRY_VERSION", skg_core::ontology::REGISTRY_VERSION)?;
    Ok(())
}
