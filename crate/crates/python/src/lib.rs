//! Python bindings: relations, blocks, arrays, the searches and the descent.

use std::path::PathBuf;
use std::sync::Arc;

use bqo_core::arrays::{is_bad, le_prime, lt_dot_prime, lt_prime, normalize_array};
use bqo_core::blocks::{self, first_departure};
use bqo_core::format::{self, ArrayDoc, BlockDoc, RelationDoc, TargetDoc, Text, TraceDoc};
use bqo_core::relations::{self, check_relation, rado_order};
use bqo_core::search::{self, DescentStatus, Minimality, SearchContext};
use bqo_core::{BlockArray, Error, FinSeq, FiniteRelation, PartialRanking, Target, Window, WindowedBlock};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(bqo, BqoError, PyValueError, "Any failure reported by the library.");
create_exception!(
    bqo,
    BudgetError,
    BqoError,
    "A search ran out of budget before deciding."
);

const DEFAULT_BUDGET: u64 = 10_000_000;

fn err(e: Error) -> PyErr {
    match e {
        Error::Budget(_) => BudgetError::new_err(e.to_string()),
        _ => BqoError::new_err(e.to_string()),
    }
}

fn window(points: Vec<u32>) -> PyResult<Window> {
    Window::new(points).map_err(err)
}

fn seq(points: Vec<u32>) -> PyResult<FinSeq> {
    FinSeq::new(points).map_err(err)
}

fn context(budget: u64, jobs: usize, fixed_window: bool) -> SearchContext {
    let ctx = SearchContext::new(budget, jobs.max(1));
    if fixed_window {
        ctx.with_fixed_window()
    } else {
        ctx
    }
}

/// A finite reflexive relation on labelled points.
#[pyclass(name = "Relation", module = "bqo", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRelation {
    inner: FiniteRelation,
}

#[pymethods]
impl PyRelation {
    #[new]
    #[pyo3(signature = (labels, pairs=Vec::new(), reflexive=true))]
    fn new(labels: Vec<String>, pairs: Vec<(String, String)>, reflexive: bool) -> PyResult<Self> {
        let mut r = FiniteRelation::new(labels);
        if reflexive {
            for p in 0..r.size() {
                r.insert(p, p).map_err(err)?;
            }
        }
        for (a, b) in pairs {
            let idx = |l: &str| {
                r.index_of(l)
                    .ok_or_else(|| BqoError::new_err(format!("unknown label `{l}`")))
            };
            let (p, q) = (idx(&a)?, idx(&b)?);
            r.insert(p, q).map_err(err)?;
        }
        Ok(PyRelation { inner: r })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        format::load_relation(&path)
            .map(|inner| PyRelation { inner })
            .map_err(err)
    }

    /// The Rado order on pairs `i < j < n`.
    #[staticmethod]
    fn rado(n: usize) -> PyResult<Self> {
        rado_order(n).map(|inner| PyRelation { inner }).map_err(err)
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn holds(&self, a: &str, b: &str) -> PyResult<bool> {
        let idx = |l: &str| {
            self.inner
                .index_of(l)
                .ok_or_else(|| BqoError::new_err(format!("unknown label `{l}`")))
        };
        Ok(self.inner.contains(idx(a)?, idx(b)?))
    }

    /// Order properties as a dict of booleans.
    fn check<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rep = check_relation(&self.inner);
        let d = PyDict::new(py);
        d.set_item("reflexive", rep.reflexive)?;
        d.set_item("transitive", rep.transitive)?;
        d.set_item("antisymmetric", rep.antisymmetric)?;
        d.set_item("partial_order", rep.partial_order)?;
        d.set_item("well_founded", rep.well_founded)?;
        Ok(d)
    }

    fn to_toml(&self) -> PyResult<String> {
        format::to_toml(&RelationDoc::from_relation(&self.inner)).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.size()
    }

    fn __repr__(&self) -> String {
        format!(
            "Relation({} points, {} pairs)",
            self.inner.size(),
            self.inner.pair_count()
        )
    }
}

/// A relation together with a partial ranking of it.
#[pyclass(name = "Target", module = "bqo", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTarget {
    inner: Arc<Target>,
}

#[pymethods]
impl PyTarget {
    /// `below` lists the pairs `(p, q)` with `p <′ q`; the ranking is their
    /// reflexive closure, which must already be transitive.
    #[new]
    #[pyo3(signature = (relation, below=Vec::new()))]
    fn new(relation: &PyRelation, below: Vec<(String, String)>) -> PyResult<Self> {
        let r = &relation.inner;
        let mut order = FiniteRelation::new(r.labels().to_vec());
        for p in 0..r.size() {
            order.insert(p, p).map_err(err)?;
        }
        for (a, b) in below {
            let idx = |l: &str| {
                r.index_of(l)
                    .ok_or_else(|| BqoError::new_err(format!("unknown label `{l}`")))
            };
            let (p, q) = (idx(&a)?, idx(&b)?);
            order.insert(p, q).map_err(err)?;
        }
        let target = Target::new(r.clone(), PartialRanking::from_relation(order)).map_err(err)?;
        Ok(PyTarget {
            inner: Arc::new(target),
        })
    }

    #[getter]
    fn relation(&self) -> PyRelation {
        PyRelation {
            inner: self.inner.relation().clone(),
        }
    }

    fn below(&self, a: &str, b: &str) -> PyResult<bool> {
        let idx = |l: &str| {
            self.inner
                .index_of(l)
                .ok_or_else(|| BqoError::new_err(format!("unknown label `{l}`")))
        };
        Ok(self.inner.ranking().lt(idx(a)?, idx(b)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "Target({} points, ranking {})",
            self.inner.size(),
            if self.inner.ranking().is_identity() {
                "identity"
            } else {
                "given"
            }
        )
    }
}

/// A block of finite increasing sequences over a finite window.
#[pyclass(name = "Block", module = "bqo", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyBlock {
    inner: WindowedBlock,
}

#[pymethods]
impl PyBlock {
    #[new]
    fn new(window_points: Vec<u32>, rank: usize, elements: Vec<Vec<u32>>) -> PyResult<Self> {
        let elements = elements.into_iter().map(seq).collect::<PyResult<Vec<_>>>()?;
        Ok(PyBlock {
            inner: WindowedBlock::new(window(window_points)?, rank, elements),
        })
    }

    /// All `k`-element subsets of the window.
    #[staticmethod]
    fn uniform(window_points: Vec<u32>, k: usize) -> PyResult<Self> {
        Ok(PyBlock {
            inner: WindowedBlock::uniform(window(window_points)?, k),
        })
    }

    #[staticmethod]
    fn singletons(window_points: Vec<u32>) -> PyResult<Self> {
        Ok(PyBlock {
            inner: WindowedBlock::singletons(window(window_points)?),
        })
    }

    #[staticmethod]
    fn schreier(window_points: Vec<u32>, rank: usize) -> PyResult<Self> {
        Ok(PyBlock {
            inner: WindowedBlock::schreier(window(window_points)?, rank),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        format::load_block(&path).map(|inner| PyBlock { inner }).map_err(err)
    }

    #[getter]
    fn window(&self) -> Vec<u32> {
        self.inner.window().points().to_vec()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    #[getter]
    fn elements(&self) -> Vec<Vec<u32>> {
        self.inner.elements().iter().map(|s| s.as_slice().to_vec()).collect()
    }

    fn is_valid(&self) -> bool {
        self.inner.is_valid()
    }

    /// Why the block is invalid, or `"valid"`.
    fn validate(&self) -> String {
        self.inner.validate().summary()
    }

    fn is_barrier(&self) -> PyResult<bool> {
        self.inner.is_barrier().map_err(err)
    }

    fn has_triangle_pair(&self) -> bool {
        self.inner.has_triangle_pair()
    }

    fn to_toml(&self) -> PyResult<String> {
        format::to_toml(&BlockDoc::from_block(&self.inner)).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Block(window={}, rank={}, {})",
            self.inner.window(),
            self.inner.rank(),
            self.inner
        )
    }
}

/// A value map on a block, together with its target.
#[pyclass(name = "Array", module = "bqo", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyArray {
    inner: BlockArray,
    doc: TargetDoc,
}

impl PyArray {
    fn inline(inner: BlockArray) -> Self {
        let doc = TargetDoc::inline(inner.target());
        PyArray { inner, doc }
    }

    fn nearby(&self, inner: BlockArray) -> Self {
        PyArray {
            inner,
            doc: self.doc.clone(),
        }
    }
}

#[pymethods]
impl PyArray {
    #[new]
    fn new(block: &PyBlock, values: Vec<String>, target: &PyTarget) -> PyResult<Self> {
        let t = &target.inner;
        let values = values
            .iter()
            .map(|l| {
                t.index_of(l)
                    .ok_or_else(|| BqoError::new_err(format!("unknown label `{l}`")))
            })
            .collect::<PyResult<Vec<_>>>()?;
        let f = BlockArray::new(block.inner.clone(), values, t.clone()).map_err(err)?;
        Ok(PyArray::inline(f))
    }

    #[staticmethod]
    #[pyo3(signature = (path, gadget_cap=50_000))]
    fn load(path: PathBuf, gadget_cap: u64) -> PyResult<Self> {
        let loaded = format::load_array(&path, gadget_cap).map_err(err)?;
        Ok(PyArray {
            inner: loaded.array,
            doc: loaded.target.doc,
        })
    }

    /// Parses an array document given as TOML or JSON text.
    #[staticmethod]
    #[pyo3(signature = (body, gadget_cap=50_000))]
    fn parse(body: String, gadget_cap: u64) -> PyResult<Self> {
        let text = Text::new("<string>", body).map_err(err)?;
        let loaded = format::parse::<ArrayDoc>(&text)
            .and_then(|doc| doc.load(&text, gadget_cap))
            .map_err(err)?;
        Ok(PyArray {
            inner: loaded.array,
            doc: loaded.target.doc,
        })
    }

    #[getter]
    fn block(&self) -> PyBlock {
        PyBlock {
            inner: self.inner.block().clone(),
        }
    }

    /// `(element, label)` pairs in block order.
    #[getter]
    fn values(&self) -> Vec<(Vec<u32>, String)> {
        format::value_pairs(&self.inner)
            .into_iter()
            .map(|(s, l)| (s.into_vec(), l))
            .collect()
    }

    /// The value on any finite set with a prefix in the block.
    fn evaluate(&self, s: Vec<u32>) -> PyResult<String> {
        let v = self.inner.evaluate(&s).map_err(err)?;
        Ok(self.inner.target().label(v).to_string())
    }

    fn is_bad(&self) -> PyResult<bool> {
        Ok(is_bad(&self.inner).map_err(err)?.bad_in_window)
    }

    /// A pair `s ◁ t` whose values are related, if any.
    fn good_pair(&self) -> PyResult<Option<(Vec<u32>, Vec<u32>)>> {
        Ok(is_bad(&self.inner)
            .map_err(err)?
            .witness
            .map(|(s, t)| (s.into_vec(), t.into_vec())))
    }

    fn to_toml(&self) -> PyResult<String> {
        format::to_toml(&ArrayDoc::from_array(&self.inner, self.doc.clone())).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        format::to_json(&ArrayDoc::from_array(&self.inner, self.doc.clone())).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.block().len()
    }

    fn __repr__(&self) -> String {
        format!("Array({})", self.inner)
    }
}

/// Outcome of a minimality check.
#[pyclass(name = "Minimality", module = "bqo", frozen, get_all)]
struct PyMinimality {
    minimal: bool,
    counterexample: Option<PyArray>,
}

#[pymethods]
impl PyMinimality {
    fn __bool__(&self) -> bool {
        self.minimal
    }

    fn __repr__(&self) -> String {
        match &self.counterexample {
            None => "Minimality(minimal)".into(),
            Some(g) => format!("Minimality(not minimal, below: {})", g.inner),
        }
    }
}

fn minimality(f: &PyArray, m: Minimality) -> PyMinimality {
    PyMinimality {
        minimal: m.minimal,
        counterexample: m.counterexample.map(|g| f.nearby(g)),
    }
}

/// A descent run: the chain of arrays and its departure points.
#[pyclass(name = "Trace", module = "bqo", frozen)]
struct PyTrace {
    inner: search::DescentTrace,
    doc: TargetDoc,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn status(&self) -> &'static str {
        match self.inner.status {
            DescentStatus::TerminatedMinimal => "terminated-minimal",
            DescentStatus::StepLimit => "step-limit",
            DescentStatus::WindowExhausted => "window-exhausted",
        }
    }

    #[getter]
    fn p_values(&self) -> Vec<u32> {
        self.inner.p_values.clone()
    }

    #[getter]
    fn chain(&self) -> Vec<PyArray> {
        self.inner
            .chain
            .iter()
            .map(|f| PyArray {
                inner: f.clone(),
                doc: self.doc.clone(),
            })
            .collect()
    }

    /// The trace document with every step rechecked, as JSON.
    fn to_json(&self) -> PyResult<String> {
        let doc = TraceDoc::new(&self.inner, self.doc.clone()).map_err(err)?;
        format::to_json(&doc).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.chain.len()
    }

    fn __repr__(&self) -> String {
        format!("Trace({}, p = {:?})", self.status(), self.inner.p_values)
    }
}

/// `s ◁ t`: some `X` has `s ⊑ X` and `t ⊑ X⁻`.
#[pyfunction]
fn triangle(s: Vec<u32>, t: Vec<u32>) -> PyResult<bool> {
    let (s, t) = (seq(s)?, seq(t)?);
    Ok(blocks::triangle_raw(s.as_slice(), t.as_slice()))
}

/// `b ≤̇ c`.
#[pyfunction]
fn le_dot(b: &PyBlock, c: &PyBlock) -> bool {
    blocks::le_dot(&b.inner, &c.inner)
}

/// `b ⋖ c`.
#[pyfunction]
fn lt_dot(b: &PyBlock, c: &PyBlock) -> bool {
    blocks::lt_dot(&b.inner, &c.inner)
}

/// The least point at which `c` departs from `b`.
#[pyfunction]
fn departure(c: &PyBlock, b: &PyBlock) -> PyResult<u32> {
    first_departure(&c.inner, &b.inner).map_err(err)
}

/// The block `C ∪ E(C, B, n)`.
#[pyfunction]
fn surgery(c: &PyBlock, b: &PyBlock, n: u32) -> PyResult<PyBlock> {
    Ok(PyBlock {
        inner: blocks::surgery(&c.inner, &b.inner, n).map_err(err)?.block,
    })
}

/// `f ≤′ g`.
#[pyfunction]
fn le_rank(f: &PyArray, g: &PyArray) -> PyResult<bool> {
    le_prime(&f.inner, &g.inner).map_err(err)
}

/// `f <′ g`.
#[pyfunction]
fn lt_rank(f: &PyArray, g: &PyArray) -> PyResult<bool> {
    lt_prime(&f.inner, &g.inner).map_err(err)
}

/// `f ⋖′ g`.
#[pyfunction]
fn lt_refine(f: &PyArray, g: &PyArray) -> PyResult<bool> {
    lt_dot_prime(&f.inner, &g.inner).map_err(err)
}

/// Re-expresses a bad `g <′ f` on a block refining that of `f`.
#[pyfunction]
fn normalize(f: &PyArray, g: &PyArray) -> PyResult<PyArray> {
    let n = normalize_array(&f.inner, &g.inner).map_err(err)?;
    Ok(g.nearby(n.array))
}

/// Pouzet's lift of a ranked relation to a well-founded partial order
/// contained in it and containing the ranking.
#[pyfunction]
fn lift(target: &PyTarget) -> PyResult<PyRelation> {
    let rk = target.inner.ranking();
    let o = relations::linearize_ranking(rk).map_err(err)?;
    let inner = relations::pouzet_lift(target.inner.relation(), rk, &o).map_err(err)?;
    Ok(PyRelation { inner })
}

/// A bad sequence of the given length, as labels.
#[pyfunction]
#[pyo3(signature = (relation, length, budget=DEFAULT_BUDGET))]
fn find_bad_sequence(relation: &PyRelation, length: usize, budget: u64) -> PyResult<Option<Vec<String>>> {
    let found = search::find_bad_sequence(&relation.inner, length, &mut context(budget, 1, false)).map_err(err)?;
    Ok(found.map(|s| s.into_iter().map(|p| relation.inner.label(p).to_string()).collect()))
}

/// The canonically first bad array over exactly `window` with rank at most `rank`.
#[pyfunction]
#[pyo3(signature = (target, window_points, rank, budget=DEFAULT_BUDGET, jobs=1))]
fn find_bad_array(
    py: Python<'_>,
    target: &PyTarget,
    window_points: Vec<u32>,
    rank: usize,
    budget: u64,
    jobs: usize,
) -> PyResult<Option<PyArray>> {
    let w = window(window_points)?;
    let t = target.inner.clone();
    let found = py
        .detach(|| search::find_bad_array(&t, &w, rank, &mut context(budget, jobs, false)))
        .map_err(err)?;
    Ok(found.map(PyArray::inline))
}

#[pyfunction]
#[pyo3(signature = (array, rank=None, budget=DEFAULT_BUDGET, fixed_window=false))]
fn is_simpson_minimal(
    py: Python<'_>,
    array: &PyArray,
    rank: Option<usize>,
    budget: u64,
    fixed_window: bool,
) -> PyResult<PyMinimality> {
    let rank = rank.unwrap_or(array.inner.block().rank());
    let f = array.inner.clone();
    let m = py
        .detach(|| search::is_simpson_minimal(&f, rank, &mut context(budget, 1, fixed_window)))
        .map_err(err)?;
    Ok(minimality(array, m))
}

#[pyfunction]
#[pyo3(signature = (array, rank=None, budget=DEFAULT_BUDGET, fixed_window=false))]
fn is_laver_minimal(
    py: Python<'_>,
    array: &PyArray,
    rank: Option<usize>,
    budget: u64,
    fixed_window: bool,
) -> PyResult<PyMinimality> {
    let rank = rank.unwrap_or(array.inner.block().rank() + 1);
    let f = array.inner.clone();
    let m = py
        .detach(|| search::is_laver_minimal(&f, rank, &mut context(budget, 1, fixed_window)))
        .map_err(err)?;
    Ok(minimality(array, m))
}

/// Runs the descent from a bad array.
#[pyfunction]
#[pyo3(signature = (array, rank=None, max_steps=20, budget=DEFAULT_BUDGET, fixed_window=false))]
fn descend(
    py: Python<'_>,
    array: &PyArray,
    rank: Option<usize>,
    max_steps: usize,
    budget: u64,
    fixed_window: bool,
) -> PyResult<PyTrace> {
    let rank = rank.unwrap_or(array.inner.block().rank() + 1);
    let f = array.inner.clone();
    let inner = py
        .detach(|| search::run_descent(&f, max_steps, rank, &mut context(budget, 1, fixed_window)))
        .map_err(err)?;
    Ok(PyTrace {
        inner,
        doc: array.doc.clone(),
    })
}

#[pymodule]
fn bqo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BqoError", m.py().get_type::<BqoError>())?;
    m.add("BudgetError", m.py().get_type::<BudgetError>())?;
    m.add_class::<PyRelation>()?;
    m.add_class::<PyTarget>()?;
    m.add_class::<PyBlock>()?;
    m.add_class::<PyArray>()?;
    m.add_class::<PyMinimality>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(triangle, m)?)?;
    m.add_function(wrap_pyfunction!(le_dot, m)?)?;
    m.add_function(wrap_pyfunction!(lt_dot, m)?)?;
    m.add_function(wrap_pyfunction!(departure, m)?)?;
    m.add_function(wrap_pyfunction!(surgery, m)?)?;
    m.add_function(wrap_pyfunction!(le_rank, m)?)?;
    m.add_function(wrap_pyfunction!(lt_rank, m)?)?;
    m.add_function(wrap_pyfunction!(lt_refine, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    m.add_function(wrap_pyfunction!(find_bad_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(find_bad_array, m)?)?;
    m.add_function(wrap_pyfunction!(is_simpson_minimal, m)?)?;
    m.add_function(wrap_pyfunction!(is_laver_minimal, m)?)?;
    m.add_function(wrap_pyfunction!(descend, m)?)?;
    Ok(())
}
