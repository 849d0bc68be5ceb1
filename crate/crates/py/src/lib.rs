//! Python bindings for the semantic basis engine: signal and base-set
//! types, the sparse coder, the bi-level decomposition solver, hierarchy
//! building, composition checks and the message-set algebra.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use sembase_core::coding::{self, CodingConfig};
use sembase_core::complexity::{self, ComplexityConfig};
use sembase_core::compose::{self, KnowledgeLog, Validator, ValidatorMode};
use sembase_core::decompose::{self as decompose_mod, DecomposeConfig};
use sembase_core::error::Error as CoreError;
use sembase_core::hierarchy::{self, HierarchyConfig};
use sembase_core::io::synth;
use sembase_core::message;
use sembase_core::signal;

fn to_py_err(e: CoreError) -> PyErr {
    match e {
        CoreError::Io(_) | CoreError::Json(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Signal", from_py_object)]
#[derive(Clone)]
struct PySignal {
    inner: signal::Signal,
}

#[pymethods]
impl PySignal {
    #[new]
    #[pyo3(signature = (values, grid=None, modality="signal"))]
    fn new(values: Vec<f64>, grid: Option<Vec<usize>>, modality: &str) -> PyResult<Self> {
        let grid = grid.unwrap_or_else(|| vec![values.len()]);
        Ok(Self {
            inner: signal::make_signal(values, grid, modality).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn grid(&self) -> Vec<usize> {
        self.inner.grid().to_vec()
    }

    #[getter]
    fn modality(&self) -> String {
        self.inner.modality().to_string()
    }

    #[getter]
    fn id(&self) -> u64 {
        self.inner.id()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Signal(d={}, grid={:?}, modality='{}')",
            self.inner.len(),
            self.inner.grid(),
            self.inner.modality()
        )
    }
}

#[pyclass(name = "SampleSet", from_py_object)]
#[derive(Clone)]
struct PySampleSet {
    inner: signal::SampleSet,
}

#[pymethods]
impl PySampleSet {
    #[new]
    #[pyo3(signature = (samples, seed=0))]
    fn new(samples: Vec<PySignal>, seed: u64) -> PyResult<Self> {
        let signals = samples.into_iter().map(|s| s.inner).collect();
        Ok(Self {
            inner: signal::SampleSet::new(signals, seed).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn samples(&self) -> Vec<PySignal> {
        self.inner
            .samples()
            .iter()
            .map(|s| PySignal { inner: s.clone() })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("SampleSet(n={}, d={})", self.inner.len(), self.inner.dim())
    }
}

#[pyclass(name = "SemanticBase", from_py_object)]
#[derive(Clone)]
struct PySemanticBase {
    inner: signal::SemanticBase,
}

#[pymethods]
impl PySemanticBase {
    /// Normalize an arbitrary vector into a unit-norm base.
    #[new]
    #[pyo3(signature = (vector, name=None, order=1))]
    fn new(vector: Vec<f64>, name: Option<String>, order: u32) -> PyResult<Self> {
        let mut base = signal::normalize_base(&vector)
            .map_err(to_py_err)?
            .with_order(order);
        if let Some(n) = name {
            base = base.with_name(n);
        }
        Ok(Self { inner: base })
    }

    #[getter]
    fn vector(&self) -> Vec<f64> {
        self.inner.vector().to_vec()
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.inner.name().map(str::to_string)
    }

    #[getter]
    fn order(&self) -> u32 {
        self.inner.order()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn __repr__(&self) -> String {
        format!(
            "SemanticBase(d={}, order={}, name={:?})",
            self.inner.len(),
            self.inner.order(),
            self.inner.name()
        )
    }
}

#[pyclass(name = "BaseSet", from_py_object)]
#[derive(Clone)]
struct PyBaseSet {
    inner: signal::BaseSet,
}

#[pymethods]
impl PyBaseSet {
    #[new]
    #[pyo3(signature = (bases, quant_bits=16))]
    fn new(bases: Vec<PySemanticBase>, quant_bits: u32) -> PyResult<Self> {
        let inner = signal::BaseSet::new(bases.into_iter().map(|b| b.inner).collect(), quant_bits)
            .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn quant_bits(&self) -> u32 {
        self.inner.quant_bits()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn bases(&self) -> Vec<PySemanticBase> {
        self.inner
            .bases()
            .iter()
            .map(|b| PySemanticBase { inner: b.clone() })
            .collect()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("BaseSet(n={}, d={})", self.inner.len(), self.inner.dim())
    }
}

#[pyclass(name = "Coefficients", from_py_object)]
#[derive(Clone)]
struct PyCoefficients {
    inner: signal::Coefficients,
}

#[pymethods]
impl PyCoefficients {
    /// Build a sparse coefficient vector from an {index: value} mapping.
    #[new]
    #[pyo3(signature = (entries, length, residual_norm=0.0))]
    fn new(entries: BTreeMap<usize, f64>, length: usize, residual_norm: f64) -> PyResult<Self> {
        Ok(Self {
            inner: signal::Coefficients::new(entries, length, residual_norm).map_err(to_py_err)?,
        })
    }

    fn entries(&self) -> BTreeMap<usize, f64> {
        self.inner.entries().clone()
    }

    fn to_dense(&self) -> Vec<f64> {
        self.inner.to_dense()
    }

    #[getter]
    fn residual_norm(&self) -> f64 {
        self.inner.residual_norm()
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Coefficients(nnz={}, len={}, residual={:.3e})",
            self.inner.nnz(),
            self.inner.len(),
            self.inner.residual_norm()
        )
    }
}

fn coding_config(sparsity: usize, ridge: f64) -> CodingConfig {
    CodingConfig { sparsity, ridge }
}

/// Sparse-code a signal against a base set (greedy selection plus exact
/// least squares on the support).
#[pyfunction]
#[pyo3(signature = (x, bases, sparsity=8, ridge=0.0))]
fn encode(
    x: &PySignal,
    bases: &PyBaseSet,
    sparsity: usize,
    ridge: f64,
) -> PyResult<PyCoefficients> {
    coding::encode(&x.inner, &bases.inner, &coding_config(sparsity, ridge))
        .map(|inner| PyCoefficients { inner })
        .map_err(to_py_err)
}

/// Weighted sum of the bases: the linear reconstruction of a code.
#[pyfunction]
fn reconstruct(coeffs: &PyCoefficients, bases: &PyBaseSet) -> PyResult<PySignal> {
    coding::reconstruct(&coeffs.inner, &bases.inner)
        .map(|inner| PySignal { inner })
        .map_err(to_py_err)
}

/// Mean squared error of the best sparse reconstruction of `x`.
#[pyfunction]
#[pyo3(signature = (x, bases, sparsity=8, ridge=0.0))]
fn cognitive_error(x: &PySignal, bases: &PyBaseSet, sparsity: usize, ridge: f64) -> PyResult<f64> {
    coding::cognitive_error(&x.inner, &bases.inner, &coding_config(sparsity, ridge))
        .map_err(to_py_err)
}

/// Average cognitive error over a sample set.
#[pyfunction]
#[pyo3(signature = (samples, bases, sparsity=8, ridge=0.0))]
fn avg_cognitive_error(
    samples: &PySampleSet,
    bases: &PyBaseSet,
    sparsity: usize,
    ridge: f64,
) -> PyResult<f64> {
    coding::avg_cognitive_error(
        &samples.inner,
        &bases.inner,
        &coding_config(sparsity, ridge),
    )
    .map_err(to_py_err)
}

#[allow(clippy::too_many_arguments)]
fn decompose_config(
    epsilon: f64,
    n_range: (usize, usize),
    restarts: usize,
    delta_d: f64,
    max_iters: usize,
    seed: u64,
    tau: f64,
) -> DecomposeConfig {
    DecomposeConfig {
        epsilon,
        n_range,
        restarts,
        delta_d,
        max_iters,
        seed,
        tau,
    }
}

fn result_to_dict(py: Python<'_>, result: &decompose_mod::DecomposeResult) -> PyResult<Py<PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item(
        "bases",
        PyBaseSet {
            inner: result.base_set.clone(),
        }
        .into_pyobject(py)?,
    )?;
    dict.set_item("diversity", result.diversity)?;
    dict.set_item("avg_error", result.avg_error)?;
    dict.set_item("objective", result.objective.total)?;
    dict.set_item("storage_bits", result.objective.storage_bits)?;
    dict.set_item(
        "avg_representation_bits",
        result.objective.avg_representation_bits,
    )?;
    dict.set_item("feasible", result.feasible)?;
    dict.set_item("selected", result.selected)?;
    let trace = PyList::empty(py);
    for t in &result.trace {
        let row = PyDict::new(py);
        row.set_item("n_k", t.n_k)?;
        row.set_item("restart", t.restart)?;
        row.set_item("avg_error", t.avg_error)?;
        row.set_item("diversity", t.diversity)?;
        row.set_item("objective", t.objective.total)?;
        row.set_item("feasible", t.feasible)?;
        trace.append(row)?;
    }
    dict.set_item("trace", trace)?;
    Ok(dict.unbind())
}

/// Solve the bi-level decomposition over a sample set. Returns a dict with
/// the selected bases, metrics and the per-candidate trace.
#[pyfunction]
#[pyo3(signature = (samples, epsilon, n_range, restarts=8, delta_d=0.01, max_iters=50,
                    seed=0, tau=0.1, sparsity=8, ridge=0.0, quant_bits=16, coeff_bits=16,
                    lam=1.0))]
#[allow(clippy::too_many_arguments)]
fn decompose(
    py: Python<'_>,
    samples: &PySampleSet,
    epsilon: f64,
    n_range: (usize, usize),
    restarts: usize,
    delta_d: f64,
    max_iters: usize,
    seed: u64,
    tau: f64,
    sparsity: usize,
    ridge: f64,
    quant_bits: u32,
    coeff_bits: u32,
    lam: f64,
) -> PyResult<Py<PyDict>> {
    let cfg = decompose_config(epsilon, n_range, restarts, delta_d, max_iters, seed, tau);
    let comp = ComplexityConfig {
        quant_bits,
        coeff_bits,
        lambda: lam,
    };
    let result = decompose_mod::solve(&samples.inner, &cfg, &coding_config(sparsity, ridge), &comp)
        .map_err(to_py_err)?;
    result_to_dict(py, &result)
}

/// Exhaustive oracle over a quantization grid; guarded to tiny instances.
#[pyfunction]
#[pyo3(signature = (samples, epsilon, n_range, levels, seed=0, tau=0.1, delta_d=0.01,
                    sparsity=1, ridge=0.0, quant_bits=16, coeff_bits=16, lam=1.0))]
#[allow(clippy::too_many_arguments)]
fn oracle_decompose(
    py: Python<'_>,
    samples: &PySampleSet,
    epsilon: f64,
    n_range: (usize, usize),
    levels: Vec<f64>,
    seed: u64,
    tau: f64,
    delta_d: f64,
    sparsity: usize,
    ridge: f64,
    quant_bits: u32,
    coeff_bits: u32,
    lam: f64,
) -> PyResult<Py<PyDict>> {
    let cfg = decompose_config(epsilon, n_range, 1, delta_d, 1, seed, tau);
    let comp = ComplexityConfig {
        quant_bits,
        coeff_bits,
        lambda: lam,
    };
    let result = decompose_mod::oracle_decompose(
        &samples.inner,
        &cfg,
        &coding_config(sparsity, ridge),
        &comp,
        &levels,
    )
    .map_err(to_py_err)?;
    result_to_dict(py, &result)
}

/// Storage-plus-representation objective of a base set on a corpus.
/// Returns (total, storage_bits, avg_representation_bits).
#[pyfunction]
#[pyo3(signature = (samples, bases, sparsity=8, ridge=0.0, quant_bits=16, coeff_bits=16, lam=1.0))]
#[allow(clippy::too_many_arguments)]
fn objective(
    samples: &PySampleSet,
    bases: &PyBaseSet,
    sparsity: usize,
    ridge: f64,
    quant_bits: u32,
    coeff_bits: u32,
    lam: f64,
) -> PyResult<(f64, f64, f64)> {
    let comp = ComplexityConfig {
        quant_bits,
        coeff_bits,
        lambda: lam,
    };
    let obj = complexity::objective(
        &samples.inner,
        &bases.inner,
        &coding_config(sparsity, ridge),
        &comp,
    )
    .map_err(to_py_err)?;
    Ok((obj.total, obj.storage_bits, obj.avg_representation_bits))
}

/// Build the iterated hierarchy; returns a dict with depth, the working
/// leaf bases, the decision list and the objective log.
#[pyfunction]
#[pyo3(signature = (samples, epsilon, n_range, restarts=8, delta_d=0.01, max_iters=50,
                    seed=0, tau=0.1, sparsity=8, ridge=0.0, quant_bits=16, coeff_bits=16,
                    lam=1.0, rho=0.9, min_subsample=8, depth_cap=4))]
#[allow(clippy::too_many_arguments)]
fn build_hierarchy(
    py: Python<'_>,
    samples: &PySampleSet,
    epsilon: f64,
    n_range: (usize, usize),
    restarts: usize,
    delta_d: f64,
    max_iters: usize,
    seed: u64,
    tau: f64,
    sparsity: usize,
    ridge: f64,
    quant_bits: u32,
    coeff_bits: u32,
    lam: f64,
    rho: f64,
    min_subsample: usize,
    depth_cap: usize,
) -> PyResult<Py<PyDict>> {
    let cfg = decompose_config(epsilon, n_range, restarts, delta_d, max_iters, seed, tau);
    let comp = ComplexityConfig {
        quant_bits,
        coeff_bits,
        lambda: lam,
    };
    let hier = HierarchyConfig {
        rho,
        min_subsample,
        depth_cap,
    };
    let build = hierarchy::build_hierarchy(
        &samples.inner,
        &cfg,
        &coding_config(sparsity, ridge),
        &comp,
        &hier,
    )
    .map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("depth", build.tree.depth())?;
    dict.set_item(
        "leaf_bases",
        PyBaseSet {
            inner: build.tree.leaf_set().clone(),
        }
        .into_pyobject(py)?,
    )?;
    dict.set_item("objective_log", build.objective_log.clone())?;
    let decisions = PyList::empty(py);
    for d in &build.decisions {
        let row = PyDict::new(py);
        row.set_item("path", d.path.clone())?;
        row.set_item("subsample_len", d.subsample_len)?;
        row.set_item("before_objective", d.before_objective)?;
        row.set_item("after_objective", d.after_objective)?;
        row.set_item("accepted", d.accepted)?;
        row.set_item("reason", d.reason.clone())?;
        decisions.append(row)?;
    }
    dict.set_item("decisions", decisions)?;
    Ok(dict.unbind())
}

fn parse_mode(mode: &str) -> PyResult<ValidatorMode> {
    match mode {
        "coefficient-range" => Ok(ValidatorMode::CoefficientRange),
        "signal-bounds" => Ok(ValidatorMode::SignalBounds),
        other => Err(PyValueError::new_err(format!(
            "unknown validator mode '{other}'"
        ))),
    }
}

/// Compose a signal from an explicit coefficient spec and verify it
/// against a training corpus. Returns (signal, verified, novel).
#[pyfunction]
#[pyo3(signature = (coeffs, bases, training, mode="coefficient-range", theta=None,
                    sparsity=8, ridge=0.0))]
#[allow(clippy::too_many_arguments)]
fn compose_and_verify(
    coeffs: &PyCoefficients,
    bases: &PyBaseSet,
    training: &PySampleSet,
    mode: &str,
    theta: Option<f64>,
    sparsity: usize,
    ridge: f64,
) -> PyResult<(PySignal, bool, bool)> {
    let mode = parse_mode(mode)?;
    let validator = Validator::from_training(
        &training.inner,
        &bases.inner,
        &coding_config(sparsity, ridge),
        mode,
        theta,
    )
    .map_err(to_py_err)?;
    let candidate = compose::compose(&coeffs.inner, &bases.inner).map_err(to_py_err)?;
    let (verified, novel) = compose::verify(&candidate, &coeffs.inner, &validator, &training.inner)
        .map_err(to_py_err)?;
    Ok((PySignal { inner: candidate }, verified, novel))
}

/// Run a discovery sequence: compose, verify and journal each spec.
/// Returns the number of records the journal gained.
#[pyfunction]
#[pyo3(signature = (specs, bases, training, mode="coefficient-range", theta=None,
                    sparsity=8, ridge=0.0))]
#[allow(clippy::too_many_arguments)]
fn discover_all(
    specs: Vec<PyCoefficients>,
    bases: &PyBaseSet,
    training: &PySampleSet,
    mode: &str,
    theta: Option<f64>,
    sparsity: usize,
    ridge: f64,
) -> PyResult<usize> {
    let mode = parse_mode(mode)?;
    let validator = Validator::from_training(
        &training.inner,
        &bases.inner,
        &coding_config(sparsity, ridge),
        mode,
        theta,
    )
    .map_err(to_py_err)?;
    let mut log = KnowledgeLog::new();
    for spec in &specs {
        compose::discover(
            &spec.inner,
            &bases.inner,
            &validator,
            &training.inner,
            &mut log,
        )
        .map_err(to_py_err)?;
    }
    Ok(log.len())
}

/// Split a message into (information, knowledge, dark) for a receiver.
#[pyfunction]
fn partition(
    universe: Vec<String>,
    message_symbols: Vec<String>,
    knowledge: Vec<String>,
    codebook: Vec<String>,
) -> PyResult<(Vec<String>, Vec<String>, Vec<String>)> {
    let u = message::Universe::new(universe).map_err(to_py_err)?;
    let m = message::Message::new(message_symbols, &u).map_err(to_py_err)?;
    let r = message::ReceiverState::new(knowledge, codebook, &u).map_err(to_py_err)?;
    let p = message::partition(&m, &r);
    Ok((
        p.information.into_iter().collect(),
        p.knowledge_part.into_iter().collect(),
        p.dark.into_iter().collect(),
    ))
}

/// True when the image signal matches the original within `tol`.
#[pyfunction]
#[pyo3(signature = (image, original, tol=0.0))]
fn understanding(image: &PySignal, original: &PySignal, tol: f64) -> PyResult<bool> {
    message::understanding(&image.inner, &original.inner, tol)
        .map(|u| u == message::Understanding::Correct)
        .map_err(to_py_err)
}

/// Synthesize a seeded corpus. `kind` is one of "atoms", "hierarchy",
/// "pure"; returns (samples, planted_atoms).
#[pyfunction]
#[pyo3(signature = (kind, d, n, seed=0, atoms=3, noise=0.0, parents=2))]
fn synthesize(
    kind: &str,
    d: usize,
    n: usize,
    seed: u64,
    atoms: usize,
    noise: f64,
    parents: usize,
) -> PyResult<(PySampleSet, Vec<Vec<f64>>)> {
    let spec = match kind {
        "atoms" => synth::GeneratorSpec::Atoms { atoms, d, n, noise },
        "hierarchy" => synth::GeneratorSpec::Hierarchy { parents, d, n },
        "pure" => synth::GeneratorSpec::Pure { d, n },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown generator '{other}'"
            )))
        }
    };
    let (set, truth) = synth::synthesize(&spec, seed).map_err(to_py_err)?;
    Ok((PySampleSet { inner: set }, truth.atoms))
}

#[pymodule]
fn sembase(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySignal>()?;
    m.add_class::<PySampleSet>()?;
    m.add_class::<PySemanticBase>()?;
    m.add_class::<PyBaseSet>()?;
    m.add_class::<PyCoefficients>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(cognitive_error, m)?)?;
    m.add_function(wrap_pyfunction!(avg_cognitive_error, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(build_hierarchy, m)?)?;
    m.add_function(wrap_pyfunction!(compose_and_verify, m)?)?;
    m.add_function(wrap_pyfunction!(discover_all, m)?)?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(understanding, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    Ok(())
}
