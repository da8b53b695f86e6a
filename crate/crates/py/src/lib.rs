//! Python bindings for the scheduling toolkit: interference graphs and
//! their combinatorial parameters, arrival models, stability regions,
//! priority synthesis, decompositions, delay exponents, and the slotted
//! simulator.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use priosched::engine::{self, Priority, PriorityDistribution, PrioritySpec};
use priosched::geometry;
use priosched::graph::{self, DeltaMode, InterferenceGraph};
use priosched::synth::{self, StablePriorityOutcome};
use priosched::traffic::ArrivalModel;
use priosched::delay::{self, Exponent};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Undirected conflict graph over links `0..link_count`.
#[pyclass(name = "Graph", skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: InterferenceGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(links: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self {
            inner: InterferenceGraph::new(links, &edges).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: InterferenceGraph::from_text(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn complete(links: usize) -> PyResult<Self> {
        Ok(Self {
            inner: InterferenceGraph::complete(links).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn star(leaves: usize) -> PyResult<Self> {
        Ok(Self {
            inner: InterferenceGraph::star(leaves).map_err(value_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn link_count(&self) -> usize {
        self.inner.link_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges()
    }

    fn neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        self.inner.check_index(i).map_err(value_err)?;
        Ok(self.inner.neighbors(i).to_vec())
    }

    fn is_independent(&self, members: Vec<usize>) -> PyResult<bool> {
        graph::is_independent(&self.inner, &members).map_err(value_err)
    }

    fn maximal_independent_sets(&self) -> PyResult<Vec<Vec<usize>>> {
        Ok(graph::enumerate_maximal_sets(&self.inner)
            .map_err(value_err)?
            .into_iter()
            .map(|s| s.members().to_vec())
            .collect())
    }

    fn max_weight_independent_set(&self, weights: Vec<f64>) -> PyResult<Vec<usize>> {
        Ok(graph::max_weight_independent_set(&self.inner, &weights)
            .map_err(value_err)?
            .members()
            .to_vec())
    }

    fn interference_degree(&self, i: usize) -> PyResult<usize> {
        graph::interference_degree(&self.inner, i).map_err(value_err)
    }

    /// (delta, removal order, per-step degrees); `mode` is "greedy" or
    /// "brute".
    #[pyo3(signature = (mode = "greedy"))]
    fn delta(&self, mode: &str) -> PyResult<(usize, Vec<usize>, Vec<usize>)> {
        let mode = match mode {
            "greedy" => DeltaMode::Greedy,
            "brute" => DeltaMode::Brute,
            other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
        };
        let (value, seq) = graph::compute_delta(&self.inner, mode).map_err(value_err)?;
        Ok((value, seq.order, seq.per_step_degree))
    }

    /// (floor, delta, witness priority ranks).
    fn efficiency_floor(&self) -> PyResult<(f64, usize, Vec<usize>)> {
        let f = synth::efficiency_floor(&self.inner).map_err(value_err)?;
        Ok((f.floor, f.delta, f.priority.ranks().to_vec()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(links={}, edges={})",
            self.inner.link_count(),
            self.inner.edges().len()
        )
    }
}

/// Per-link arrival process.
#[pyclass(name = "Arrival", skip_from_py_object)]
#[derive(Clone)]
struct PyArrival {
    inner: ArrivalModel,
}

#[pymethods]
impl PyArrival {
    #[staticmethod]
    fn bernoulli(p: f64) -> PyResult<Self> {
        Ok(Self {
            inner: ArrivalModel::bernoulli(p).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn batch(values: Vec<u32>, probs: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: ArrivalModel::batch(values, probs).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn markov_onoff(p_on_off: f64, p_off_on: f64, batch_on: u32) -> PyResult<Self> {
        Ok(Self {
            inner: ArrivalModel::markov_onoff(p_on_off, p_off_on, batch_on).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn sync_onoff(period: u32, start: u32, len: u32, batch: u32, group: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ArrivalModel::sync_onoff(period, start, len, batch, group).map_err(value_err)?,
        })
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate()
    }

    #[getter]
    fn bound(&self) -> u32 {
        self.inner.bound()
    }

    fn log_mgf(&self, theta: f64) -> f64 {
        self.inner.log_mgf(theta)
    }

    fn d_log_mgf(&self, theta: f64) -> f64 {
        self.inner.d_log_mgf(theta)
    }

    fn legendre(&self, mu: f64) -> f64 {
        self.inner.legendre(mu)
    }

    fn __repr__(&self) -> String {
        format!("Arrival(rate={}, bound={})", self.inner.rate(), self.inner.bound())
    }
}

/// Geometric network with transmitter-receiver links.
#[pyclass(name = "Network")]
struct PyNetwork {
    inner: geometry::GeometricNetwork,
}

#[pymethods]
impl PyNetwork {
    #[getter]
    fn nodes(&self) -> Vec<(f64, f64)> {
        self.inner.nodes().to_vec()
    }

    #[getter]
    fn links(&self) -> Vec<(usize, usize)> {
        self.inner.links().to_vec()
    }

    #[getter]
    fn tx_range(&self) -> f64 {
        self.inner.tx_range()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: geometry::GeometricNetwork::from_text(text).map_err(value_err)?,
        })
    }

    fn interference_primary(&self) -> PyResult<PyGraph> {
        Ok(PyGraph {
            inner: geometry::build_interference(&self.inner, geometry::InterferenceModel::Primary)
                .map_err(value_err)?,
        })
    }

    fn interference_khop(&self, k: usize) -> PyResult<PyGraph> {
        Ok(PyGraph {
            inner: geometry::build_interference(
                &self.inner,
                geometry::InterferenceModel::KHop { k },
            )
            .map_err(value_err)?,
        })
    }

    fn interference_phy(&self, snr_t: f64, kappa: f64) -> PyResult<PyGraph> {
        Ok(PyGraph {
            inner: geometry::build_interference(
                &self.inner,
                geometry::InterferenceModel::Phy { snr_t, kappa },
            )
            .map_err(value_err)?,
        })
    }
}

#[pyfunction]
fn generate_network(
    n_nodes: usize,
    area_side: f64,
    tx_range: f64,
    link_density: f64,
    seed: u64,
) -> PyResult<PyNetwork> {
    Ok(PyNetwork {
        inner: geometry::generate_network(n_nodes, area_side, tx_range, link_density, seed)
            .map_err(value_err)?,
    })
}

#[pyfunction]
fn in_a_min(g: &PyGraph, rates: Vec<f64>) -> PyResult<bool> {
    synth::in_a_min(&g.inner, &rates).map_err(value_err)
}

#[pyfunction]
fn in_a(g: &PyGraph, rates: Vec<f64>) -> PyResult<bool> {
    synth::in_a(&g.inner, &rates).map_err(value_err)
}

#[pyfunction]
fn in_a_p(g: &PyGraph, rates: Vec<f64>, ranks: Vec<usize>) -> PyResult<bool> {
    let p = Priority::from_ranks(ranks).map_err(value_err)?;
    synth::in_a_p(&g.inner, &rates, &p).map_err(value_err)
}

#[pyfunction]
fn in_a_max(g: &PyGraph, rates: Vec<f64>) -> PyResult<bool> {
    synth::in_a_max(&g.inner, &rates).map_err(value_err)
}

/// Greedy stable-priority assignment; returns the ranks or None when the
/// rates lie outside the fixed-priority union region.
#[pyfunction]
fn stable_priority(g: &PyGraph, rates: Vec<f64>) -> PyResult<Option<Vec<usize>>> {
    match synth::stable_priority(&g.inner, &rates).map_err(value_err)? {
        StablePriorityOutcome::Feasible { priority } => Ok(Some(priority.ranks().to_vec())),
        StablePriorityOutcome::Infeasible { .. } => Ok(None),
    }
}

/// Exact sufficient-condition check for an i.i.d. priority distribution.
#[pyfunction]
fn check_lemma1(
    g: &PyGraph,
    rates: Vec<f64>,
    dist: Vec<(Vec<usize>, f64)>,
    subsets: Vec<Vec<usize>>,
) -> PyResult<bool> {
    let entries = dist
        .into_iter()
        .map(|(ranks, w)| Ok((Priority::from_ranks(ranks).map_err(value_err)?, w)))
        .collect::<PyResult<Vec<_>>>()?;
    let dist = PriorityDistribution::new(entries).map_err(value_err)?;
    Ok(synth::check_lemma1(&g.inner, &rates, &dist, &subsets)
        .map_err(value_err)?
        .holds)
}

/// Exact decomposition; returns `(terms, eps)` with terms as
/// `(members, weight)` pairs. Raises ValueError when infeasible.
#[pyfunction]
#[pyo3(signature = (g, rates, eps = None))]
fn decompose_exact(
    g: &PyGraph,
    rates: Vec<f64>,
    eps: Option<f64>,
) -> PyResult<(Vec<(Vec<usize>, f64)>, f64)> {
    let eps = match eps {
        Some(e) => e,
        None => {
            let r = synth::a_max_report(&g.inner, &rates).map_err(value_err)?;
            (r.slack / 2.0).max(1e-4)
        }
    };
    let d = synth::decompose_exact(&g.inner, &rates, eps).map_err(value_err)?;
    Ok((
        d.terms
            .iter()
            .map(|(s, w)| (s.members().to_vec(), *w))
            .collect(),
        d.eps,
    ))
}

/// Approximate decomposition against the exact max-weight oracle; returns
/// `(terms, oracle_calls)`.
#[pyfunction]
fn decompose_approx(
    g: &PyGraph,
    rates: Vec<f64>,
    eps: f64,
    tol: f64,
) -> PyResult<(Vec<(Vec<usize>, f64)>, usize)> {
    let mut oracle = synth::exact_mwis_oracle(&g.inner).map_err(value_err)?;
    let rep = synth::decompose_approx(&g.inner, &rates, eps, tol, &mut oracle)
        .map_err(value_err)?;
    Ok((
        rep.decomposition
            .terms
            .iter()
            .map(|(s, w)| (s.members().to_vec(), *w))
            .collect(),
        rep.oracle_calls,
    ))
}

fn to_models(py: Python<'_>, models: &[Py<PyArrival>]) -> Vec<ArrivalModel> {
    models.iter().map(|m| m.borrow(py).inner.clone()).collect()
}

/// Overflow exponent of a link against higher-priority competitors:
/// returns `(kind, value, residual)` with kind one of "finite",
/// "infinite", "unstable".
#[pyfunction]
fn delay_exponent(
    py: Python<'_>,
    model: &PyArrival,
    competitors: Vec<Py<PyArrival>>,
) -> PyResult<(String, f64, f64)> {
    let owned = to_models(py, &competitors);
    let refs: Vec<&ArrivalModel> = owned.iter().collect();
    let r = delay::delay_exponent(&model.inner, &refs).map_err(value_err)?;
    let (kind, value) = match r.value {
        Exponent::Finite(v) => ("finite", v),
        Exponent::Infinite => ("infinite", f64::INFINITY),
        Exponent::Unstable => ("unstable", 0.0),
    };
    Ok((kind.to_string(), value, r.residual))
}

#[pyfunction]
fn delay_region_check(
    py: Python<'_>,
    g: &PyGraph,
    models: Vec<Py<PyArrival>>,
    targets: Vec<f64>,
    ranks: Vec<usize>,
) -> PyResult<bool> {
    let models = to_models(py, &models);
    let p = Priority::from_ranks(ranks).map_err(value_err)?;
    Ok(delay::delay_region_check(&g.inner, &models, &targets, &p)
        .map_err(value_err)?
        .ok)
}

/// Greedy delay-aware priority assignment; returns the ranks or None.
#[pyfunction]
fn delay_priority(
    py: Python<'_>,
    g: &PyGraph,
    models: Vec<Py<PyArrival>>,
    targets: Vec<f64>,
) -> PyResult<Option<Vec<usize>>> {
    let models = to_models(py, &models);
    match delay::delay_priority(&g.inner, &models, &targets).map_err(value_err)? {
        delay::DelayPriorityOutcome::Feasible { priority } => {
            Ok(Some(priority.ranks().to_vec()))
        }
        delay::DelayPriorityOutcome::Infeasible { .. } => Ok(None),
    }
}

/// Result of a simulation run.
#[pyclass(name = "SimStats")]
struct PySimStats {
    #[pyo3(get)]
    slots: u64,
    #[pyo3(get)]
    rate_in: Vec<f64>,
    #[pyo3(get)]
    rate_out: Vec<f64>,
    #[pyo3(get)]
    mean_queue: Vec<f64>,
    #[pyo3(get)]
    max_queue: Vec<u64>,
    #[pyo3(get)]
    drift: Vec<f64>,
    #[pyo3(get)]
    thresholds: Vec<u64>,
    /// overflow_frequency[link][threshold index]
    #[pyo3(get)]
    overflow_frequency: Vec<Vec<f64>>,
    #[pyo3(get)]
    summary_csv: String,
}

/// Runs the slotted simulator. `kind` is "lqf", "maxweight", "fixed"
/// (with `ranks`) or "distribution" (with `dist` as (ranks, weight)
/// pairs).
#[pyfunction]
#[pyo3(signature = (g, models, slots, seed, kind = "lqf", ranks = None, dist = None, thresholds = None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    g: &PyGraph,
    models: Vec<Py<PyArrival>>,
    slots: u64,
    seed: u64,
    kind: &str,
    ranks: Option<Vec<usize>>,
    dist: Option<Vec<(Vec<usize>, f64)>>,
    thresholds: Option<Vec<u64>>,
) -> PyResult<PySimStats> {
    let models = to_models(py, &models);
    let spec = match kind {
        "lqf" => PrioritySpec::Lqf,
        "maxweight" => PrioritySpec::MaxWeight,
        "fixed" => PrioritySpec::Fixed(
            Priority::from_ranks(ranks.ok_or_else(|| {
                PyValueError::new_err("kind 'fixed' needs `ranks`")
            })?)
            .map_err(value_err)?,
        ),
        "distribution" => {
            let entries = dist
                .ok_or_else(|| PyValueError::new_err("kind 'distribution' needs `dist`"))?
                .into_iter()
                .map(|(r, w)| Ok((Priority::from_ranks(r).map_err(value_err)?, w)))
                .collect::<PyResult<Vec<_>>>()?;
            PrioritySpec::Distribution(PriorityDistribution::new(entries).map_err(value_err)?)
        }
        other => return Err(PyValueError::new_err(format!("unknown scheduler `{other}`"))),
    };
    let thresholds = thresholds.unwrap_or_default();
    let stats = engine::run(&g.inner, &spec, &models, slots, seed, &thresholds)
        .map_err(value_err)?;
    let n = stats.per_link.len();
    Ok(PySimStats {
        slots: stats.slots,
        rate_in: stats.per_link.iter().map(|s| s.rate_in).collect(),
        rate_out: stats.per_link.iter().map(|s| s.rate_out).collect(),
        mean_queue: stats.per_link.iter().map(|s| s.mean_queue).collect(),
        max_queue: stats.per_link.iter().map(|s| s.max_queue).collect(),
        drift: stats.per_link.iter().map(|s| s.drift).collect(),
        thresholds: stats.thresholds.clone(),
        overflow_frequency: (0..n)
            .map(|i| {
                (0..stats.thresholds.len())
                    .map(|t| stats.overflow_frequency(i, t))
                    .collect()
            })
            .collect(),
        summary_csv: engine::summary_csv(&stats),
    })
}

/// Worst-case dominant system of a tagged link: returns
/// `(clique_graph, ranks, members)` with members giving the original link
/// ids, tagged link last in priority.
#[pyfunction]
fn worst_case_dominant(
    py: Python<'_>,
    g: &PyGraph,
    link: usize,
    models: Vec<Py<PyArrival>>,
) -> PyResult<(PyGraph, Vec<usize>, Vec<usize>)> {
    let models = to_models(py, &models);
    let dom = engine::worst_case_dominant_system(&g.inner, link, &models).map_err(value_err)?;
    Ok((
        PyGraph { inner: dom.graph },
        dom.priority.ranks().to_vec(),
        dom.members,
    ))
}

#[pymodule]
fn priosched_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyArrival>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PySimStats>()?;
    m.add_function(wrap_pyfunction!(generate_network, m)?)?;
    m.add_function(wrap_pyfunction!(in_a_min, m)?)?;
    m.add_function(wrap_pyfunction!(in_a, m)?)?;
    m.add_function(wrap_pyfunction!(in_a_p, m)?)?;
    m.add_function(wrap_pyfunction!(in_a_max, m)?)?;
    m.add_function(wrap_pyfunction!(stable_priority, m)?)?;
    m.add_function(wrap_pyfunction!(check_lemma1, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_exact, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_approx, m)?)?;
    m.add_function(wrap_pyfunction!(delay_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(delay_region_check, m)?)?;
    m.add_function(wrap_pyfunction!(delay_priority, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_dominant, m)?)?;
    Ok(())
}
