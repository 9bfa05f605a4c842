//! Python bindings for the contactnet crate.
//!
//! Exposes the dynamic graph state, the event-driven simulator, the
//! closed-form analytics, and the reference-model samplers. Focus ids are
//! 0-based throughout this API. Build with
//! `cargo build --release -p contactnet-py` and import the produced
//! `libcontactnet_py.so` as `contactnet_py` (see python/smoke_test.py).

use contactnet::analytic;
use contactnet::analytic::{MeasureConvention, PopulationParams, RateParams, SpatialParams};
use contactnet::ctmc_sim::{self, FociSpec, InitialGraphRule, MigrationMode, SimConfig};
use contactnet::graph::SimpleGraph;
use contactnet::graph_state::{DynamicState, FocusRule};
use contactnet::graph_stats;
use contactnet::rng::{rng_from_seed, SimRng};
use contactnet::static_samplers;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: contactnet::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<MigrationMode> {
    match mode {
        "uniform-all" => Ok(MigrationMode::UniformAll),
        "exclude-current" => Ok(MigrationMode::ExcludeCurrent),
        other => Err(PyValueError::new_err(format!(
            "unknown migration mode `{other}`"
        ))),
    }
}

fn parse_convention(name: &str) -> PyResult<MeasureConvention> {
    match name {
        "volume" => Ok(MeasureConvention::Volume),
        "relative-voxel" => Ok(MeasureConvention::RelativeVoxel),
        "voxel" => Ok(MeasureConvention::Voxel),
        other => Err(PyValueError::new_err(format!("unknown convention `{other}`"))),
    }
}

/// Summary statistics of one graph.
#[pyclass(name = "GraphSummary", frozen)]
struct PyGraphSummary {
    #[pyo3(get)]
    n_vertices: usize,
    #[pyo3(get)]
    edge_count: u64,
    #[pyo3(get)]
    mean_degree: f64,
    #[pyo3(get)]
    density: f64,
    #[pyo3(get)]
    triangle_count: u64,
    #[pyo3(get)]
    saturated_fraction: Option<f64>,
    #[pyo3(get)]
    degree_histogram: Vec<u64>,
}

impl From<graph_stats::GraphSummary> for PyGraphSummary {
    fn from(s: graph_stats::GraphSummary) -> Self {
        PyGraphSummary {
            n_vertices: s.n_vertices,
            edge_count: s.edge_count,
            mean_degree: s.mean_degree,
            density: s.density,
            triangle_count: s.triangle_count,
            saturated_fraction: s.saturated_fraction,
            degree_histogram: s.degree_histogram,
        }
    }
}

#[pymethods]
impl PyGraphSummary {
    fn __repr__(&self) -> String {
        format!(
            "GraphSummary(n_vertices={}, edge_count={}, mean_degree={:.6}, triangle_count={})",
            self.n_vertices, self.edge_count, self.mean_degree, self.triangle_count
        )
    }
}

/// Outcome of a simulation run.
#[pyclass(name = "SimResult", frozen)]
struct PySimResult {
    #[pyo3(get)]
    resolved_m: usize,
    #[pyo3(get)]
    summary: Py<PyGraphSummary>,
    #[pyo3(get)]
    edges: Vec<(u32, u32)>,
}

/// Graph-plus-foci state with incremental bookkeeping. Focus ids 0-based.
#[pyclass(name = "DynamicState")]
struct PyDynamicState {
    state: DynamicState,
    rng: SimRng,
}

#[pymethods]
impl PyDynamicState {
    /// Create a state. `foci` gives an explicit assignment (0-based, one
    /// entry per vertex); omitted, each vertex is placed uniformly at
    /// random using `seed`.
    #[new]
    #[pyo3(signature = (n_vertices, n_foci, foci=None, edges=vec![], seed=0))]
    fn new(
        n_vertices: usize,
        n_foci: usize,
        foci: Option<Vec<u32>>,
        edges: Vec<(u32, u32)>,
        seed: u64,
    ) -> PyResult<Self> {
        let mut rng = rng_from_seed(seed);
        let rule = match &foci {
            Some(f) => FocusRule::Explicit(f),
            None => FocusRule::UniformIid,
        };
        let state = DynamicState::new(n_vertices, n_foci, rule, &edges, &mut rng)
            .map_err(value_err)?;
        Ok(PyDynamicState { state, rng })
    }

    fn toggle_edge(&mut self, u: u32, v: u32, present: bool) -> PyResult<()> {
        let n = self.state.n_vertices() as u32;
        if u == v || u >= n || v >= n {
            return Err(PyValueError::new_err(format!("bad edge ({u}, {v})")));
        }
        if self.state.has_edge(u, v) == present {
            return Err(PyValueError::new_err(format!(
                "edge ({u}, {v}) already {}",
                if present { "present" } else { "absent" }
            )));
        }
        self.state.toggle_edge(u, v, present);
        Ok(())
    }

    fn migrate(&mut self, vertex: u32, dest: u32) -> PyResult<()> {
        if vertex as usize >= self.state.n_vertices() {
            return Err(PyValueError::new_err(format!("vertex {vertex} out of range")));
        }
        if dest as usize >= self.state.n_foci() {
            return Err(PyValueError::new_err(format!("focus {dest} out of range")));
        }
        self.state.migrate(vertex, dest);
        Ok(())
    }

    /// Uniform non-adjacent same-focus pair, or None if no pair is at risk.
    fn sample_at_risk_pair(&mut self) -> Option<(u32, u32)> {
        self.state.sample_at_risk_pair(&mut self.rng)
    }

    fn has_edge(&self, u: u32, v: u32) -> bool {
        self.state.has_edge(u, v)
    }

    fn focus_of(&self, vertex: u32) -> u32 {
        self.state.focus_of(vertex)
    }

    fn focus_sizes(&self) -> Vec<usize> {
        (0..self.state.n_foci())
            .map(|k| self.state.focus_size(k as u32))
            .collect()
    }

    fn internal_edges(&self, focus: u32) -> u64 {
        self.state.internal_edges(focus)
    }

    fn at_risk_pairs(&self, focus: u32) -> u64 {
        self.state.at_risk_pairs(focus)
    }

    #[getter]
    fn at_risk_total(&self) -> u64 {
        self.state.at_risk_total()
    }

    #[getter]
    fn total_edges(&self) -> usize {
        self.state.total_edges()
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.state.n_vertices()
    }

    #[getter]
    fn n_foci(&self) -> usize {
        self.state.n_foci()
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.state.edges().to_vec()
    }

    /// Recount all bookkeeping from scratch; raises if anything disagrees.
    fn check_consistency(&self) -> PyResult<()> {
        self.state.check_consistency().map_err(value_err)
    }

    #[pyo3(signature = (d_max=None))]
    fn summarize(&self, py: Python<'_>, d_max: Option<u32>) -> PyResult<Py<PyGraphSummary>> {
        let summary = graph_stats::summarize(&self.state.to_graph(), d_max);
        Py::new(py, PyGraphSummary::from(summary))
    }

    fn __repr__(&self) -> String {
        format!(
            "DynamicState(n_vertices={}, n_foci={}, total_edges={})",
            self.state.n_vertices(),
            self.state.n_foci(),
            self.state.total_edges()
        )
    }
}

/// Run one trajectory of the contact formation process.
///
/// Exactly one of `p` (expected local population, randomized focus count)
/// or `m` (explicit focus count) must be given. `initial` is "empty",
/// "bernoulli" (seeded at the asymptotic mean degree), or an explicit edge
/// list.
#[pyfunction]
#[pyo3(signature = (
    n_vertices, *, p=None, m=None, rf=1.0, rl, rm, horizon=25.0, seed=0,
    migration_mode="uniform-all", initial=None,
))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    n_vertices: usize,
    p: Option<f64>,
    m: Option<usize>,
    rf: f64,
    rl: f64,
    rm: f64,
    horizon: f64,
    seed: u64,
    migration_mode: &str,
    initial: Option<Bound<'_, PyAny>>,
) -> PyResult<PySimResult> {
    let foci = match (p, m) {
        (Some(p), None) => FociSpec::ExpectedLocalPop(p),
        (None, Some(m)) => FociSpec::Count(m),
        _ => {
            return Err(PyValueError::new_err(
                "give exactly one of p= or m=",
            ))
        }
    };
    let initial_graph = match initial {
        None => InitialGraphRule::BernoulliAtAsymptoticMeanDegree,
        Some(obj) => {
            if let Ok(name) = obj.extract::<String>() {
                match name.as_str() {
                    "empty" => InitialGraphRule::Empty,
                    "bernoulli" | "bernoulli-at-asymptotic-mean-degree" => {
                        InitialGraphRule::BernoulliAtAsymptoticMeanDegree
                    }
                    other => {
                        return Err(PyValueError::new_err(format!(
                            "unknown initial graph rule `{other}`"
                        )))
                    }
                }
            } else {
                InitialGraphRule::Explicit {
                    edges: obj.extract::<Vec<(u32, u32)>>()?,
                    foci: None,
                }
            }
        }
    };
    let config = SimConfig {
        n_vertices,
        foci,
        rates: RateParams::new(rf, rl, rm).map_err(value_err)?,
        horizon,
        migration_mode: parse_mode(migration_mode)?,
        initial_graph,
        seed,
    };
    let out = ctmc_sim::run(&config).map_err(value_err)?;
    Ok(PySimResult {
        resolved_m: out.resolved_m,
        summary: Py::new(py, PyGraphSummary::from(out.summary))?,
        edges: out.graph.edges().to_vec(),
    })
}

/// Resolve an expected local population into a focus count (randomized
/// between the two integers bracketing N/P so the average P is preserved).
#[pyfunction]
fn resolve_foci(n_vertices: usize, p: f64, seed: u64) -> PyResult<usize> {
    let mut rng = rng_from_seed(seed);
    ctmc_sim::resolve_foci(n_vertices, p, &mut rng).map_err(value_err)
}

#[pyfunction]
fn mean_degree_fast(rf: f64, rl: f64, n: usize, p: f64) -> PyResult<f64> {
    let rates = RateParams::new(rf, rl, 0.0).map_err(value_err)?;
    let pop = PopulationParams::from_local_pop(n, p).map_err(value_err)?;
    analytic::mean_degree_fast(&rates, &pop).map_err(value_err)
}

#[pyfunction]
fn mean_degree_fast_limit(rf: f64, rl: f64, p: f64) -> PyResult<f64> {
    let rates = RateParams::new(rf, rl, 0.0).map_err(value_err)?;
    analytic::mean_degree_fast_limit(&rates, p).map_err(value_err)
}

#[pyfunction]
fn slow_local_density(rf: f64, rl: f64) -> PyResult<f64> {
    let rates = RateParams::new(rf, rl, 0.0).map_err(value_err)?;
    analytic::slow_local_density(&rates).map_err(value_err)
}

#[pyfunction]
fn slow_mean_degree(rf: f64, rl: f64, n: usize, m: usize) -> PyResult<f64> {
    let rates = RateParams::new(rf, rl, 0.0).map_err(value_err)?;
    let pop = PopulationParams::from_foci(n, m).map_err(value_err)?;
    analytic::slow_mean_degree(&rates, &pop).map_err(value_err)
}

#[pyfunction]
fn slow_fast_ratio(rf: f64, rl: f64) -> PyResult<f64> {
    let rates = RateParams::new(rf, rl, 0.0).map_err(value_err)?;
    analytic::slow_fast_ratio(&rates).map_err(value_err)
}

/// Mean and variance of the co-residence time over a window of length t.
#[pyfunction]
fn coresidence_moments(rm: f64, m: usize, t: f64) -> PyResult<(f64, f64)> {
    let rates = RateParams::new(1.0, 1.0, rm).map_err(value_err)?;
    analytic::coresidence_moments(&rates, m, t).map_err(value_err)
}

#[pyfunction]
fn edge_probability_fast_limit(rf: f64, rl: f64, m: usize) -> PyResult<f64> {
    let rates = RateParams::new(rf, rl, 0.0).map_err(value_err)?;
    analytic::edge_probability_fast_limit(&rates, m).map_err(value_err)
}

/// Equilibrium logit decomposition: (theta_e, per-edge log weight).
#[pyfunction]
fn psi_decomposition(rf: f64, rl: f64, n: usize, p: f64) -> PyResult<(f64, f64)> {
    let rates = RateParams::new(rf, rl, 0.0).map_err(value_err)?;
    let pop = PopulationParams::from_local_pop(n, p).map_err(value_err)?;
    let parts = analytic::psi_decomposition(&rates, &pop).map_err(value_err)?;
    Ok((parts.theta_e, parts.log_measure_rate))
}

#[pyfunction]
fn psi(rf: f64, rl: f64, n: usize, p: f64) -> PyResult<f64> {
    let rates = RateParams::new(rf, rl, 0.0).map_err(value_err)?;
    let pop = PopulationParams::from_local_pop(n, p).map_err(value_err)?;
    analytic::psi(&rates, &pop).map_err(value_err)
}

#[pyfunction]
fn psi_exact(rf: f64, rl: f64, n: usize, p: f64) -> PyResult<f64> {
    let rates = RateParams::new(rf, rl, 0.0).map_err(value_err)?;
    let pop = PopulationParams::from_local_pop(n, p).map_err(value_err)?;
    analytic::psi_exact(&rates, &pop).map_err(value_err)
}

#[pyfunction]
fn saturation_bound(p: f64, d_max: usize, n: usize, f_u: f64) -> PyResult<f64> {
    analytic::saturation_bound(p, d_max, n, f_u).map_err(value_err)
}

#[pyfunction]
fn saturation_fixed_point(p: f64, d_max: usize, n: usize) -> PyResult<f64> {
    analytic::saturation_fixed_point(p, d_max, n).map_err(value_err)
}

/// Spatial decomposition (theta_e, log measure rate) under a convention:
/// "volume", "relative-voxel", or "voxel".
#[pyfunction]
#[pyo3(signature = (rf, rl, system_volume, voxel_volume, convention="volume"))]
fn spatial_psi(
    rf: f64,
    rl: f64,
    system_volume: f64,
    voxel_volume: f64,
    convention: &str,
) -> PyResult<(f64, f64)> {
    let rates = RateParams::new(rf, rl, 0.0).map_err(value_err)?;
    let spatial = SpatialParams::new(system_volume, voxel_volume, None).map_err(value_err)?;
    let parts = analytic::spatial_psi(&rates, &spatial, parse_convention(convention)?)
        .map_err(value_err)?;
    Ok((parts.theta_e, parts.log_measure_rate))
}

#[pyfunction]
fn sample_bernoulli(n: usize, p: f64, seed: u64) -> PyResult<Vec<(u32, u32)>> {
    let mut rng = rng_from_seed(seed);
    Ok(static_samplers::sample_bernoulli(n, p, &mut rng)
        .map_err(value_err)?
        .edges()
        .to_vec())
}

#[pyfunction]
fn sample_krivitsky(n: usize, mean_degree_target: f64, seed: u64) -> PyResult<Vec<(u32, u32)>> {
    let mut rng = rng_from_seed(seed);
    Ok(static_samplers::sample_krivitsky(n, mean_degree_target, &mut rng)
        .map_err(value_err)?
        .edges()
        .to_vec())
}

/// Metropolis draws from the degree-capped edge-only model.
#[pyfunction]
fn sample_constrained(
    n: usize,
    p: f64,
    d_max: u32,
    burnin: u64,
    thinning: u64,
    draws: usize,
    seed: u64,
) -> PyResult<Vec<Vec<(u32, u32)>>> {
    let model =
        static_samplers::ConstrainedModel::new(n, p, d_max, burnin, thinning).map_err(value_err)?;
    Ok(static_samplers::sample_constrained(model, draws, seed)
        .into_iter()
        .map(|g| g.edges().to_vec())
        .collect())
}

#[pyfunction]
fn expected_triangles_bernoulli(n: usize, p: f64) -> PyResult<f64> {
    static_samplers::expected_triangles_bernoulli(n, p).map_err(value_err)
}

#[pyfunction]
fn count_triangles(n: usize, edges: Vec<(u32, u32)>) -> PyResult<u64> {
    let graph = SimpleGraph::new(n, edges).map_err(value_err)?;
    Ok(graph_stats::count_triangles(&graph))
}

#[pyfunction]
#[pyo3(signature = (n, edges, d_max=None))]
fn summarize(
    py: Python<'_>,
    n: usize,
    edges: Vec<(u32, u32)>,
    d_max: Option<u32>,
) -> PyResult<Py<PyGraphSummary>> {
    let graph = SimpleGraph::new(n, edges).map_err(value_err)?;
    Py::new(py, PyGraphSummary::from(graph_stats::summarize(&graph, d_max)))
}

#[pymodule]
fn contactnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraphSummary>()?;
    m.add_class::<PySimResult>()?;
    m.add_class::<PyDynamicState>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(resolve_foci, m)?)?;
    m.add_function(wrap_pyfunction!(mean_degree_fast, m)?)?;
    m.add_function(wrap_pyfunction!(mean_degree_fast_limit, m)?)?;
    m.add_function(wrap_pyfunction!(slow_local_density, m)?)?;
    m.add_function(wrap_pyfunction!(slow_mean_degree, m)?)?;
    m.add_function(wrap_pyfunction!(slow_fast_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(coresidence_moments, m)?)?;
    m.add_function(wrap_pyfunction!(edge_probability_fast_limit, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(psi_exact, m)?)?;
    m.add_function(wrap_pyfunction!(psi_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(saturation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(saturation_fixed_point, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_psi, m)?)?;
    m.add_function(wrap_pyfunction!(sample_bernoulli, m)?)?;
    m.add_function(wrap_pyfunction!(sample_krivitsky, m)?)?;
    m.add_function(wrap_pyfunction!(sample_constrained, m)?)?;
    m.add_function(wrap_pyfunction!(expected_triangles_bernoulli, m)?)?;
    m.add_function(wrap_pyfunction!(count_triangles, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    Ok(())
}
