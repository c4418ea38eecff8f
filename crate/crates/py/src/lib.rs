//! Python bindings: instances, solutions, segmenters, the reduction and the
//! re-optimization loops.

use fsta_core::backbone::{solve_warm, MoveBudget, SolveMode};
use fsta_core::driver::{run_fsta_loop, run_plain_loop, LoopConfig, RunStats};
use fsta_core::fsta::{build_reduced, recover, verify_theorem, AggregationOptions, RecoveryMap};
use fsta_core::gen_io::{
    generate, initial_solution_sweep, parse_cvrplib, read_instance_doc, write_cvrplib, write_instance_doc, GenSpec, SweepParams,
};
use fsta_core::model::{self, check_feasibility, edge_set, EdgeSet};
use fsta_core::segmenter::{detect as detect_edges, Backbone, SegmenterPolicy};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn solve_mode(s: &str) -> PyResult<SolveMode> {
    s.parse().map_err(err)
}

fn to_edge_set(edges: &[(usize, usize)]) -> EdgeSet {
    let mut set = EdgeSet::new();
    for &(a, b) in edges {
        set.insert(a, b);
    }
    set
}

fn from_edge_set(set: &EdgeSet) -> Vec<(usize, usize)> {
    set.iter().map(|e| (e.lo(), e.hi())).collect()
}

/// A routing instance; node 0 is the depot.
#[pyclass(frozen, skip_from_py_object, module = "fsta")]
#[derive(Clone)]
struct Instance(model::Instance);

#[pymethods]
impl Instance {
    #[staticmethod]
    #[pyo3(signature = (variant, n, capacity, seed=0))]
    fn generate(variant: &str, n: usize, capacity: f64, seed: u64) -> PyResult<Self> {
        let variant = variant.parse().map_err(err)?;
        generate(&GenSpec::new(variant, n, capacity, seed)).map(Instance).map_err(err)
    }

    #[staticmethod]
    fn from_cvrplib(text: &str) -> PyResult<Self> {
        parse_cvrplib(text).map(Instance).map_err(err)
    }

    #[staticmethod]
    fn from_doc(text: &str) -> PyResult<Self> {
        read_instance_doc(text).map(Instance).map_err(err)
    }

    fn to_cvrplib(&self) -> String {
        write_cvrplib(&self.0)
    }

    fn to_doc(&self) -> String {
        write_instance_doc(&self.0)
    }

    #[getter]
    fn id(&self) -> String {
        self.0.id().to_string()
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.0.variant().as_str()
    }

    #[getter]
    fn n_customers(&self) -> usize {
        self.0.n_customers()
    }

    #[getter]
    fn capacity(&self) -> f64 {
        self.0.capacity()
    }

    fn dist(&self, i: usize, j: usize) -> PyResult<f64> {
        self.0.distance(i, j).map_err(err)
    }

    fn objective(&self, solution: &Solution) -> PyResult<f64> {
        model::evaluate_objective(&self.0, &solution.0).map_err(err)
    }

    /// `(feasible, [violation details])`.
    fn check(&self, solution: &Solution) -> (bool, Vec<String>) {
        let report = check_feasibility(&self.0, &solution.0);
        (report.feasible, report.violations.into_iter().map(|v| format!("{:?}: {}", v.kind, v.detail)).collect())
    }

    /// Sweep construction, optionally polished by `moves` local search moves.
    #[pyo3(signature = (moves=0, seed=0))]
    fn sweep(&self, moves: u64, seed: u64) -> PyResult<Solution> {
        initial_solution_sweep(&self.0, &SweepParams::default(), &MoveBudget::moves(moves, seed))
            .map(Solution)
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Instance(id={:?}, variant={}, n_customers={})", self.0.id(), self.0.variant().as_str(), self.0.n_customers())
    }
}

/// Routes of customer indices, depot visits implicit.
#[pyclass(frozen, skip_from_py_object, module = "fsta")]
#[derive(Clone)]
struct Solution(model::Solution);

#[pymethods]
impl Solution {
    #[new]
    fn new(routes: Vec<Vec<usize>>) -> Self {
        Solution(model::Solution::new(routes))
    }

    #[getter]
    fn routes(&self) -> Vec<Vec<usize>> {
        self.0.routes.clone()
    }

    /// Undirected edges as `(lo, hi)` pairs, depot edges included.
    fn edges(&self) -> Vec<(usize, usize)> {
        from_edge_set(&edge_set(&self.0))
    }

    fn __eq__(&self, other: &Solution) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Solution({:?})", self.0.routes)
    }
}

/// A decomposition of one solution: the reduced start, the objective offset
/// and the map back to original solutions.
#[pyclass(frozen, module = "fsta")]
struct Reduction {
    instance: model::Instance,
    solution: model::Solution,
    unstable: EdgeSet,
    map: RecoveryMap,
    start: model::Solution,
    size_ratio: f64,
}

#[pymethods]
impl Reduction {
    #[getter]
    fn start(&self) -> Solution {
        Solution(self.start.clone())
    }

    #[getter]
    fn objective_offset(&self) -> f64 {
        self.map.objective_offset
    }

    #[getter]
    fn size_ratio(&self) -> f64 {
        self.size_ratio
    }

    #[getter]
    fn n_segments(&self) -> usize {
        self.map.segments.len()
    }

    fn recover(&self, reduced: &Solution) -> PyResult<Solution> {
        recover(&reduced.0, &self.map).map(Solution).map_err(err)
    }

    /// Objective of a reduced solution measured on the reduced problem.
    fn reduced_objective(&self, reduced: &Solution) -> PyResult<f64> {
        let (problem, _, _) = build_reduced(&self.instance, &self.solution, &self.unstable, &AggregationOptions::default()).map_err(err)?;
        Ok(problem.objective(&reduced.0))
    }

    /// Improves the reduced start and returns the recovered original solution.
    #[pyo3(signature = (moves=1000, mode="lns", seed=0))]
    fn solve(&self, moves: u64, mode: &str, seed: u64) -> PyResult<Solution> {
        let (problem, start, map) = build_reduced(&self.instance, &self.solution, &self.unstable, &AggregationOptions::default()).map_err(err)?;
        let (next, _) = solve_warm(&problem, &start, &MoveBudget::moves(moves, seed), solve_mode(mode)?).map_err(err)?;
        recover(&next, &map).map(Solution).map_err(err)
    }
}

/// Unstable edges of `solution` under a policy string such as `random:0.4`,
/// `geometric:10:0.8` or `oracle:1000`.
#[pyfunction]
#[pyo3(signature = (instance, solution, policy, seed=0, backbone="lns"))]
fn detect(instance: &Instance, solution: &Solution, policy: &str, seed: u64, backbone: &str) -> PyResult<Vec<(usize, usize)>> {
    let mut policy: SegmenterPolicy = policy.parse().map_err(err)?;
    match &mut policy {
        SegmenterPolicy::Random { seed: s, .. } => *s = seed,
        SegmenterPolicy::Oracle { lookahead_budget } => lookahead_budget.seed = seed,
        _ => {}
    }
    let backbone = Backbone::new(solve_mode(backbone)?);
    detect_edges(&policy, &instance.0, &solution.0, Some(&backbone))
        .map(|set| from_edge_set(&set))
        .map_err(err)
}

/// Cuts `solution` at `unstable` and aggregates the stable segments.
#[pyfunction]
fn reduce(instance: &Instance, solution: &Solution, unstable: Vec<(usize, usize)>) -> PyResult<Reduction> {
    let unstable = to_edge_set(&unstable);
    let (problem, start, map) = build_reduced(&instance.0, &solution.0, &unstable, &AggregationOptions::default()).map_err(err)?;
    let size_ratio = problem.size_ratio();
    Ok(Reduction {
        instance: instance.0.clone(),
        solution: solution.0.clone(),
        unstable,
        map,
        start,
        size_ratio,
    })
}

/// Warm-started backbone run on the full instance.
#[pyfunction]
#[pyo3(signature = (instance, solution, moves=1000, mode="lns", seed=0))]
fn solve(instance: &Instance, solution: &Solution, moves: u64, mode: &str, seed: u64) -> PyResult<Solution> {
    solve_warm(&instance.0, &solution.0, &MoveBudget::moves(moves, seed), solve_mode(mode)?)
        .map(|(s, _)| Solution(s))
        .map_err(err)
}

fn stats_dict<'py>(py: Python<'py>, stats: &RunStats) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("initial_objective", stats.initial_objective)?;
    d.set_item("final_objective", stats.final_objective)?;
    d.set_item("iterations", stats.iterations_run)?;
    d.set_item("stall_fallbacks", stats.stall_fallbacks)?;
    d.set_item("rejections", stats.rejections)?;
    d.set_item("elapsed_ms", stats.elapsed_ms)?;
    d.set_item("objectives", stats.iterations.iter().map(|i| i.objective).collect::<Vec<_>>())?;
    d.set_item("size_ratios", stats.iterations.iter().map(|i| i.size_ratio).collect::<Vec<_>>())?;
    Ok(d)
}

#[allow(clippy::too_many_arguments)]
fn loop_config(
    segmenter: &str,
    backbone: &str,
    moves_per_iter: u64,
    iters: Option<usize>,
    time_limit_ms: Option<u64>,
    seed: u64,
    oracle_free_time: bool,
) -> PyResult<LoopConfig> {
    let mut cfg = LoopConfig::new(segmenter.parse().map_err(err)?, solve_mode(backbone)?, MoveBudget::moves(moves_per_iter, 0));
    cfg.max_iters = iters;
    cfg.time_limit_ms = time_limit_ms;
    cfg.seed = seed;
    cfg.oracle_free_time = oracle_free_time;
    cfg.record_stats = true;
    Ok(cfg)
}

/// Segment-then-aggregate loop; returns the final solution and run stats.
#[pyfunction]
#[pyo3(signature = (instance, solution, segmenter="oracle:1000", backbone="lns", moves_per_iter=1000, iters=None, time_limit_ms=None, seed=0, oracle_free_time=false))]
#[allow(clippy::too_many_arguments)]
fn run_fsta<'py>(
    py: Python<'py>,
    instance: &Instance,
    solution: &Solution,
    segmenter: &str,
    backbone: &str,
    moves_per_iter: u64,
    iters: Option<usize>,
    time_limit_ms: Option<u64>,
    seed: u64,
    oracle_free_time: bool,
) -> PyResult<(Solution, Bound<'py, PyDict>)> {
    let cfg = loop_config(segmenter, backbone, moves_per_iter, iters, time_limit_ms, seed, oracle_free_time)?;
    let (sol, stats) = run_fsta_loop(&instance.0, &solution.0, &cfg).map_err(err)?;
    Ok((Solution(sol), stats_dict(py, &stats)?))
}

/// The plain backbone loop under the same budget rules.
#[pyfunction]
#[pyo3(signature = (instance, solution, backbone="lns", moves_per_iter=1000, iters=None, time_limit_ms=None, seed=0))]
fn run_plain<'py>(
    py: Python<'py>,
    instance: &Instance,
    solution: &Solution,
    backbone: &str,
    moves_per_iter: u64,
    iters: Option<usize>,
    time_limit_ms: Option<u64>,
    seed: u64,
) -> PyResult<(Solution, Bound<'py, PyDict>)> {
    let cfg = loop_config("random:1.0", backbone, moves_per_iter, iters, time_limit_ms, seed, false)?;
    let (sol, stats) = run_plain_loop(&instance.0, &solution.0, &cfg).map_err(err)?;
    Ok((Solution(sol), stats_dict(py, &stats)?))
}

/// Feasibility transfer and order preservation on one decomposition.
#[pyfunction(name = "verify_theorem")]
#[pyo3(signature = (instance, solution, unstable, trials=500, seed=0))]
fn verify<'py>(
    py: Python<'py>,
    instance: &Instance,
    solution: &Solution,
    unstable: Vec<(usize, usize)>,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = verify_theorem(&instance.0, &solution.0, &to_edge_set(&unstable), trials, seed, &AggregationOptions::default())
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("passed", rep.passed())?;
    d.set_item("exhaustive", rep.exhaustive)?;
    d.set_item("cases", rep.cases)?;
    d.set_item("feasibility_failures", rep.feasibility_failures)?;
    d.set_item("order_failures", rep.order_failures)?;
    d.set_item("max_offset_error", rep.max_offset_error)?;
    Ok(d)
}

#[pymodule]
fn fsta(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<Solution>()?;
    m.add_class::<Reduction>()?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_fsta, m)?)?;
    m.add_function(wrap_pyfunction!(run_plain, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
