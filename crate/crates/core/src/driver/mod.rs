//! The iterative re-optimization loop, its plain-backbone twin, training
//! trace export and the evaluation helpers behind the command line.

mod analysis;
mod traces;

pub use analysis::{decompose_subproblems, eval_segmenter, measure_redundancy, route_pairs, EvalReport, RedundancyConfig, Subproblem};
pub use traces::{alternating_circuit, export_traces, ArSequence, Stage, TraceConfig, TraceRecord, TraceSummary};

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backbone::{solve_warm_with, MoveBudget, SearchParams, SolveMode};
use crate::error::{Error, Result};
use crate::fsta::{build_reduced, normalize_unstable, recover, AggregationOptions};
use crate::mix_seed;
use crate::model::{check_feasibility, edge_diff, edge_set, objective_unchecked, EdgeSet, Instance, Solution};
use crate::segmenter::{oracle_edges, score, Backbone, Segmenter, SegmenterPolicy};

/// Share of non-depot edges marked when a policy returns none.
pub const STALL_FALLBACK_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub segmenter: SegmenterPolicy,
    pub mode: SolveMode,
    pub params: SearchParams,
    /// Budget of one backbone call; its seed is replaced per iteration.
    pub per_iter: MoveBudget,
    pub max_iters: Option<usize>,
    pub time_limit_ms: Option<u64>,
    /// Segmenter time does not count toward `time_limit_ms`.
    pub oracle_free_time: bool,
    pub record_stats: bool,
    pub seed: u64,
    pub aggregation: AggregationOptions,
    /// Scores every detection against a lookahead oracle with this budget.
    /// Scoring time is never charged.
    pub score_oracle: Option<MoveBudget>,
}

impl LoopConfig {
    pub fn new(segmenter: SegmenterPolicy, mode: SolveMode, per_iter: MoveBudget) -> Self {
        LoopConfig {
            segmenter,
            mode,
            params: SearchParams::default(),
            per_iter,
            max_iters: None,
            time_limit_ms: None,
            oracle_free_time: false,
            record_stats: true,
            seed: 0,
            aggregation: AggregationOptions::default(),
            score_oracle: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters.is_none() && self.time_limit_ms.is_none() {
            return Err(Error::InvalidConfig("set an iteration limit, a time limit or both".into()));
        }
        self.per_iter.validate()?;
        if let Some(b) = &self.score_oracle {
            b.validate()?;
        }
        self.segmenter.validate()
    }

    pub fn backbone(&self) -> Backbone {
        Backbone {
            mode: self.mode,
            params: self.params,
        }
    }
}

/// One line of the stats stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iter: usize,
    pub elapsed_ms: f64,
    pub objective: f64,
    pub size_ratio: f64,
    pub recall: Option<f64>,
    pub tnr: Option<f64>,
    pub changed_frac: f64,
}

/// Raw counts behind one recall/TNR pair, on non-depot edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreCounts {
    pub hits: usize,
    pub oracle: usize,
    pub stable_hits: usize,
    pub stable: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub iterations: Vec<IterationStats>,
    pub score_counts: Vec<ScoreCounts>,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub iterations_run: usize,
    pub stall_fallbacks: usize,
    /// Recovered solutions that failed the feasibility guard.
    pub rejections: usize,
    pub segmenter_ms: f64,
    pub solve_ms: f64,
    pub elapsed_ms: f64,
}

impl RunStats {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for it in &self.iterations {
            serde_json::to_writer(&mut w, it)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// A loop aborted by an error; keeps what was done before it.
#[derive(Debug)]
pub struct LoopFailure {
    pub error: Error,
    pub partial: RunStats,
    pub last_solution: Solution,
}

impl fmt::Display for LoopFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} iterations)", self.error, self.partial.iterations_run)
    }
}

impl std::error::Error for LoopFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<LoopFailure> for Error {
    fn from(f: LoopFailure) -> Self {
        f.error
    }
}

struct Clock {
    start: Instant,
    free_ms: f64,
}

impl Clock {
    fn new() -> Self {
        Clock { start: Instant::now(), free_ms: 0.0 }
    }

    fn charged_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3 - self.free_ms
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn check_start(instance: &Instance, init: &Solution) -> Result<()> {
    init.validate_structure(instance.len())?;
    let report = check_feasibility(instance, init);
    if !report.feasible {
        return Err(Error::InfeasibleStart(format!("{:?}", report.violations[0])));
    }
    Ok(())
}

/// Iteration budget with its seed and, under a time limit, the remaining time.
fn iteration_budget(cfg: &LoopConfig, iter: usize, clock: &Clock) -> Option<MoveBudget> {
    let mut budget = cfg.per_iter.with_seed(mix_seed(cfg.seed, iter as u64));
    if let Some(limit) = cfg.time_limit_ms {
        let left = limit as f64 - clock.charged_ms();
        if left <= 0.0 {
            return None;
        }
        let left = left.ceil() as u64;
        budget.max_millis = Some(budget.max_millis.map_or(left, |m| m.min(left)));
    }
    Some(budget)
}

/// Share of `before`'s edges that `after` no longer uses.
pub(crate) fn changed_fraction(before: &Solution, after: &Solution) -> f64 {
    let current = edge_set(before);
    if current.is_empty() {
        0.0
    } else {
        edge_diff(before, after).intersection(&current).len() as f64 / current.len() as f64
    }
}

fn non_depot(set: &EdgeSet) -> EdgeSet {
    let mut out = set.clone();
    out.retain(|e| !e.touches_depot());
    out
}

fn marks_something(set: &EdgeSet) -> bool {
    set.iter().any(|e| !e.touches_depot())
}

fn score_counts(predicted: &EdgeSet, oracle: &EdgeSet, universe: &EdgeSet) -> ScoreCounts {
    let hits = predicted.intersection(oracle).len();
    ScoreCounts {
        hits,
        oracle: oracle.len(),
        stable_hits: universe.len() - predicted.union(oracle).len(),
        stable: universe.len() - oracle.len(),
    }
}

/// Segment, aggregate, re-optimize the reduced problem and expand back,
/// until the iteration or time budget runs out.
///
/// Every adopted solution passes the feasibility check, so the objective
/// never increases; a failed check keeps the current solution.
pub fn run_fsta_loop(
    instance: &Instance,
    init: &Solution,
    cfg: &LoopConfig,
) -> std::result::Result<(Solution, RunStats), LoopFailure> {
    let fail = |error: Error, stats: RunStats, sol: Solution| LoopFailure {
        error,
        partial: stats,
        last_solution: sol,
    };
    let mut stats = RunStats::default();
    if let Err(e) = cfg.validate().and_then(|_| check_start(instance, init)) {
        return Err(fail(e, stats, init.clone()));
    }
    let backbone = cfg.backbone();
    let mut segmenter = match Segmenter::new(cfg.segmenter.clone()) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, stats, init.clone())),
    };
    let mut current = init.clone();
    let mut objective = objective_unchecked(instance, &current);
    stats.initial_objective = objective;
    stats.final_objective = objective;
    let clock = &mut Clock::new();

    for iter in 0.. {
        if cfg.max_iters.is_some_and(|m| iter >= m) {
            break;
        }
        let Some(budget) = iteration_budget(cfg, iter, clock) else { break };

        let universe = non_depot(&edge_set(&current));
        let scored = match cfg.score_oracle {
            Some(ob) => {
                let t = Instant::now();
                let ob = ob.with_seed(mix_seed(ob.seed, iter as u64 + 1));
                let res = oracle_edges(instance, &current, &ob, &backbone);
                clock.free_ms += ms_since(t);
                match res {
                    Ok((set, _)) => Some(non_depot(&set)),
                    Err(e) => return Err(fail(e, stats, current)),
                }
            }
            None => None,
        };

        let t = Instant::now();
        let detected = segmenter.detect(instance, &current, iter, Some(&backbone));
        let seg_ms = ms_since(t);
        stats.segmenter_ms += seg_ms;
        if cfg.oracle_free_time {
            clock.free_ms += seg_ms;
        }
        let detected = match detected {
            Ok(d) => d,
            Err(e) => return Err(fail(e, stats, current)),
        };

        let (recall, tnr) = match &scored {
            Some(oracle) => {
                let predicted = non_depot(&detected);
                let counts = score_counts(&predicted, oracle, &universe);
                stats.score_counts.push(counts);
                match score(&predicted, oracle, &universe) {
                    Ok(s) => (Some(s.recall), Some(s.tnr)),
                    Err(e) => return Err(fail(e, stats, current)),
                }
            }
            None => (None, None),
        };

        let mut unstable = detected;
        if !marks_something(&unstable) && !universe.is_empty() {
            stats.stall_fallbacks += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed ^ 0x5354_414c_4c00, iter as u64));
            for e in universe.iter() {
                if rng.gen_bool(STALL_FALLBACK_FRACTION) {
                    unstable.insert_edge(e);
                }
            }
        }

        let t = Instant::now();
        let step = reduce_and_solve(instance, &current, &unstable, cfg, &budget);
        stats.solve_ms += ms_since(t);
        let (candidate, size_ratio) = match step {
            Ok(x) => x,
            Err(e) => return Err(fail(e, stats, current)),
        };

        let changed = if check_feasibility(instance, &candidate).feasible {
            let frac = changed_fraction(&current, &candidate);
            current = candidate;
            objective = objective_unchecked(instance, &current);
            frac
        } else {
            stats.rejections += 1;
            0.0
        };
        stats.iterations_run += 1;
        stats.final_objective = objective;
        if cfg.record_stats {
            stats.iterations.push(IterationStats {
                iter: iter + 1,
                elapsed_ms: clock.charged_ms(),
                objective,
                size_ratio,
                recall,
                tnr,
                changed_frac: changed,
            });
        }
    }
    stats.elapsed_ms = clock.charged_ms();
    Ok((current, stats))
}

fn reduce_and_solve(
    instance: &Instance,
    current: &Solution,
    unstable: &EdgeSet,
    cfg: &LoopConfig,
    budget: &MoveBudget,
) -> Result<(Solution, f64)> {
    let unstable = normalize_unstable(instance, current, unstable)?;
    let (reduced, start, map) = build_reduced(instance, current, &unstable, &cfg.aggregation)?;
    let (solved, _) = solve_warm_with(&reduced, &start, budget, cfg.mode, cfg.params)?;
    Ok((recover(&solved, &map)?, reduced.size_ratio()))
}

/// The baseline: the backbone on the full problem with the same iteration
/// structure, budgets and seeds as [`run_fsta_loop`]. The segmenter and
/// scoring settings of `cfg` are ignored.
pub fn run_plain_loop(
    instance: &Instance,
    init: &Solution,
    cfg: &LoopConfig,
) -> std::result::Result<(Solution, RunStats), LoopFailure> {
    let mut stats = RunStats::default();
    let fail = |error: Error, stats: RunStats, sol: Solution| LoopFailure {
        error,
        partial: stats,
        last_solution: sol,
    };
    if let Err(e) = cfg.validate().and_then(|_| check_start(instance, init)) {
        return Err(fail(e, stats, init.clone()));
    }
    let mut current = init.clone();
    stats.initial_objective = objective_unchecked(instance, &current);
    stats.final_objective = stats.initial_objective;
    let clock = &mut Clock::new();

    for iter in 0.. {
        if cfg.max_iters.is_some_and(|m| iter >= m) {
            break;
        }
        let Some(budget) = iteration_budget(cfg, iter, clock) else { break };
        let t = Instant::now();
        let step = solve_warm_with(instance, &current, &budget, cfg.mode, cfg.params);
        stats.solve_ms += ms_since(t);
        let next = match step {
            Ok((s, _)) => s,
            Err(e) => return Err(fail(e, stats, current)),
        };
        let changed = changed_fraction(&current, &next);
        current = next;
        let objective = objective_unchecked(instance, &current);
        stats.iterations_run += 1;
        stats.final_objective = objective;
        if cfg.record_stats {
            stats.iterations.push(IterationStats {
                iter: iter + 1,
                elapsed_ms: clock.charged_ms(),
                objective,
                size_ratio: 1.0,
                recall: None,
                tnr: None,
                changed_frac: changed,
            });
        }
    }
    stats.elapsed_ms = clock.charged_ms();
    Ok((current, stats))
}
