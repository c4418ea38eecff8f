//! Warm-start local search and LNS over any [`ProblemView`].
//!
//! The same solver re-optimizes original instances and reduced problems; forced
//! links of a reduced problem are honored by construction of the move set.

mod engine;
mod view;

pub use view::{MoveBudget, ProblemView, SearchParams, SearchStats, SolveMode};

pub(crate) use engine::Engine;

use crate::error::{Error, Result};
use crate::model::Solution;

fn check_start<V: ProblemView + ?Sized>(view: &V, start: &Solution) -> Result<()> {
    start.validate_structure(view.node_count())
}

/// First-improvement descent over relocate, swap, 2-opt and 2-opt*.
pub fn local_search<V: ProblemView + ?Sized>(
    view: &V,
    start: &Solution,
    budget: &MoveBudget,
) -> Result<(Solution, SearchStats)> {
    solve_warm_with(view, start, budget, SolveMode::PlainLs, SearchParams::default())
}

/// A single LNS step on `neighborhood_routes` routes around a random route.
pub fn lns_step<V: ProblemView + ?Sized>(
    view: &V,
    start: &Solution,
    neighborhood_routes: usize,
    budget: &MoveBudget,
) -> Result<(Solution, SearchStats)> {
    check_start(view, start)?;
    if neighborhood_routes == 0 {
        return Err(Error::InvalidConfig("neighborhood_routes must be at least 1".into()));
    }
    let params = SearchParams {
        neighborhood_routes,
        ..SearchParams::default()
    };
    let mut engine = Engine::new(view, start.routes.clone(), budget, params)?;
    if budget.max_moves != Some(0) && !start.routes.is_empty() {
        engine.lns_step();
    }
    let (routes, stats) = engine.into_parts();
    Ok((Solution::new(routes), stats))
}

pub fn solve_warm<V: ProblemView + ?Sized>(
    view: &V,
    start: &Solution,
    budget: &MoveBudget,
    mode: SolveMode,
) -> Result<(Solution, SearchStats)> {
    solve_warm_with(view, start, budget, mode, SearchParams::default())
}

/// [`solve_warm`] with explicit search parameters.
pub fn solve_warm_with<V: ProblemView + ?Sized>(
    view: &V,
    start: &Solution,
    budget: &MoveBudget,
    mode: SolveMode,
    params: SearchParams,
) -> Result<(Solution, SearchStats)> {
    check_start(view, start)?;
    let (routes, stats) = run_engine(view, start.routes.clone(), budget, mode, params)?;
    Ok((Solution::new(routes), stats))
}

/// Runs the solver on routes that may cover only part of the customers.
pub(crate) fn run_engine<V: ProblemView + ?Sized>(
    view: &V,
    routes: Vec<Vec<usize>>,
    budget: &MoveBudget,
    mode: SolveMode,
    params: SearchParams,
) -> Result<(Vec<Vec<usize>>, SearchStats)> {
    let mut engine = Engine::new(view, routes, budget, params)?;
    if budget.max_moves != Some(0) && !engine.routes().is_empty() {
        match mode {
            SolveMode::PlainLs => engine.local_search(),
            SolveMode::Lns => {
                while !engine.out_of_budget() {
                    engine.lns_step();
                }
            }
        }
    }
    Ok(engine.into_parts())
}
