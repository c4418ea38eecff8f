//! Angular sweep construction of a first solution.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::backbone::{run_engine, MoveBudget, SearchParams, SolveMode};
use crate::error::{Error, Result};
use crate::model::{check_feasibility, route_is_feasible, Instance, Solution, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    /// Vehicles worth of demand per sweep group.
    pub k_veh: usize,
    pub alpha_init: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams { k_veh: 6, alpha_init: 0.95 }
    }
}

/// Sorts customers by polar angle around the depot (measured from the first
/// customer, ties by index), cuts the order into groups of about
/// `alpha_init * k_veh * C` demand, splits each group greedily into feasible
/// routes and improves each group independently with the local search.
pub fn initial_solution_sweep(instance: &Instance, params: &SweepParams, budget: &MoveBudget) -> Result<Solution> {
    if params.k_veh == 0 || !(params.alpha_init > 0.0 && params.alpha_init <= 1.0) {
        return Err(Error::InvalidConfig("sweep needs k_veh >= 1 and alpha_init in (0, 1]".into()));
    }
    budget.validate()?;
    let n = instance.len();
    if let Some(c) = (1..n).find(|&c| !route_is_feasible(instance, &[c])) {
        return Err(Error::InfeasibleInstance(format!("customer {c} cannot be served by its own route")));
    }
    if n <= 1 {
        return Ok(Solution::default());
    }

    let depot = instance.node(0);
    let angle = |c: usize| {
        let p = instance.node(c);
        (p.y - depot.y).atan2(p.x - depot.x)
    };
    let reference = angle(1);
    let mut order: Vec<(f64, usize)> = (1..n).map(|c| ((angle(c) - reference).rem_euclid(TAU), c)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let target = params.alpha_init * params.k_veh as f64 * instance.capacity();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut cur = Vec::new();
    let mut load = 0.0;
    for &(_, c) in &order {
        let d = instance.node(c).demand.abs();
        if !cur.is_empty() && load + d > target {
            groups.push(std::mem::take(&mut cur));
            load = 0.0;
        }
        cur.push(c);
        load += d;
    }
    if !cur.is_empty() {
        groups.push(cur);
    }

    let mut routes = Vec::new();
    for (g, mut group) in groups.into_iter().enumerate() {
        if instance.variant() == Variant::Vrpb {
            // stable: linehauls first, sweep order kept within each class
            group.sort_by_key(|&c| instance.node(c).is_backhaul);
        }
        let mut split: Vec<Vec<usize>> = Vec::new();
        let mut cur: Vec<usize> = Vec::new();
        for c in group {
            cur.push(c);
            if !route_is_feasible(instance, &cur) {
                cur.pop();
                split.push(std::mem::replace(&mut cur, vec![c]));
            }
        }
        if !cur.is_empty() {
            split.push(cur);
        }
        let group_budget = budget.with_seed(budget.seed.wrapping_add(g as u64));
        let (improved, _) = run_engine(instance, split, &group_budget, SolveMode::PlainLs, SearchParams::default())?;
        routes.extend(improved);
    }
    let solution = Solution::new(routes);
    let report = check_feasibility(instance, &solution);
    if !report.feasible {
        return Err(Error::InfeasibleInstance(format!("sweep produced {:?}", report.violations[0])));
    }
    Ok(solution)
}
