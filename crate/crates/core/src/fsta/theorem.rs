use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::reduced::{build_reduced, recover, ReducedProblem};
use super::AggregationOptions;
use crate::error::Result;
use crate::model::{check_feasibility, objective_unchecked, route_is_feasible, EdgeSet, Instance, Solution};

/// Instances up to this many customers are checked over every reduced solution.
pub const EXHAUSTIVE_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremWitness {
    pub reason: String,
    pub reduced: Vec<Solution>,
    pub recovered: Vec<Solution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub exhaustive: bool,
    /// Feasible reduced solutions examined.
    pub cases: usize,
    pub pairs_compared: usize,
    pub feasibility_failures: usize,
    pub order_failures: usize,
    pub max_offset_error: f64,
    pub objective_offset: f64,
    pub witness: Option<TheoremWitness>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.feasibility_failures == 0 && self.order_failures == 0
    }
}

struct Case {
    reduced: Solution,
    recovered: Solution,
    f_reduced: f64,
    f: f64,
}

/// Checks on one decomposition that every feasible reduced solution recovers
/// to a feasible original solution, and that recovery preserves the order of
/// objectives. Reduced solutions are enumerated exhaustively for small
/// instances and drawn as `trials` random pairs otherwise.
pub fn verify_theorem(
    instance: &Instance,
    solution: &Solution,
    unstable: &EdgeSet,
    trials: usize,
    seed: u64,
    opts: &AggregationOptions,
) -> Result<TheoremReport> {
    let (problem, reduced_start, map) = build_reduced(instance, solution, unstable, opts)?;
    let units: Vec<(Vec<usize>, bool)> = (0..map.segments.len())
        .map(|s| {
            let first = map.first_hypernode[s];
            ((first..first + map.hypernode_count[s]).collect(), map.reversible[s])
        })
        .collect();

    let mut report = TheoremReport {
        exhaustive: instance.n_customers() <= EXHAUSTIVE_LIMIT,
        cases: 0,
        pairs_compared: 0,
        feasibility_failures: 0,
        order_failures: 0,
        max_offset_error: 0.0,
        objective_offset: map.objective_offset,
        witness: None,
    };
    let tol = |f: f64| 1e-9 * (1.0 + f.abs());

    let evaluate = |routes: Vec<Vec<usize>>, report: &mut TheoremReport| -> Result<Option<Case>> {
        if !routes.iter().all(|r| route_is_feasible(&problem, r)) {
            return Ok(None);
        }
        let reduced = Solution::new(routes);
        let recovered = recover(&reduced, &map)?;
        let f_reduced = problem.objective(&reduced);
        let f = objective_unchecked(instance, &recovered);
        report.cases += 1;
        let err = (f - f_reduced - map.objective_offset).abs();
        report.max_offset_error = report.max_offset_error.max(err);
        if !check_feasibility(instance, &recovered).feasible {
            report.feasibility_failures += 1;
            if report.witness.is_none() {
                report.witness = Some(TheoremWitness {
                    reason: "recovered solution is infeasible".into(),
                    reduced: vec![reduced.clone()],
                    recovered: vec![recovered.clone()],
                });
            }
        }
        Ok(Some(Case { reduced, recovered, f_reduced, f }))
    };

    if report.exhaustive {
        let mut cases = Vec::new();
        let mut partial: Vec<Vec<Vec<usize>>> = Vec::new();
        let mut err = None;
        enumerate(&units, 0, &mut partial, &mut |routes| {
            if err.is_some() {
                return;
            }
            match evaluate(routes, &mut report) {
                Ok(Some(c)) => cases.push(c),
                Ok(None) => {}
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        cases.sort_by(|a, b| a.f_reduced.total_cmp(&b.f_reduced));
        report.pairs_compared = cases.len().saturating_sub(1);
        // with sorted reduced objectives, order holds iff no earlier case has a larger f
        let mut best: Option<usize> = None;
        for j in 0..cases.len() {
            if let Some(i) = best {
                if cases[i].f > cases[j].f + tol(cases[j].f)
                    && cases[i].f_reduced <= cases[j].f_reduced
                {
                    note_order(&mut report, &cases[i], &cases[j]);
                }
            }
            if best.is_none_or(|i| cases[j].f > cases[i].f) {
                best = Some(j);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start_case = evaluate(reduced_start.routes.clone(), &mut report)?;
        let mut prev = start_case;
        for _ in 0..trials {
            let a = match prev.take() {
                Some(c) => c,
                None => match evaluate(random_solution(&problem, &units, &mut rng), &mut report)? {
                    Some(c) => c,
                    None => continue,
                },
            };
            let Some(b) = evaluate(random_solution(&problem, &units, &mut rng), &mut report)? else {
                continue;
            };
            report.pairs_compared += 1;
            let (lo, hi) = if a.f_reduced <= b.f_reduced { (&a, &b) } else { (&b, &a) };
            if lo.f > hi.f + tol(hi.f) {
                note_order(&mut report, lo, hi);
            }
        }
    }
    Ok(report)
}

fn note_order(report: &mut TheoremReport, lo: &Case, hi: &Case) {
    report.order_failures += 1;
    if report.witness.is_none() {
        report.witness = Some(TheoremWitness {
            reason: format!(
                "reduced objectives {} <= {} but recovered {} > {}",
                lo.f_reduced, hi.f_reduced, lo.f, hi.f
            ),
            reduced: vec![lo.reduced.clone(), hi.reduced.clone()],
            recovered: vec![lo.recovered.clone(), hi.recovered.clone()],
        });
    }
}

/// Every set of routes over the units: each unit goes into any gap between
/// units of an existing route or opens a new route, in each allowed orientation.
fn enumerate(
    units: &[(Vec<usize>, bool)],
    idx: usize,
    routes: &mut Vec<Vec<Vec<usize>>>,
    visit: &mut dyn FnMut(Vec<Vec<usize>>),
) {
    if idx == units.len() {
        visit(routes.iter().map(|r| r.concat()).collect());
        return;
    }
    let (nodes, reversible) = &units[idx];
    let orientations = if *reversible && nodes.len() > 1 { 2 } else { 1 };
    for o in 0..orientations {
        let seq: Vec<usize> = if o == 0 {
            nodes.clone()
        } else {
            nodes.iter().rev().copied().collect()
        };
        for r in 0..routes.len() {
            for pos in 0..=routes[r].len() {
                routes[r].insert(pos, seq.clone());
                enumerate(units, idx + 1, routes, visit);
                routes[r].remove(pos);
            }
        }
        routes.push(vec![seq]);
        enumerate(units, idx + 1, routes, visit);
        routes.pop();
    }
}

/// Random unit order and orientations, split greedily into feasible routes.
fn random_solution(problem: &ReducedProblem<'_>, units: &[(Vec<usize>, bool)], rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.shuffle(rng);
    let mut routes: Vec<Vec<usize>> = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    for u in order {
        let (nodes, reversible) = &units[u];
        let flip = *reversible && rng.gen_bool(0.5);
        let seq: Vec<usize> = if flip {
            nodes.iter().rev().copied().collect()
        } else {
            nodes.clone()
        };
        let mut candidate = cur.clone();
        candidate.extend_from_slice(&seq);
        if !cur.is_empty() && (rng.gen_bool(0.15) || !route_is_feasible(problem, &candidate)) {
            routes.push(std::mem::replace(&mut cur, seq));
        } else {
            cur = candidate;
        }
    }
    if !cur.is_empty() {
        routes.push(cur);
    }
    routes
}
