//! Route-pair decomposition, redundancy profiling and segmenter evaluation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{changed_fraction, run_fsta_loop, LoopConfig, RunStats, ScoreCounts};
use crate::backbone::MoveBudget;
use crate::error::{Error, Result};
use crate::mix_seed;
use crate::model::{Instance, Solution};
use crate::segmenter::{Backbone, SegmenterPolicy};

/// Centroid of each route's customers.
fn centroids(instance: &Instance, solution: &Solution) -> Vec<(f64, f64)> {
    solution
        .routes
        .iter()
        .map(|r| {
            let n = r.len().max(1) as f64;
            let (sx, sy) = r.iter().fold((0.0, 0.0), |(x, y), &c| {
                let p = instance.node(c);
                (x + p.x, y + p.y)
            });
            (sx / n, sy / n)
        })
        .collect()
}

/// Nearest other route by centroid distance, lowest index on ties; a lone
/// route is its own neighbor.
pub(crate) fn nearest_routes(instance: &Instance, solution: &Solution) -> Vec<usize> {
    let cs = centroids(instance, solution);
    (0..cs.len())
        .map(|r| {
            let mut best = (f64::INFINITY, r);
            for (s, c) in cs.iter().enumerate() {
                if s == r {
                    continue;
                }
                let d = (c.0 - cs[r].0).hypot(c.1 - cs[r].1);
                if d < best.0 {
                    best = (d, s);
                }
            }
            best.1
        })
        .collect()
}

/// Each route paired with its nearest route, as sorted unordered pairs.
pub fn route_pairs(instance: &Instance, solution: &Solution) -> Vec<(usize, usize)> {
    let pairs: BTreeSet<(usize, usize)> = nearest_routes(instance, solution)
        .into_iter()
        .enumerate()
        .map(|(r, s)| (r.min(s), r.max(s)))
        .collect();
    pairs.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subproblem {
    pub route_pair: (usize, usize),
    /// Depot first, then the customers of both routes.
    pub instance: Instance,
    pub solution: Solution,
    /// Original index of every sub-instance node.
    pub node_map: Vec<usize>,
}

/// One sub-instance per nearest-route pair, holding the depot and the
/// customers of both routes.
pub fn decompose_subproblems(instance: &Instance, solution: &Solution) -> Result<Vec<Subproblem>> {
    solution.validate_structure(instance.len())?;
    route_pairs(instance, solution)
        .into_iter()
        .map(|(a, b)| {
            let routes: Vec<&Vec<usize>> = if a == b {
                vec![&solution.routes[a]]
            } else {
                vec![&solution.routes[a], &solution.routes[b]]
            };
            let mut node_map = vec![0];
            let mut local_routes = Vec::new();
            for r in routes {
                let mut local = Vec::with_capacity(r.len());
                for &c in r {
                    local.push(node_map.len());
                    node_map.push(c);
                }
                local_routes.push(local);
            }
            let nodes = node_map.iter().map(|&i| instance.node(i).clone()).collect();
            let sub = Instance::new(
                format!("{}-r{a}-r{b}", instance.id()),
                instance.variant(),
                nodes,
                instance.capacity(),
                instance.distance_mode(),
            )?;
            Ok(Subproblem {
                route_pair: (a, b),
                instance: sub,
                solution: Solution::new(local_routes),
                node_map,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedundancyConfig {
    pub backbone: Backbone,
    pub per_step: MoveBudget,
    pub seed: u64,
}

/// Runs the backbone `steps` times from `init` and returns, per step, the
/// share of the current solution's edges that the step changed.
pub fn measure_redundancy(instance: &Instance, init: &Solution, cfg: &RedundancyConfig, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidConfig("steps must be at least 1".into()));
    }
    cfg.per_step.validate()?;
    let mut current = init.clone();
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let budget = cfg.per_step.with_seed(mix_seed(cfg.seed, t as u64));
        let (next, _) = crate::backbone::solve_warm_with(instance, &current, &budget, cfg.backbone.mode, cfg.backbone.params)?;
        out.push(changed_fraction(&current, &next));
        current = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: String,
    /// Pooled over all scored iterations of all instances.
    pub recall: f64,
    pub tnr: f64,
    pub mean_size_ratio: f64,
    pub counts: ScoreCounts,
    pub runs: Vec<RunStats>,
}

/// Runs the loop with `policy` on every instance, scoring each detection
/// against the lookahead oracle on the same state.
pub fn eval_segmenter(
    instances: &[(Instance, Solution)],
    policy: &SegmenterPolicy,
    cfg: &LoopConfig,
    oracle_budget: MoveBudget,
) -> Result<EvalReport> {
    let cfg = LoopConfig {
        segmenter: policy.clone(),
        score_oracle: Some(oracle_budget),
        record_stats: true,
        ..cfg.clone()
    };
    let mut total = ScoreCounts::default();
    let mut ratios = Vec::new();
    let mut runs = Vec::with_capacity(instances.len());
    for (instance, init) in instances {
        let (_, stats) = run_fsta_loop(instance, init, &cfg)?;
        for c in &stats.score_counts {
            total.hits += c.hits;
            total.oracle += c.oracle;
            total.stable_hits += c.stable_hits;
            total.stable += c.stable;
        }
        ratios.extend(stats.iterations.iter().map(|i| i.size_ratio));
        runs.push(stats);
    }
    let rate = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    Ok(EvalReport {
        policy: policy.name().to_string(),
        recall: rate(total.hits, total.oracle),
        tnr: rate(total.stable_hits, total.stable),
        mean_size_ratio: if ratios.is_empty() {
            1.0
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        },
        counts: total,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbone::SolveMode;
    use crate::model::{DistanceMode, Node, Variant};

    fn four_clusters() -> (Instance, Solution) {
        let mut nodes = vec![Node::depot(0.5, 0.5)];
        let centers = [(0.1, 0.1), (0.2, 0.15), (0.9, 0.9), (0.85, 0.7)];
        for (cx, cy) in centers {
            for k in 0..3 {
                nodes.push(Node::customer(cx + 0.01 * k as f64, cy, 1.0));
            }
        }
        let inst = Instance::new("q", Variant::Cvrp, nodes, 10.0, DistanceMode::EuclideanF64).unwrap();
        let sol = Solution::new(vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9], vec![10, 11, 12]]);
        (inst, sol)
    }

    #[test]
    fn pairs_follow_nearest_centroids() {
        let (inst, sol) = four_clusters();
        assert_eq!(route_pairs(&inst, &sol), vec![(0, 1), (2, 3)]);
        let subs = decompose_subproblems(&inst, &sol).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[1].node_map, vec![0, 7, 8, 9, 10, 11, 12]);
        assert_eq!(subs[1].solution.routes, vec![vec![1, 2, 3], vec![4, 5, 6]]);
        assert_eq!(subs[1].instance.node(4), inst.node(10));
    }

    #[test]
    fn single_route_is_its_own_subproblem() {
        let (inst, _) = four_clusters();
        let sol = Solution::new(vec![(1..=12).collect()]);
        let subs = decompose_subproblems(&inst, &sol).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].route_pair, (0, 0));
        assert_eq!(subs[0].instance.len(), 13);
    }

    #[test]
    fn redundancy_of_a_converged_solution_is_zero() {
        let (inst, sol) = four_clusters();
        let cfg = RedundancyConfig {
            backbone: Backbone::new(SolveMode::PlainLs),
            per_step: MoveBudget::moves(10_000, 0),
            seed: 1,
        };
        let f = measure_redundancy(&inst, &sol, &cfg, 4).unwrap();
        assert!(f.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(f[1..].iter().all(|&x| x == 0.0), "{f:?}");
        assert!(measure_redundancy(&inst, &sol, &cfg, 0).is_err());
    }
}
