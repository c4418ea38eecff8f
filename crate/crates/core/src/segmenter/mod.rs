//! Unstable-edge detection policies and their scoring against the lookahead
//! oracle.

mod external;

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backbone::{solve_warm_with, MoveBudget, SearchParams, SolveMode};
use crate::error::{Error, Result};
use crate::mix_seed;
use crate::model::{edge_diff, edge_set, EdgeSet, Instance, Solution};

pub use external::ExternalSource;

/// Default reply timeout for an external segmenter process.
pub const EXTERNAL_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SegmenterPolicy {
    /// Marks each non-depot edge independently with probability `fraction`.
    Random { fraction: f64, seed: u64 },
    /// Marks edges touching a node whose `k_nn` nearest neighbors mostly lie
    /// on other routes.
    Geometric { k_nn: usize, internality_threshold: f64 },
    /// Marks the edges one backbone call would remove.
    Oracle { lookahead_budget: MoveBudget },
    External(ExternalSource),
}

impl SegmenterPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            SegmenterPolicy::Random { .. } => "random",
            SegmenterPolicy::Geometric { .. } => "geometric",
            SegmenterPolicy::Oracle { .. } => "oracle",
            SegmenterPolicy::External(_) => "external",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SegmenterPolicy::Random { fraction, .. } if !(*fraction > 0.0 && *fraction <= 1.0) => {
                Err(Error::InvalidConfig(format!("random fraction {fraction} outside (0, 1]")))
            }
            SegmenterPolicy::Geometric { k_nn: 0, .. } => Err(Error::InvalidConfig("geometric k_nn must be positive".into())),
            SegmenterPolicy::Geometric { internality_threshold: t, .. } if !(0.0..=1.0).contains(t) => {
                Err(Error::InvalidConfig(format!("internality threshold {t} outside [0, 1]")))
            }
            SegmenterPolicy::Oracle { lookahead_budget } => lookahead_budget.validate(),
            _ => Ok(()),
        }
    }
}

/// Parses `random:F`, `geometric:K:T`, `oracle:M`, `external-file:PATH` and
/// `external-cmd:CMD`. Random seeds default to 0.
impl FromStr for SegmenterPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse segmenter `{s}`"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let policy = match kind {
            "random" => SegmenterPolicy::Random {
                fraction: rest.parse().map_err(|_| bad())?,
                seed: 0,
            },
            "geometric" => {
                let (k, t) = rest.split_once(':').ok_or_else(bad)?;
                SegmenterPolicy::Geometric {
                    k_nn: k.parse().map_err(|_| bad())?,
                    internality_threshold: t.parse().map_err(|_| bad())?,
                }
            }
            "oracle" => SegmenterPolicy::Oracle {
                lookahead_budget: MoveBudget::moves(rest.parse().map_err(|_| bad())?, 0),
            },
            "external-file" => SegmenterPolicy::External(ExternalSource::File(PathBuf::from(rest))),
            "external-cmd" => SegmenterPolicy::External(ExternalSource::Command(rest.trim_matches('"').to_string())),
            _ => return Err(bad()),
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// The solver the oracle looks ahead with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Backbone {
    pub mode: SolveMode,
    pub params: SearchParams,
}

impl Backbone {
    pub fn new(mode: SolveMode) -> Self {
        Backbone {
            mode,
            params: SearchParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmenterScore {
    pub recall: f64,
    pub tnr: f64,
    pub predicted_count: usize,
    pub oracle_count: usize,
}

/// Recall of `predicted` on `oracle` and true-negative rate on the rest of
/// `universe`. Both rates are 1 when their denominator is empty.
pub fn score(predicted: &EdgeSet, oracle: &EdgeSet, universe: &EdgeSet) -> Result<SegmenterScore> {
    for (name, set) in [("predicted", predicted), ("oracle", oracle)] {
        if let Some(e) = set.iter().find(|e| !universe.contains_edge(e)) {
            return Err(Error::InvalidConfig(format!(
                "{name} edge {{{}, {}}} is outside the universe",
                e.lo(),
                e.hi()
            )));
        }
    }
    let hit = predicted.intersection(oracle).len();
    let stable_oracle = universe.len() - oracle.len();
    let stable_both = universe.len() - predicted.union(oracle).len();
    Ok(SegmenterScore {
        recall: if oracle.is_empty() { 1.0 } else { hit as f64 / oracle.len() as f64 },
        tnr: if stable_oracle == 0 {
            1.0
        } else {
            stable_both as f64 / stable_oracle as f64
        },
        predicted_count: predicted.len(),
        oracle_count: oracle.len(),
    })
}

/// The lookahead label: solution edges the backbone removes within `budget`,
/// plus every depot edge.
pub fn oracle_edges(
    instance: &Instance,
    solution: &Solution,
    budget: &MoveBudget,
    backbone: &Backbone,
) -> Result<(EdgeSet, Solution)> {
    let (next, _) = solve_warm_with(instance, solution, budget, backbone.mode, backbone.params)?;
    let current = edge_set(solution);
    let mut out = edge_diff(solution, &next).intersection(&current);
    out.extend(&current.depot_edges());
    Ok((out, next))
}

/// A policy with its per-run state: the RNG stream, cached neighbor lists and
/// an external child process.
pub struct Segmenter {
    policy: SegmenterPolicy,
    rng: ChaCha8Rng,
    calls: u64,
    neighbors: Option<(String, Vec<Vec<usize>>)>,
    child: Option<external::Child>,
    timeout: Duration,
}

impl Segmenter {
    pub fn new(policy: SegmenterPolicy) -> Result<Self> {
        policy.validate()?;
        let seed = match &policy {
            SegmenterPolicy::Random { seed, .. } => *seed,
            _ => 0,
        };
        Ok(Segmenter {
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            calls: 0,
            neighbors: None,
            child: None,
            timeout: EXTERNAL_TIMEOUT,
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn policy(&self) -> &SegmenterPolicy {
        &self.policy
    }

    /// Unstable edges of `solution`: always a subset of its edges and always
    /// containing all of its depot edges.
    pub fn detect(
        &mut self,
        instance: &Instance,
        solution: &Solution,
        iteration: usize,
        backbone: Option<&Backbone>,
    ) -> Result<EdgeSet> {
        self.calls += 1;
        let current = edge_set(solution);
        let mut out = current.depot_edges();
        match self.policy.clone() {
            SegmenterPolicy::Random { fraction, .. } => {
                for e in current.iter().filter(|e| !e.touches_depot()) {
                    if self.rng.gen_bool(fraction) {
                        out.insert_edge(e);
                    }
                }
            }
            SegmenterPolicy::Geometric { k_nn, internality_threshold } => {
                let internality = self.internality(instance, solution, k_nn);
                for e in current.iter().filter(|e| !e.touches_depot()) {
                    if internality[e.lo()] < internality_threshold || internality[e.hi()] < internality_threshold {
                        out.insert_edge(e);
                    }
                }
            }
            SegmenterPolicy::Oracle { lookahead_budget } => {
                let backbone = backbone.ok_or(Error::MissingBackbone("oracle"))?;
                let budget = lookahead_budget.with_seed(mix_seed(lookahead_budget.seed, self.calls));
                out = oracle_edges(instance, solution, &budget, backbone)?.0;
            }
            SegmenterPolicy::External(source) => {
                let pairs = match &source {
                    ExternalSource::File(path) => external::read_file(path, instance)?,
                    ExternalSource::Command(cmd) => {
                        if self.child.is_none() {
                            self.child = Some(external::Child::spawn(cmd)?);
                        }
                        let child = self.child.as_mut().expect("spawned above");
                        child.query(instance, solution, iteration, self.timeout)?
                    }
                };
                for (i, j) in pairs {
                    if current.contains(i, j) {
                        out.insert(i, j);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Share of each customer's nearest customers that sit on its own route.
    fn internality(&mut self, instance: &Instance, solution: &Solution, k_nn: usize) -> Vec<f64> {
        let stale = self
            .neighbors
            .as_ref()
            .map_or(true, |(id, lists)| id != instance.id() || lists.len() != instance.len());
        if stale {
            self.neighbors = Some((instance.id().to_string(), nearest_customers(instance, k_nn)));
        }
        let lists = &self.neighbors.as_ref().expect("filled above").1;
        let mut route_of = vec![usize::MAX; instance.len()];
        for (r, route) in solution.routes.iter().enumerate() {
            for &c in route {
                route_of[c] = r;
            }
        }
        let mut out = vec![1.0; instance.len()];
        for c in 1..instance.len() {
            let list = &lists[c];
            if !list.is_empty() {
                let same = list.iter().filter(|&&j| route_of[j] == route_of[c]).count();
                out[c] = same as f64 / list.len() as f64;
            }
        }
        out
    }
}

fn nearest_customers(instance: &Instance, k: usize) -> Vec<Vec<usize>> {
    let n = instance.len();
    let mut out = vec![Vec::new(); n];
    for (i, slot) in out.iter_mut().enumerate().skip(1) {
        let mut others: Vec<(f64, usize)> = (1..n).filter(|&j| j != i).map(|j| (instance.dist(i, j), j)).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < others.len() {
            others.select_nth_unstable_by(k, cmp);
            others.truncate(k);
        }
        others.sort_by(cmp);
        *slot = others.into_iter().map(|(_, j)| j).collect();
    }
    out
}

/// One-shot detection with a fresh policy state.
pub fn detect(
    policy: &SegmenterPolicy,
    instance: &Instance,
    solution: &Solution,
    backbone: Option<&Backbone>,
) -> Result<EdgeSet> {
    Segmenter::new(policy.clone())?.detect(instance, solution, 0, backbone)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DistanceMode, Node, Variant};

    fn set(pairs: &[(usize, usize)]) -> EdgeSet {
        pairs.iter().copied().collect()
    }

    #[test]
    fn score_examples() {
        let universe: EdgeSet = (1..=10).map(|i| (i, i + 20)).collect();
        let all: Vec<(usize, usize)> = (1..=10).map(|i| (i, i + 20)).collect();
        let oracle = set(&all[0..4]);
        let predicted = set(&[all[0], all[1], all[2], all[5], all[6]]);
        let s = score(&predicted, &oracle, &universe).unwrap();
        assert_eq!(s.recall, 0.75);
        assert!((s.tnr - 4.0 / 6.0).abs() < 1e-15);

        let s = score(&oracle, &oracle, &universe).unwrap();
        assert_eq!((s.recall, s.tnr), (1.0, 1.0));
        let s = score(&universe, &oracle, &universe).unwrap();
        assert_eq!((s.recall, s.tnr), (1.0, 0.0));
        assert!(score(&set(&[(1, 2)]), &oracle, &universe).is_err());
    }

    #[test]
    fn policy_parsing() {
        assert_eq!(
            "random:0.4".parse::<SegmenterPolicy>().unwrap(),
            SegmenterPolicy::Random { fraction: 0.4, seed: 0 }
        );
        assert_eq!(
            "geometric:15:0.8".parse::<SegmenterPolicy>().unwrap(),
            SegmenterPolicy::Geometric { k_nn: 15, internality_threshold: 0.8 }
        );
        assert!(matches!("oracle:200".parse::<SegmenterPolicy>().unwrap(), SegmenterPolicy::Oracle { .. }));
        assert_eq!(
            "external-cmd:\"python3 seg.py\"".parse::<SegmenterPolicy>().unwrap(),
            SegmenterPolicy::External(ExternalSource::Command("python3 seg.py".into()))
        );
        assert!("random:0".parse::<SegmenterPolicy>().is_err());
        assert!("magic:1".parse::<SegmenterPolicy>().is_err());
    }

    fn line_instance() -> (Instance, Solution) {
        let mut nodes = vec![Node::depot(0.0, 0.0)];
        for i in 1..=8 {
            nodes.push(Node::customer(i as f64 * 0.1, (i % 3) as f64 * 0.1, 1.0));
        }
        let inst = Instance::new("l", Variant::Cvrp, nodes, 10.0, DistanceMode::EuclideanF64).unwrap();
        (inst, Solution::new(vec![vec![1, 2, 3, 4], vec![5, 6, 7, 8]]))
    }

    #[test]
    fn random_full_fraction_marks_everything() {
        let (inst, sol) = line_instance();
        let out = detect(&SegmenterPolicy::Random { fraction: 1.0, seed: 3 }, &inst, &sol, None).unwrap();
        assert_eq!(out, edge_set(&sol));
    }

    #[test]
    fn oracle_needs_backbone() {
        let (inst, sol) = line_instance();
        let p = SegmenterPolicy::Oracle { lookahead_budget: MoveBudget::moves(10, 0) };
        assert!(matches!(detect(&p, &inst, &sol, None), Err(Error::MissingBackbone(_))));
    }

    #[test]
    fn oracle_without_improvement_returns_depot_edges() {
        let (inst, sol) = line_instance();
        let bb = Backbone::new(SolveMode::PlainLs);
        let (opt, _) = solve_warm_with(&inst, &sol, &MoveBudget::moves(10_000, 0), SolveMode::PlainLs, SearchParams::default()).unwrap();
        let p = SegmenterPolicy::Oracle { lookahead_budget: MoveBudget::moves(1000, 0) };
        let out = detect(&p, &inst, &opt, Some(&bb)).unwrap();
        assert_eq!(out, edge_set(&opt).depot_edges());
    }

    #[test]
    fn geometric_keeps_interior_of_separated_routes() {
        // two far-apart clusters, one route each: every node is fully internal
        let mut nodes = vec![Node::depot(0.5, 0.5)];
        for i in 0..5 {
            nodes.push(Node::customer(0.0 + i as f64 * 0.01, 0.0, 1.0));
        }
        for i in 0..5 {
            nodes.push(Node::customer(1.0 - i as f64 * 0.01, 1.0, 1.0));
        }
        let inst = Instance::new("g", Variant::Cvrp, nodes, 10.0, DistanceMode::EuclideanF64).unwrap();
        let sol = Solution::new(vec![vec![1, 2, 3, 4, 5], vec![6, 7, 8, 9, 10]]);
        let p = SegmenterPolicy::Geometric { k_nn: 4, internality_threshold: 0.8 };
        assert_eq!(detect(&p, &inst, &sol, None).unwrap(), edge_set(&sol).depot_edges());
        // interleaved routes: everything becomes unstable
        let mixed = Solution::new(vec![vec![1, 6, 2, 7, 3], vec![8, 4, 9, 5, 10]]);
        assert_eq!(detect(&p, &inst, &mixed, None).unwrap(), edge_set(&mixed));
    }
}
