//! Segment-then-aggregate decomposition: cut a solution at its unstable
//! edges, collapse each stable run into hypernodes, and expand solutions of the
//! reduced problem back to the original instance.

mod aggregate;
mod reduced;
mod theorem;

pub use aggregate::{aggregate_segment, time_window_recursion, Hypernode, HypernodeKind, TimeWindowAggregate};
pub use reduced::{build_reduced, recover, ForcedArc, ReducedProblem, RecoveryMap};
pub use theorem::{verify_theorem, TheoremReport, TheoremWitness};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{edge_set, EdgeSet, Instance, Solution, Variant};

/// A maximal run of consecutive customers of one route joined by stable edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub route_index: usize,
    /// Inclusive positions within the route.
    pub start_pos: usize,
    pub end_pos: usize,
    pub node_indices: Vec<usize>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.node_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_indices.is_empty()
    }

    pub fn first(&self) -> usize {
        self.node_indices[0]
    }

    pub fn last(&self) -> usize {
        self.node_indices[self.node_indices.len() - 1]
    }
}

/// Aggregation switches that deviate from the default per-variant rules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationOptions {
    /// CVRP segments become one asymmetric hypernode instead of a head/tail pair.
    pub cvrp_single: bool,
    /// VRPTW segments always become a head/tail pair.
    pub vrptw_force_pair: bool,
    /// Pickup-delivery tail demand `D^k - D^max - D^min` instead of `D^k - D^max`.
    /// Breaks load conservation; kept for comparison only.
    pub onepdp_table_tail: bool,
}

/// Validates `unstable` against the solution and adds the edges every
/// decomposition must cut: all depot edges of the solution and, for VRPB, each
/// linehaul/backhaul boundary.
pub fn normalize_unstable(instance: &Instance, solution: &Solution, unstable: &EdgeSet) -> Result<EdgeSet> {
    let current = edge_set(solution);
    if let Some(e) = unstable.iter().find(|e| !e.touches_depot() && !current.contains_edge(e)) {
        return Err(Error::ForeignEdge(e.lo(), e.hi()));
    }
    let mut out = unstable.clone();
    out.extend(&current.depot_edges());
    if instance.variant() == Variant::Vrpb {
        for route in &solution.routes {
            for w in route.windows(2) {
                if instance.node(w[0]).is_backhaul != instance.node(w[1]).is_backhaul {
                    out.insert(w[0], w[1]);
                }
            }
        }
    }
    Ok(out)
}

/// Cuts every route at its unstable edges. Depot edges are always treated as cut.
pub fn partition_segments(solution: &Solution, unstable: &EdgeSet) -> Result<Vec<Segment>> {
    let current = edge_set(solution);
    if let Some(e) = unstable.iter().find(|e| !e.touches_depot() && !current.contains_edge(e)) {
        return Err(Error::ForeignEdge(e.lo(), e.hi()));
    }
    let mut out = Vec::new();
    for (r, route) in solution.routes.iter().enumerate() {
        let mut start = 0;
        for p in 1..=route.len() {
            if p == route.len() || unstable.contains(route[p - 1], route[p]) {
                out.push(Segment {
                    route_index: r,
                    start_pos: start,
                    end_pos: p - 1,
                    node_indices: route[start..p].to_vec(),
                });
                start = p;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(usize, usize)]) -> EdgeSet {
        pairs.iter().copied().collect()
    }

    #[test]
    fn partition_examples() {
        let sol = Solution::new(vec![vec![1, 2, 3, 4]]);
        let segs = partition_segments(&sol, &set(&[(0, 1), (2, 3), (4, 0)])).unwrap();
        let nodes: Vec<_> = segs.iter().map(|s| s.node_indices.clone()).collect();
        assert_eq!(nodes, vec![vec![1, 2], vec![3, 4]]);
        assert_eq!((segs[1].start_pos, segs[1].end_pos), (2, 3));

        let all = edge_set(&sol);
        let segs = partition_segments(&sol, &all).unwrap();
        assert!(segs.iter().all(|s| s.len() == 1));
        assert_eq!(segs.len(), 4);

        let two = Solution::new(vec![vec![1, 2], vec![3, 4, 5]]);
        let segs = partition_segments(&two, &edge_set(&two).depot_edges()).unwrap();
        assert_eq!(segs.len(), 2);
    }

    #[test]
    fn foreign_edge_is_rejected() {
        let sol = Solution::new(vec![vec![1, 2, 3]]);
        assert!(matches!(
            partition_segments(&sol, &set(&[(1, 3)])),
            Err(Error::ForeignEdge(1, 3))
        ));
    }
}
