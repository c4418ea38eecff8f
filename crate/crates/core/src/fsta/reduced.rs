use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate_segment, Hypernode, HypernodeKind};
use super::{normalize_unstable, partition_segments, AggregationOptions, Segment};
use crate::backbone::ProblemView;
use crate::error::{Error, Result};
use crate::model::{route_cost, EdgeSet, Instance, Solution, Variant};

const NONE: usize = usize::MAX;

/// Consecutive hypernodes that every reduced solution must keep adjacent.
/// An undirected arc may also be traversed `to -> from`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcedArc {
    pub from: usize,
    pub to: usize,
    pub directed: bool,
}

/// Hypernode-level problem borrowed from an original instance.
#[derive(Debug, Clone)]
pub struct ReducedProblem<'a> {
    instance: &'a Instance,
    hypernodes: Vec<Hypernode>,
    /// Segment index per hypernode, `NONE` for the depot.
    group: Vec<usize>,
    /// Per segment: links inside cost nothing.
    zero_internal: Vec<bool>,
    succ: Vec<Option<(usize, bool)>>,
    forced_arcs: Vec<ForcedArc>,
}

impl<'a> ReducedProblem<'a> {
    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn hypernodes(&self) -> &[Hypernode] {
        &self.hypernodes
    }

    pub fn forced_arcs(&self) -> &[ForcedArc] {
        &self.forced_arcs
    }

    pub fn n_customers(&self) -> usize {
        self.hypernodes.len() - 1
    }

    /// Reduced customers over original customers.
    pub fn size_ratio(&self) -> f64 {
        let n = self.instance.n_customers();
        if n == 0 {
            1.0
        } else {
            self.n_customers() as f64 / n as f64
        }
    }

    /// Objective of a solution expressed in hypernode indices.
    pub fn objective(&self, solution: &Solution) -> f64 {
        solution
            .routes
            .iter()
            .map(|r| route_cost(r, |a, b| ProblemView::dist(self, a, b)))
            .sum()
    }
}

impl ProblemView for ReducedProblem<'_> {
    fn variant(&self) -> Variant {
        self.instance.variant()
    }
    fn node_count(&self) -> usize {
        self.hypernodes.len()
    }
    fn capacity(&self) -> f64 {
        self.instance.capacity()
    }
    fn demand(&self, i: usize) -> f64 {
        self.hypernodes[i].demand
    }
    fn service_time(&self, i: usize) -> f64 {
        self.hypernodes[i].service_time
    }
    fn time_window(&self, i: usize) -> (f64, f64) {
        let h = &self.hypernodes[i];
        (h.tw_open, h.tw_close)
    }
    fn is_backhaul(&self, i: usize) -> bool {
        self.hypernodes[i].is_backhaul
    }
    #[inline]
    fn dist(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let (ga, gb) = (self.group[a], self.group[b]);
        if ga != NONE && ga == gb {
            if self.zero_internal[ga] {
                return 0.0;
            }
        } else if self.hypernodes[a].kind == HypernodeKind::TripleMid
            || self.hypernodes[b].kind == HypernodeKind::TripleMid
        {
            return f64::INFINITY;
        }
        self.instance
            .dist(self.hypernodes[a].out_anchor, self.hypernodes[b].in_anchor)
    }
    fn position(&self, i: usize) -> (f64, f64) {
        let n = self.instance.node(self.hypernodes[i].in_anchor);
        (n.x, n.y)
    }
    fn tolerance(&self) -> f64 {
        self.instance.tolerance()
    }
    fn is_symmetric_node(&self, i: usize) -> bool {
        self.hypernodes[i].in_anchor == self.hypernodes[i].out_anchor
    }
    fn forced_successor(&self, i: usize) -> Option<(usize, bool)> {
        self.succ[i]
    }
}

/// How reduced solutions expand back into original ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMap {
    pub segments: Vec<Segment>,
    /// First hypernode index of each segment; its hypernodes are consecutive.
    pub first_hypernode: Vec<usize>,
    pub hypernode_count: Vec<usize>,
    /// Whether a segment may be expanded in reverse when entered at its tail.
    pub reversible: Vec<bool>,
    /// `f(recovered) = f(reduced) + objective_offset` for every reduced solution.
    pub objective_offset: f64,
    segment_of: Vec<usize>,
}

impl RecoveryMap {
    /// Original nodes behind a hypernode's segment, in forward order; empty
    /// for the depot.
    pub fn expansion(&self, hypernode: usize) -> &[usize] {
        match self.segment_of.get(hypernode) {
            Some(&s) if s != usize::MAX => &self.segments[s].node_indices,
            _ => &[],
        }
    }
}

/// Cuts `solution` at `unstable` (plus mandatory cuts), aggregates every
/// segment and returns the reduced problem, the current solution in hypernode
/// indices and the recovery map.
///
/// Segments are ordered by the index of their first node, so a decomposition
/// into singletons reproduces the original indexing.
pub fn build_reduced<'a>(
    instance: &'a Instance,
    solution: &Solution,
    unstable: &EdgeSet,
    opts: &AggregationOptions,
) -> Result<(ReducedProblem<'a>, Solution, RecoveryMap)> {
    solution.validate_structure(instance.len())?;
    let cut = normalize_unstable(instance, solution, unstable)?;
    let mut segments = partition_segments(solution, &cut)?;
    segments.sort_by_key(|s| s.first());

    let variant = instance.variant();
    let mut hypernodes = vec![Hypernode::passthrough(instance, 0)];
    let mut group = vec![NONE];
    let mut zero_internal = Vec::with_capacity(segments.len());
    let mut reversible = Vec::with_capacity(segments.len());
    let mut first_hypernode = Vec::with_capacity(segments.len());
    let mut hypernode_count = Vec::with_capacity(segments.len());
    let mut succ = vec![None];
    let mut forced_arcs = Vec::new();
    let mut head_segment = vec![NONE; instance.len()];

    for (s, seg) in segments.iter().enumerate() {
        let hs = aggregate_segment(instance, seg, opts)?;
        let directed = match hs[0].kind {
            HypernodeKind::TripleHead => true,
            HypernodeKind::PairHead => variant == Variant::Vrptw,
            _ => false,
        };
        zero_internal.push(matches!(
            (variant, hs[0].kind),
            (Variant::Vrptw, HypernodeKind::PairHead) | (_, HypernodeKind::TripleHead)
        ));
        reversible.push(hs.len() > 1 && !directed);
        head_segment[seg.first()] = s;
        let base = hypernodes.len();
        first_hypernode.push(base);
        hypernode_count.push(hs.len());
        for (k, h) in hs.into_iter().enumerate() {
            let idx = base + k;
            if k > 0 {
                succ[idx - 1] = Some((idx, directed));
                forced_arcs.push(ForcedArc { from: idx - 1, to: idx, directed });
            }
            succ.push(None);
            group.push(s);
            hypernodes.push(h);
        }
    }

    let problem = ReducedProblem {
        instance,
        hypernodes,
        group: group.clone(),
        zero_internal,
        succ,
        forced_arcs,
    };

    let mut offset = 0.0;
    for (s, seg) in segments.iter().enumerate() {
        let intra: f64 = seg.node_indices.windows(2).map(|w| instance.dist(w[0], w[1])).sum();
        let base = first_hypernode[s];
        let internal: f64 = (base..base + hypernode_count[s] - 1)
            .map(|h| problem.dist(h, h + 1))
            .sum();
        offset += intra - internal;
    }

    let routes = solution
        .routes
        .iter()
        .map(|route| {
            route
                .iter()
                .filter(|&&c| head_segment[c] != NONE)
                .flat_map(|&c| {
                    let s = head_segment[c];
                    first_hypernode[s]..first_hypernode[s] + hypernode_count[s]
                })
                .collect()
        })
        .collect();

    let map = RecoveryMap {
        segments,
        first_hypernode,
        hypernode_count,
        reversible,
        objective_offset: offset,
        segment_of: group,
    };
    Ok((problem, Solution::new(routes), map))
}

/// Expands a reduced solution. Each segment must appear as its full forced
/// chain, forward or (when reversible) backward.
pub fn recover(reduced_solution: &Solution, map: &RecoveryMap) -> Result<Solution> {
    reduced_solution.validate_structure(map.segment_of.len())?;
    let mut routes = Vec::with_capacity(reduced_solution.routes.len());
    for route in &reduced_solution.routes {
        let mut out = Vec::new();
        let mut p = 0;
        while p < route.len() {
            let h = route[p];
            let s = map.segment_of[h];
            let first = map.first_hypernode[s];
            let count = map.hypernode_count[s];
            let last = first + count - 1;
            let chunk = route.get(p..p + count);
            let nodes = &map.segments[s].node_indices;
            if h == first && chunk.is_some_and(|c| c.iter().copied().eq(first..=last)) {
                out.extend_from_slice(nodes);
            } else if h == last
                && map.reversible[s]
                && chunk.is_some_and(|c| c.iter().copied().eq((first..=last).rev()))
            {
                out.extend(nodes.iter().rev());
            } else {
                return Err(Error::ForcedArc(format!(
                    "hypernodes {first}..={last} are not visited as one chain"
                )));
            }
            p += count;
        }
        routes.push(out);
    }
    Ok(Solution::new(routes))
}
