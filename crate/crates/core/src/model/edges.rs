use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Solution;

/// An undirected edge stored as `(min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(usize, usize);

impl Edge {
    /// Panics on a self-loop.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "self-loop edges are not representable");
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn lo(self) -> usize {
        self.0
    }

    pub fn hi(self) -> usize {
        self.1
    }

    pub fn touches_depot(self) -> bool {
        self.0 == 0
    }

    pub fn has(self, v: usize) -> bool {
        self.0 == v || self.1 == v
    }

    /// The endpoint that is not `v`.
    pub fn other(self, v: usize) -> usize {
        if self.0 == v {
            self.1
        } else {
            self.0
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet(BTreeSet<Edge>);

impl EdgeSet {
    pub fn new() -> Self {
        EdgeSet(BTreeSet::new())
    }

    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        self.0.insert(Edge::new(a, b))
    }

    pub fn insert_edge(&mut self, e: Edge) -> bool {
        self.0.insert(e)
    }

    pub fn remove(&mut self, e: &Edge) -> bool {
        self.0.remove(e)
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a != b && self.0.contains(&Edge::new(a, b))
    }

    pub fn contains_edge(&self, e: &Edge) -> bool {
        self.0.contains(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.union(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.intersection(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn symmetric_difference(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.symmetric_difference(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn extend(&mut self, other: &EdgeSet) {
        self.0.extend(other.0.iter().copied());
    }

    pub fn retain(&mut self, f: impl FnMut(&Edge) -> bool) {
        self.0.retain(f);
    }

    pub fn depot_edges(&self) -> EdgeSet {
        EdgeSet(self.0.iter().copied().filter(|e| e.touches_depot()).collect())
    }

    pub fn non_depot_count(&self) -> usize {
        self.0.iter().filter(|e| !e.touches_depot()).count()
    }

    /// Endpoints of all edges, sorted.
    pub fn vertices(&self) -> BTreeSet<usize> {
        self.0.iter().flat_map(|e| [e.0, e.1]).collect()
    }
}

impl FromIterator<Edge> for EdgeSet {
    fn from_iter<T: IntoIterator<Item = Edge>>(iter: T) -> Self {
        EdgeSet(iter.into_iter().collect())
    }
}

impl FromIterator<(usize, usize)> for EdgeSet {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        EdgeSet(iter.into_iter().map(|(a, b)| Edge::new(a, b)).collect())
    }
}

/// Undirected edges of every route including both depot edges. A singleton
/// route contributes its depot edge once.
pub fn edge_set(solution: &Solution) -> EdgeSet {
    let mut set = EdgeSet::new();
    for route in &solution.routes {
        let mut prev = 0;
        for &c in route {
            set.insert(prev, c);
            prev = c;
        }
        if prev != 0 {
            set.insert(prev, 0);
        }
    }
    set
}

/// Edges present in exactly one of the two solutions.
pub fn edge_diff(a: &Solution, b: &Solution) -> EdgeSet {
    edge_set(a).symmetric_difference(&edge_set(b))
}
