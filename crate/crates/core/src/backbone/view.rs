use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Variant};

/// Uniform read access to an original instance or a reduced problem.
///
/// Distances may be asymmetric. Forced links form vertex-disjoint paths: a node
/// has at most one forced successor and at most one forced predecessor. An
/// undirected link may be traversed in either orientation.
pub trait ProblemView {
    fn variant(&self) -> Variant;
    /// Node count including the depot at index 0.
    fn node_count(&self) -> usize;
    fn capacity(&self) -> f64;
    fn demand(&self, i: usize) -> f64;
    fn service_time(&self, i: usize) -> f64;
    fn time_window(&self, i: usize) -> (f64, f64);
    fn is_backhaul(&self, i: usize) -> bool;
    fn dist(&self, i: usize, j: usize) -> f64;
    /// Representative coordinates, used for neighbor lists and route centroids.
    fn position(&self, i: usize) -> (f64, f64);
    fn tolerance(&self) -> f64;

    /// True when entering and leaving the node costs the same from either side.
    fn is_symmetric_node(&self, _i: usize) -> bool {
        true
    }

    /// Canonical forced successor and whether the link is directed.
    fn forced_successor(&self, _i: usize) -> Option<(usize, bool)> {
        None
    }
}

impl ProblemView for Instance {
    fn variant(&self) -> Variant {
        Instance::variant(self)
    }
    fn node_count(&self) -> usize {
        self.len()
    }
    fn capacity(&self) -> f64 {
        Instance::capacity(self)
    }
    fn demand(&self, i: usize) -> f64 {
        self.node(i).demand
    }
    fn service_time(&self, i: usize) -> f64 {
        self.node(i).service_time
    }
    fn time_window(&self, i: usize) -> (f64, f64) {
        let n = self.node(i);
        (n.tw_open, n.tw_close)
    }
    fn is_backhaul(&self, i: usize) -> bool {
        self.node(i).is_backhaul
    }
    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        Instance::dist(self, i, j)
    }
    fn position(&self, i: usize) -> (f64, f64) {
        let n = self.node(i);
        (n.x, n.y)
    }
    fn tolerance(&self) -> f64 {
        Instance::tolerance(self)
    }
}

/// Work limit for one backbone call. At least one bound must be set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveBudget {
    pub max_moves: Option<u64>,
    pub max_millis: Option<u64>,
    pub seed: u64,
}

impl MoveBudget {
    pub fn moves(max_moves: u64, seed: u64) -> Self {
        MoveBudget {
            max_moves: Some(max_moves),
            max_millis: None,
            seed,
        }
    }

    pub fn millis(max_millis: u64, seed: u64) -> Self {
        MoveBudget {
            max_moves: None,
            max_millis: Some(max_millis),
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        MoveBudget { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_moves.is_none() && self.max_millis.is_none() {
            return Err(Error::InvalidConfig(
                "move budget needs max_moves or max_millis".into(),
            ));
        }
        Ok(())
    }
}

impl Default for MoveBudget {
    /// 1000 applied moves per call.
    fn default() -> Self {
        MoveBudget::moves(1000, 0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub moves_applied: u64,
    pub moves_evaluated: u64,
    /// (elapsed milliseconds, objective) after every improvement.
    pub objective_trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveMode {
    #[serde(rename = "ls")]
    PlainLs,
    #[serde(rename = "lns")]
    Lns,
}

impl std::str::FromStr for SolveMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" | "plain_ls" => Ok(SolveMode::PlainLs),
            "lns" => Ok(SolveMode::Lns),
            other => Err(Error::InvalidConfig(format!("unknown backbone mode `{other}`"))),
        }
    }
}

/// Tunables of the search that are not part of a per-call budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Routes per LNS neighborhood.
    pub neighborhood_routes: usize,
    /// Candidate list length once the customer count exceeds `neighbor_threshold`.
    pub neighbor_k: usize,
    pub neighbor_threshold: usize,
    /// Fraction range of neighborhood units removed by one ruin step.
    pub ruin_min: f64,
    pub ruin_max: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            neighborhood_routes: 3,
            neighbor_k: 20,
            neighbor_threshold: 200,
            ruin_min: 0.1,
            ruin_max: 0.4,
        }
    }
}
