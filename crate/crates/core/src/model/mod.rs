//! Problem and solution representations shared by every other module.
//!
//! An [`Instance`] is a variant-tagged routing problem whose node 0 is the
//! depot. A [`Solution`] is a list of routes of customer indices; the depot is
//! implicit at both ends of every route.

mod edges;
mod feasibility;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use edges::{edge_diff, edge_set, Edge, EdgeSet};
pub use feasibility::{
    check_feasibility, route_is_feasible, route_violations, FeasibilityReport, Violation,
    ViolationKind,
};

/// Absolute tolerance for real-valued comparisons in `euclidean_f64` mode.
pub const FEAS_EPS: f64 = 1e-9;

/// Instances above this many nodes compute distances on demand.
const MATRIX_NODE_LIMIT: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "CVRP")]
    Cvrp,
    #[serde(rename = "VRPTW")]
    Vrptw,
    #[serde(rename = "VRPB")]
    Vrpb,
    #[serde(rename = "OnePDP")]
    OnePdp,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Cvrp, Variant::Vrptw, Variant::Vrpb, Variant::OnePdp];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Cvrp => "CVRP",
            Variant::Vrptw => "VRPTW",
            Variant::Vrpb => "VRPB",
            Variant::OnePdp => "OnePDP",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cvrp" => Ok(Variant::Cvrp),
            "vrptw" => Ok(Variant::Vrptw),
            "vrpb" => Ok(Variant::Vrpb),
            "onepdp" | "1-vrppd" | "1vrppd" | "pdp" => Ok(Variant::OnePdp),
            other => Err(Error::InvalidConfig(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistanceMode {
    #[serde(rename = "euclidean_f64")]
    EuclideanF64,
    /// Nearest-integer Euclidean distance, as used by CVRPLib.
    #[serde(rename = "rounded_int")]
    RoundedInt,
}

impl DistanceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceMode::EuclideanF64 => "euclidean_f64",
            DistanceMode::RoundedInt => "rounded_int",
        }
    }

    /// Comparison tolerance: exact for integer distances.
    pub fn tolerance(self) -> f64 {
        match self {
            DistanceMode::EuclideanF64 => FEAS_EPS,
            DistanceMode::RoundedInt => 0.0,
        }
    }
}

impl FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean_f64" => Ok(DistanceMode::EuclideanF64),
            "rounded_int" => Ok(DistanceMode::RoundedInt),
            other => Err(Error::InvalidConfig(format!("unknown distance mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub x: f64,
    pub y: f64,
    /// Signed only for OnePDP: positive values are picked up, negative delivered.
    pub demand: f64,
    pub service_time: f64,
    pub tw_open: f64,
    pub tw_close: f64,
    pub is_backhaul: bool,
}

impl Node {
    pub fn depot(x: f64, y: f64) -> Self {
        Node::customer(x, y, 0.0)
    }

    pub fn customer(x: f64, y: f64, demand: f64) -> Self {
        Node {
            x,
            y,
            demand,
            service_time: 0.0,
            tw_open: 0.0,
            tw_close: f64::INFINITY,
            is_backhaul: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    id: String,
    variant: Variant,
    nodes: Vec<Node>,
    capacity: f64,
    distance_mode: DistanceMode,
    matrix: Option<Vec<f64>>,
}

fn raw_distance(mode: DistanceMode, a: &Node, b: &Node) -> f64 {
    let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
    match mode {
        DistanceMode::EuclideanF64 => d,
        DistanceMode::RoundedInt => d.round(),
    }
}

impl Instance {
    /// Validates the variant invariants and caches a distance matrix for
    /// instances of up to 2000 customers.
    pub fn new(
        id: impl Into<String>,
        variant: Variant,
        nodes: Vec<Node>,
        capacity: f64,
        distance_mode: DistanceMode,
    ) -> Result<Self> {
        validate_nodes(variant, &nodes, capacity)?;
        let matrix = (nodes.len() <= MATRIX_NODE_LIMIT).then(|| {
            let n = nodes.len();
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = raw_distance(distance_mode, &nodes[i], &nodes[j]);
                    m[i * n + j] = d;
                    m[j * n + i] = d;
                }
            }
            m
        });
        Ok(Instance {
            id: id.into(),
            variant,
            nodes,
            capacity,
            distance_mode,
            matrix,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    /// Number of nodes including the depot.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_customers(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn distance_mode(&self) -> DistanceMode {
        self.distance_mode
    }

    pub fn tolerance(&self) -> f64 {
        self.distance_mode.tolerance()
    }

    /// Checked travel cost between two nodes.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let len = self.nodes.len();
        for index in [i, j] {
            if index >= len {
                return Err(Error::IndexOutOfRange { index, len });
            }
        }
        Ok(self.dist(i, j))
    }

    /// Unchecked travel cost; panics on an out-of-range index.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.matrix {
            Some(m) => m[i * self.nodes.len() + j],
            None => {
                if i == j {
                    0.0
                } else {
                    raw_distance(self.distance_mode, &self.nodes[i], &self.nodes[j])
                }
            }
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

fn validate_nodes(variant: Variant, nodes: &[Node], capacity: f64) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidInstance(msg));
    if nodes.is_empty() {
        return bad("an instance needs at least the depot".into());
    }
    if !(capacity > 0.0) || !capacity.is_finite() {
        return bad(format!("capacity must be positive, got {capacity}"));
    }
    let depot = &nodes[0];
    if depot.demand != 0.0 || depot.service_time != 0.0 || depot.is_backhaul {
        return bad("depot must have zero demand, zero service time and no backhaul flag".into());
    }
    if variant == Variant::Vrptw && (depot.tw_open != 0.0 || depot.tw_close != f64::INFINITY) {
        return bad("VRPTW depot window must be [0, inf)".into());
    }
    for (i, node) in nodes.iter().enumerate() {
        if !node.x.is_finite() || !node.y.is_finite() {
            return bad(format!("node {i} has non-finite coordinates"));
        }
        if i == 0 {
            continue;
        }
        let d = node.demand;
        match variant {
            Variant::OnePdp => {
                if d == 0.0 || d.abs() > capacity {
                    return bad(format!("node {i}: OnePDP demand must be nonzero with |d| <= C, got {d}"));
                }
            }
            _ => {
                if !(d > 0.0) || d > capacity {
                    return bad(format!("node {i}: demand must satisfy 0 < d <= C, got {d}"));
                }
            }
        }
        if variant != Variant::Vrptw && node.service_time != 0.0 {
            return bad(format!("node {i}: service time is only allowed for VRPTW"));
        }
        if node.service_time < 0.0 {
            return bad(format!("node {i}: negative service time"));
        }
        if variant == Variant::Vrptw && node.tw_open > node.tw_close {
            return bad(format!(
                "node {i}: window [{}, {}] is empty",
                node.tw_open, node.tw_close
            ));
        }
        if variant != Variant::Vrpb && node.is_backhaul {
            return bad(format!("node {i}: backhaul flag set outside VRPB"));
        }
    }
    Ok(())
}

/// Ordered routes of customer indices, depot implicit at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Vec<usize>>,
}

impl Solution {
    pub fn new(routes: Vec<Vec<usize>>) -> Self {
        Solution { routes }
    }

    pub fn routes(&self) -> &[Vec<usize>] {
        &self.routes
    }

    pub fn n_customers(&self) -> usize {
        self.routes.iter().map(Vec::len).sum()
    }

    /// Checks that every customer of an instance with `n_nodes` nodes appears
    /// exactly once, no route is empty and no route contains the depot.
    pub fn validate_structure(&self, n_nodes: usize) -> Result<()> {
        let mut seen = vec![false; n_nodes];
        for (r, route) in self.routes.iter().enumerate() {
            if route.is_empty() {
                return Err(Error::InvalidSolution(format!("route {r} is empty")));
            }
            for &c in route {
                if c == 0 {
                    return Err(Error::InvalidSolution(format!("route {r} contains the depot")));
                }
                if c >= n_nodes {
                    return Err(Error::IndexOutOfRange { index: c, len: n_nodes });
                }
                if seen[c] {
                    return Err(Error::InvalidSolution(format!("customer {c} visited twice")));
                }
                seen[c] = true;
            }
        }
        if let Some(missing) = seen.iter().skip(1).position(|s| !s) {
            return Err(Error::InvalidSolution(format!(
                "customer {} is not visited",
                missing + 1
            )));
        }
        Ok(())
    }
}

/// Cost of depot -> route -> depot under an arbitrary (possibly asymmetric) cost.
pub fn route_cost(route: &[usize], dist: impl Fn(usize, usize) -> f64) -> f64 {
    if route.is_empty() {
        return 0.0;
    }
    let mut total = dist(0, route[0]);
    for w in route.windows(2) {
        total += dist(w[0], w[1]);
    }
    total + dist(route[route.len() - 1], 0)
}

/// Total travel cost of a structurally valid solution.
pub fn evaluate_objective(instance: &Instance, solution: &Solution) -> Result<f64> {
    solution.validate_structure(instance.len())?;
    Ok(objective_unchecked(instance, solution))
}

pub(crate) fn objective_unchecked(instance: &Instance, solution: &Solution) -> f64 {
    solution
        .routes
        .iter()
        .map(|r| route_cost(r, |a, b| instance.dist(a, b)))
        .sum()
}
