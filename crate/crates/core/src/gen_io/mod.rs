//! Instance generation, the initial sweep heuristic and the text formats.

mod cvrplib;
mod docs;
mod sweep;

pub use cvrplib::{parse_cvrplib, write_cvrplib};
pub use docs::{
    read_instance_doc, read_prediction_doc, read_solution_doc, read_trace_stream, write_instance_doc,
    write_prediction_doc, write_solution_doc, write_trace_record, write_trace_stream,
};
pub(crate) use docs::parse_unstable_line;
pub use sweep::{initial_solution_sweep, SweepParams};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DistanceMode, Instance, Node, Variant};

const CLUSTER_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DemandModel {
    /// Integers 1..=9, uniform.
    #[serde(rename = "uniform_1_9")]
    Uniform1To9,
    /// 1, 2, 8, 9 with probability 0.2 each; 3..=7 with 0.04 each.
    #[serde(rename = "skewed_hetero")]
    SkewedHetero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spatial {
    UniformSquare,
    /// `k` uniform centers with truncated Gaussian scatter.
    Clustered { k: usize },
}

/// Solomon-style windows: the center is uniform over the times at which the
/// customer can be served and still reach the depot within the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindowModel {
    pub service_time: f64,
    pub horizon: f64,
    pub width_min: f64,
    pub width_max: f64,
}

impl Default for TimeWindowModel {
    fn default() -> Self {
        TimeWindowModel {
            service_time: 0.2,
            horizon: 18.0,
            width_min: 0.5,
            width_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub variant: Variant,
    pub n_customers: usize,
    pub capacity: f64,
    pub demand_model: DemandModel,
    pub spatial: Spatial,
    /// Used for VRPTW only; `None` falls back to the default model.
    pub tw_model: Option<TimeWindowModel>,
    /// Probability that a VRPB customer is a backhaul.
    pub backhaul_ratio: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(variant: Variant, n_customers: usize, capacity: f64, seed: u64) -> Self {
        GenSpec {
            variant,
            n_customers,
            capacity,
            demand_model: DemandModel::Uniform1To9,
            spatial: Spatial::UniformSquare,
            tw_model: (variant == Variant::Vrptw).then(TimeWindowModel::default),
            backhaul_ratio: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_customers == 0 {
            return Err(Error::InvalidSpec("n_customers must be at least 1".into()));
        }
        if !(self.capacity >= 9.0) || !self.capacity.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "capacity {} cannot hold the largest demand 9",
                self.capacity
            )));
        }
        if let Spatial::Clustered { k } = self.spatial {
            if k == 0 {
                return Err(Error::InvalidSpec("clustered spatial model needs k >= 1".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.backhaul_ratio) {
            return Err(Error::InvalidSpec("backhaul_ratio must lie in [0, 1]".into()));
        }
        if let Some(tw) = &self.tw_model {
            if tw.service_time < 0.0 || tw.width_min <= 0.0 || tw.width_max < tw.width_min {
                return Err(Error::InvalidSpec("invalid time window model".into()));
            }
            // farthest customer in the unit square: out, serve, back
            if tw.horizon < 2.0 * 2f64.sqrt() + tw.service_time {
                return Err(Error::InvalidSpec(format!("horizon {} too short", tw.horizon)));
            }
        }
        Ok(())
    }

    pub fn instance_id(&self) -> String {
        format!(
            "{}-n{}-c{}-s{}",
            self.variant.as_str().to_lowercase(),
            self.n_customers,
            self.capacity,
            self.seed
        )
    }
}

/// Draws an instance; identical specs give identical instances.
pub fn generate(spec: &GenSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let depot = Node::depot(rng.gen(), rng.gen());

    let centers: Vec<(f64, f64)> = match spec.spatial {
        Spatial::UniformSquare => Vec::new(),
        Spatial::Clustered { k } => (0..k).map(|_| (rng.gen(), rng.gen())).collect(),
    };
    let scatter = Normal::new(0.0, CLUSTER_SIGMA).expect("positive sigma");
    let skewed = WeightedIndex::new([0.2, 0.2, 0.04, 0.04, 0.04, 0.04, 0.04, 0.2, 0.2]).expect("valid weights");

    let mut nodes = vec![depot];
    for _ in 0..spec.n_customers {
        let (x, y) = if centers.is_empty() {
            (rng.gen(), rng.gen())
        } else {
            let (cx, cy) = centers[rng.gen_range(0..centers.len())];
            (truncated(&mut rng, &scatter, cx), truncated(&mut rng, &scatter, cy))
        };
        let magnitude = match spec.demand_model {
            DemandModel::Uniform1To9 => rng.gen_range(1..=9) as f64,
            DemandModel::SkewedHetero => (skewed.sample(&mut rng) + 1) as f64,
        };
        let mut node = Node::customer(x, y, magnitude);
        match spec.variant {
            Variant::OnePdp => {
                if rng.gen_bool(0.5) {
                    node.demand = -magnitude;
                }
            }
            Variant::Vrpb => node.is_backhaul = rng.gen_bool(spec.backhaul_ratio),
            _ => {}
        }
        nodes.push(node);
    }

    if spec.variant == Variant::Vrptw {
        let tw = spec.tw_model.unwrap_or_default();
        let (dx, dy) = (nodes[0].x, nodes[0].y);
        for node in nodes.iter_mut().skip(1) {
            let d = (node.x - dx).hypot(node.y - dy);
            let lo = d;
            let hi = (tw.horizon - d - tw.service_time).max(lo);
            let center = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            let width = rng.gen_range(tw.width_min..=tw.width_max);
            node.service_time = tw.service_time;
            node.tw_open = (center - width / 2.0).max(0.0);
            node.tw_close = center + width / 2.0;
        }
    }

    Instance::new(
        spec.instance_id(),
        spec.variant,
        nodes,
        spec.capacity,
        DistanceMode::EuclideanF64,
    )
}

/// Resamples until the value lands in the unit interval.
fn truncated(rng: &mut ChaCha8Rng, scatter: &Normal<f64>, center: f64) -> f64 {
    loop {
        let v = center + scatter.sample(rng);
        if (0.0..=1.0).contains(&v) {
            return v;
        }
    }
}
