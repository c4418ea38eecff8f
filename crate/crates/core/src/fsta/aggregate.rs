use serde::{Deserialize, Serialize};

use super::{AggregationOptions, Segment};
use crate::error::{Error, Result};
use crate::model::{Instance, Variant};

const TW_TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HypernodeKind {
    Passthrough,
    Single,
    PairHead,
    PairTail,
    TripleHead,
    TripleMid,
    TripleTail,
}

/// A node of a reduced problem. Travel into the hypernode is measured to
/// `in_anchor`, travel out of it from `out_anchor` (original node indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypernode {
    pub kind: HypernodeKind,
    pub in_anchor: usize,
    pub out_anchor: usize,
    pub demand: f64,
    pub service_time: f64,
    pub tw_open: f64,
    pub tw_close: f64,
    pub is_backhaul: bool,
    pub segment: Option<Segment>,
}

impl Hypernode {
    pub(crate) fn passthrough(instance: &Instance, i: usize) -> Self {
        let n = instance.node(i);
        Hypernode {
            kind: HypernodeKind::Passthrough,
            in_anchor: i,
            out_anchor: i,
            demand: n.demand,
            service_time: n.service_time,
            tw_open: n.tw_open,
            tw_close: n.tw_close,
            is_backhaul: n.is_backhaul,
            segment: None,
        }
    }

    fn plain(kind: HypernodeKind, anchor: usize, demand: f64, segment: &Segment) -> Self {
        Hypernode {
            kind,
            in_anchor: anchor,
            out_anchor: anchor,
            demand,
            service_time: 0.0,
            tw_open: 0.0,
            tw_close: f64::INFINITY,
            is_backhaul: false,
            segment: Some(segment.clone()),
        }
    }
}

/// Aggregated window of a VRPTW segment: service may start at the first node
/// at any time in `[open, close]`, and `duration` later the vehicle leaves the
/// last node without having waited inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindowAggregate {
    pub open: f64,
    pub close: f64,
    pub duration: f64,
}

/// Backward recursion over a segment, last node first:
/// `open_m = max(l_m, open_{m+1} - s*_m)`, `close_m = min(r_m, close_{m+1} - s*_m)`,
/// `duration_m = duration_{m+1} + s*_m` with `s*_m = s_m + dist(m, m+1)`.
pub fn time_window_recursion(instance: &Instance, nodes: &[usize]) -> TimeWindowAggregate {
    let last = instance.node(nodes[nodes.len() - 1]);
    let mut agg = TimeWindowAggregate {
        open: last.tw_open,
        close: last.tw_close,
        duration: last.service_time,
    };
    for w in nodes.windows(2).rev() {
        let m = instance.node(w[0]);
        let step = m.service_time + instance.dist(w[0], w[1]);
        agg.open = m.tw_open.max(agg.open - step);
        agg.close = m.tw_close.min(agg.close - step);
        agg.duration += step;
    }
    agg
}

/// Hypernodes replacing one segment, in forced-chain order.
pub fn aggregate_segment(
    instance: &Instance,
    segment: &Segment,
    opts: &AggregationOptions,
) -> Result<Vec<Hypernode>> {
    let nodes = &segment.node_indices;
    if nodes.is_empty() {
        return Err(Error::InvalidSolution("empty segment".into()));
    }
    if instance.variant() == Variant::Vrpb {
        let b = instance.node(nodes[0]).is_backhaul;
        if nodes.iter().any(|&c| instance.node(c).is_backhaul != b) {
            return Err(Error::MixedSegment {
                route: segment.route_index,
                start: segment.start_pos,
            });
        }
    }
    if nodes.len() == 1 {
        let mut h = Hypernode::passthrough(instance, nodes[0]);
        h.segment = Some(segment.clone());
        return Ok(vec![h]);
    }
    let (j, k) = (segment.first(), segment.last());
    let total: f64 = nodes.iter().map(|&c| instance.node(c).demand).sum();
    let single = |demand: f64| Hypernode {
        kind: HypernodeKind::Single,
        in_anchor: j,
        out_anchor: k,
        demand,
        service_time: 0.0,
        tw_open: 0.0,
        tw_close: f64::INFINITY,
        is_backhaul: false,
        segment: Some(segment.clone()),
    };

    let out = match instance.variant() {
        Variant::Cvrp if opts.cvrp_single => vec![single(total)],
        Variant::Cvrp => vec![
            Hypernode::plain(HypernodeKind::PairHead, j, total / 2.0, segment),
            Hypernode::plain(HypernodeKind::PairTail, k, total / 2.0, segment),
        ],
        Variant::Vrptw => {
            let tw = time_window_recursion(instance, nodes);
            if tw.open <= tw.close + TW_TIE_EPS && !opts.vrptw_force_pair {
                let mut h = single(total);
                h.tw_open = tw.open;
                h.tw_close = tw.close;
                h.service_time = tw.duration;
                vec![h]
            } else {
                let mut head = Hypernode::plain(HypernodeKind::PairHead, j, total / 2.0, segment);
                head.tw_close = tw.close;
                let mut tail = Hypernode::plain(HypernodeKind::PairTail, k, total / 2.0, segment);
                tail.tw_open = tw.open;
                tail.service_time = tw.duration;
                vec![head, tail]
            }
        }
        Variant::Vrpb => {
            let mut h = single(total);
            h.is_backhaul = instance.node(j).is_backhaul;
            vec![h]
        }
        Variant::OnePdp if nodes.len() == 2 => {
            // two original nodes already are the smallest exact representation
            let mut head = Hypernode::passthrough(instance, j);
            head.kind = HypernodeKind::PairHead;
            head.segment = Some(segment.clone());
            let mut tail = Hypernode::passthrough(instance, k);
            tail.kind = HypernodeKind::PairTail;
            tail.segment = Some(segment.clone());
            vec![head, tail]
        }
        Variant::OnePdp => {
            let mut acc = 0.0f64;
            let (mut dmin, mut dmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for &c in nodes {
                acc += instance.node(c).demand;
                dmin = dmin.min(acc);
                dmax = dmax.max(acc);
            }
            let tail = if opts.onepdp_table_tail {
                acc - dmax - dmin
            } else {
                acc - dmax
            };
            vec![
                Hypernode::plain(HypernodeKind::TripleHead, j, dmin, segment),
                Hypernode::plain(HypernodeKind::TripleMid, j, dmax - dmin, segment),
                Hypernode::plain(HypernodeKind::TripleTail, k, tail, segment),
            ]
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DistanceMode, Node};

    fn seg(nodes: &[usize]) -> Segment {
        Segment {
            route_index: 0,
            start_pos: 0,
            end_pos: nodes.len() - 1,
            node_indices: nodes.to_vec(),
        }
    }

    fn line(variant: Variant, demands: &[f64], cap: f64) -> Instance {
        let mut nodes = vec![Node::depot(0.0, 0.0)];
        for (i, &d) in demands.iter().enumerate() {
            nodes.push(Node::customer(i as f64 + 1.0, 0.0, d));
        }
        Instance::new("a", variant, nodes, cap, DistanceMode::EuclideanF64).unwrap()
    }

    #[test]
    fn cvrp_pair_splits_demand() {
        let inst = line(Variant::Cvrp, &[2.0, 3.0, 4.0], 20.0);
        let h = aggregate_segment(&inst, &seg(&[1, 2, 3]), &AggregationOptions::default()).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!((h[0].demand, h[1].demand), (4.5, 4.5));
        assert_eq!((h[0].kind, h[1].kind), (HypernodeKind::PairHead, HypernodeKind::PairTail));
        assert_eq!((h[0].in_anchor, h[1].out_anchor), (1, 3));
    }

    #[test]
    fn vrptw_two_node_recursion() {
        // A at x=0 tw [2,10] s=1; B at x=2 tw [5,9] s=1
        let mut nodes = vec![Node::depot(0.0, 5.0)];
        for (x, open, close) in [(0.0, 2.0, 10.0), (2.0, 5.0, 9.0)] {
            let mut n = Node::customer(x, 0.0, 1.0);
            n.tw_open = open;
            n.tw_close = close;
            n.service_time = 1.0;
            nodes.push(n);
        }
        let inst = Instance::new("tw", Variant::Vrptw, nodes, 10.0, DistanceMode::EuclideanF64).unwrap();
        let h = aggregate_segment(&inst, &seg(&[1, 2]), &AggregationOptions::default()).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].kind, HypernodeKind::Single);
        assert_eq!((h[0].tw_open, h[0].tw_close, h[0].service_time), (2.0, 6.0, 4.0));
        // forward simulation of the two nodes against the aggregated form
        for t in [0.0, 2.0, 4.0, 6.0] {
            let start_a = f64::max(t, 2.0);
            let arrive_b = start_a + 1.0 + 2.0;
            let leave_b = f64::max(arrive_b, 5.0) + 1.0;
            let leave_h = f64::max(t, h[0].tw_open) + h[0].service_time;
            assert_eq!(leave_b, leave_h);
        }
        let forced = aggregate_segment(
            &inst,
            &seg(&[1, 2]),
            &AggregationOptions { vrptw_force_pair: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(forced.len(), 2);
        assert_eq!((forced[0].tw_open, forced[0].tw_close), (0.0, 6.0));
        assert_eq!((forced[1].tw_open, forced[1].service_time), (2.0, 4.0));
        assert!(forced[1].tw_close.is_infinite());
    }

    #[test]
    fn pickup_delivery_triple() {
        let inst = line(Variant::OnePdp, &[3.0, -5.0, 4.0], 10.0);
        let h = aggregate_segment(&inst, &seg(&[1, 2, 3]), &AggregationOptions::default()).unwrap();
        let d: Vec<f64> = h.iter().map(|x| x.demand).collect();
        assert_eq!(d, vec![-2.0, 5.0, -1.0]);
        let table = aggregate_segment(
            &inst,
            &seg(&[1, 2, 3]),
            &AggregationOptions { onepdp_table_tail: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(table[2].demand, 1.0);

        // the feasible start loads of segment and triple coincide for every capacity
        let range = |ds: &[f64], cap: f64| {
            let mut acc = 0.0f64;
            let (mut lo, mut hi) = (0.0f64, 0.0f64);
            for &x in ds {
                acc += x;
                lo = lo.min(acc);
                hi = hi.max(acc);
            }
            (-lo, cap - hi)
        };
        for cap in [5.0, 7.0, 10.0] {
            assert_eq!(range(&[3.0, -5.0, 4.0], cap), range(&d, cap));
            assert_eq!(range(&[3.0, -5.0, 4.0], cap), (2.0, cap - 3.0));
        }
    }

    #[test]
    fn backhaul_mixed_segment_is_rejected() {
        let mut inst_nodes = vec![Node::depot(0.0, 0.0)];
        for b in [false, true] {
            let mut n = Node::customer(1.0, 1.0, 1.0);
            n.is_backhaul = b;
            inst_nodes.push(n);
        }
        let inst = Instance::new("b", Variant::Vrpb, inst_nodes, 5.0, DistanceMode::EuclideanF64).unwrap();
        assert!(matches!(
            aggregate_segment(&inst, &seg(&[1, 2]), &AggregationOptions::default()),
            Err(Error::MixedSegment { .. })
        ));
    }
}
