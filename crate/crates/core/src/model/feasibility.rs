use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::{Instance, Solution, Variant};
use crate::backbone::ProblemView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    CapacityExceeded,
    TimeWindowMissed,
    BackhaulOrder,
    NegativeLoad,
    LoadExceeded,
    CustomerCoverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `None` for coverage problems that belong to no single route.
    pub route: Option<usize>,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Walks one route under the view's variant rules. `report` may stop the scan
/// early by returning `Break`. Returns true when no violation was seen.
fn scan<V, F>(view: &V, route: &[usize], mut report: F) -> bool
where
    V: ProblemView + ?Sized,
    F: FnMut(ViolationKind, &dyn Fn() -> String) -> ControlFlow<()>,
{
    let cap = view.capacity();
    let eps = view.tolerance();
    let mut ok = true;
    macro_rules! flag {
        ($kind:expr, $($msg:tt)*) => {{
            ok = false;
            if report($kind, &|| format!($($msg)*)).is_break() {
                return false;
            }
        }};
    }

    match view.variant() {
        Variant::Cvrp => {
            let load: f64 = route.iter().map(|&c| view.demand(c)).sum();
            if load > cap + eps {
                flag!(ViolationKind::CapacityExceeded, "load {load} exceeds capacity {cap}");
            }
        }
        Variant::Vrptw => {
            let load: f64 = route.iter().map(|&c| view.demand(c)).sum();
            if load > cap + eps {
                flag!(ViolationKind::CapacityExceeded, "load {load} exceeds capacity {cap}");
            }
            let mut t = 0.0;
            let mut prev = 0;
            for &c in route {
                t += view.dist(prev, c);
                let (open, close) = view.time_window(c);
                if t > close + eps {
                    let arrival = t;
                    flag!(ViolationKind::TimeWindowMissed, "arrival {arrival} at node {c} after window close {close}");
                }
                t = t.max(open) + view.service_time(c);
                prev = c;
            }
            t += view.dist(prev, 0);
            let (_, depot_close) = view.time_window(0);
            if t > depot_close + eps {
                let arrival = t;
                flag!(ViolationKind::TimeWindowMissed, "return {arrival} after depot close {depot_close}");
            }
        }
        Variant::Vrpb => {
            let mut linehaul = 0.0;
            let mut backhaul = 0.0;
            let mut seen_backhaul = false;
            for &c in route {
                if view.is_backhaul(c) {
                    seen_backhaul = true;
                    backhaul += view.demand(c);
                } else {
                    if seen_backhaul {
                        flag!(ViolationKind::BackhaulOrder, "linehaul node {c} visited after a backhaul node");
                    }
                    linehaul += view.demand(c);
                }
            }
            if linehaul > cap + eps {
                flag!(ViolationKind::CapacityExceeded, "linehaul load {linehaul} exceeds capacity {cap}");
            }
            if backhaul > cap + eps {
                flag!(ViolationKind::CapacityExceeded, "backhaul load {backhaul} exceeds capacity {cap}");
            }
        }
        Variant::OnePdp => {
            let (lo, hi) = prefix_range(view, route);
            // minimal feasible start load
            let start = -lo;
            if start > cap + eps {
                flag!(ViolationKind::NegativeLoad, "route needs start load {start} above capacity {cap}");
            } else if start + hi > cap + eps {
                let peak = start + hi;
                flag!(ViolationKind::LoadExceeded, "peak load {peak} exceeds capacity {cap}");
            }
        }
    }
    ok
}

/// Min and max running demand prefix along a route, both including the empty prefix 0.
pub(crate) fn prefix_range<V: ProblemView + ?Sized>(view: &V, route: &[usize]) -> (f64, f64) {
    let mut acc = 0.0f64;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for &c in route {
        acc += view.demand(c);
        lo = lo.min(acc);
        hi = hi.max(acc);
    }
    (lo, hi)
}

pub fn route_is_feasible<V: ProblemView + ?Sized>(view: &V, route: &[usize]) -> bool {
    scan(view, route, |_, _| ControlFlow::Break(()))
}

pub fn route_violations<V: ProblemView + ?Sized>(
    view: &V,
    route: &[usize],
) -> Vec<(ViolationKind, String)> {
    let mut out = Vec::new();
    scan(view, route, |kind, detail| {
        out.push((kind, detail()));
        ControlFlow::Continue(())
    });
    out
}

pub fn check_feasibility(instance: &Instance, solution: &Solution) -> FeasibilityReport {
    let n = instance.len();
    let mut violations = Vec::new();
    let mut seen = vec![0usize; n];
    for (r, route) in solution.routes.iter().enumerate() {
        let mut structural = false;
        if route.is_empty() {
            violations.push(Violation {
                route: Some(r),
                kind: ViolationKind::CustomerCoverage,
                detail: "empty route".into(),
            });
            continue;
        }
        for &c in route {
            if c == 0 || c >= n {
                structural = true;
                violations.push(Violation {
                    route: Some(r),
                    kind: ViolationKind::CustomerCoverage,
                    detail: format!("invalid customer index {c}"),
                });
            } else {
                seen[c] += 1;
            }
        }
        if structural {
            continue;
        }
        for (kind, detail) in route_violations(instance, route) {
            violations.push(Violation { route: Some(r), kind, detail });
        }
    }
    for (c, &count) in seen.iter().enumerate().skip(1) {
        if count != 1 {
            violations.push(Violation {
                route: None,
                kind: ViolationKind::CustomerCoverage,
                detail: format!("customer {c} visited {count} times"),
            });
        }
    }
    FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    }
}
