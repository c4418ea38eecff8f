//! Working state for the local search and LNS.
//!
//! Forced chains are handled as atomic *units*: every customer belongs to
//! exactly one unit (a free node is a unit of length one), moves only ever cut
//! the solution between units, and a unit is reversed only when all its links
//! are undirected and all its nodes are symmetric.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::view::{MoveBudget, ProblemView, SearchParams, SearchStats};
use crate::error::{Error, Result};
use crate::model::{route_cost, route_is_feasible, Variant};

const IMPROVE_EPS: f64 = 1e-9;
const NONE: usize = usize::MAX;

#[derive(Clone, Copy)]
enum Op {
    Relocate,
    Swap,
    TwoOpt,
    TwoOptStar,
}

const OPS: [Op; 4] = [Op::Relocate, Op::Swap, Op::TwoOpt, Op::TwoOptStar];

pub(crate) struct Engine<'a, V: ProblemView + ?Sized> {
    view: &'a V,
    fsucc: Vec<usize>,
    fdirected: Vec<bool>,
    unit_of: Vec<usize>,
    unit_nodes: Vec<Vec<usize>>,
    unit_reversible: Vec<bool>,
    unit_demand: Vec<f64>,
    cands: Vec<Vec<usize>>,
    routes: Vec<Vec<usize>>,
    route_costs: Vec<f64>,
    route_loads: Vec<f64>,
    active: Vec<bool>,
    route_of: Vec<usize>,
    pos_of: Vec<usize>,
    unit_order: Vec<usize>,
    node_order: Vec<usize>,
    cursor: [usize; 4],
    rng: ChaCha8Rng,
    pub(crate) stats: SearchStats,
    started: Instant,
    max_moves: Option<u64>,
    max_millis: Option<u64>,
    exhausted: bool,
    params: SearchParams,
    load_filter: bool,
    /// Off while an LNS step explores, whose intermediate states may be worse.
    recording: bool,
}

impl<'a, V: ProblemView + ?Sized> Engine<'a, V> {
    /// `routes` may cover a subset of the customers; every listed route must be
    /// feasible and keep each forced chain contiguous in a legal orientation.
    pub(crate) fn new(
        view: &'a V,
        routes: Vec<Vec<usize>>,
        budget: &MoveBudget,
        params: SearchParams,
    ) -> Result<Self> {
        budget.validate()?;
        let n = view.node_count();
        let mut fsucc = vec![NONE; n];
        let mut fpred = vec![NONE; n];
        let mut fdirected = vec![false; n];
        for i in 1..n {
            if let Some((j, directed)) = view.forced_successor(i) {
                if j == 0 || j >= n || fpred[j] != NONE {
                    return Err(Error::ForcedArc(format!("inconsistent forced link {i} -> {j}")));
                }
                fsucc[i] = j;
                fpred[j] = i;
                fdirected[i] = directed;
            }
        }

        let mut unit_of = vec![NONE; n];
        let mut unit_nodes = Vec::new();
        let mut unit_reversible = Vec::new();
        let mut unit_demand = Vec::new();
        for head in 1..n {
            if fpred[head] != NONE {
                continue;
            }
            let id = unit_nodes.len();
            let mut chain = vec![head];
            let mut reversible = true;
            let mut cur = head;
            while fsucc[cur] != NONE {
                reversible &= !fdirected[cur];
                cur = fsucc[cur];
                chain.push(cur);
            }
            if chain.len() > 1 {
                reversible &= chain.iter().all(|&c| view.is_symmetric_node(c));
            }
            for &c in &chain {
                unit_of[c] = id;
            }
            unit_demand.push(chain.iter().map(|&c| view.demand(c)).sum());
            unit_nodes.push(chain);
            unit_reversible.push(reversible);
        }
        if let Some(c) = (1..n).find(|&c| unit_of[c] == NONE) {
            return Err(Error::ForcedArc(format!("node {c} lies on a forced cycle")));
        }

        let mut present = vec![false; n];
        for &c in routes.iter().flatten() {
            if c < n {
                present[c] = true;
            }
        }
        let cands = candidate_lists(view, &present, &params);
        let load_filter = matches!(view.variant(), Variant::Cvrp | Variant::Vrptw);
        let mut engine = Engine {
            view,
            fsucc,
            fdirected,
            unit_of,
            unit_nodes,
            unit_reversible,
            unit_demand,
            cands,
            routes: Vec::new(),
            route_costs: Vec::new(),
            route_loads: Vec::new(),
            active: Vec::new(),
            route_of: vec![NONE; n],
            pos_of: vec![NONE; n],
            unit_order: Vec::new(),
            node_order: Vec::new(),
            cursor: [0; 4],
            rng: ChaCha8Rng::seed_from_u64(budget.seed),
            stats: SearchStats::default(),
            started: Instant::now(),
            max_moves: budget.max_moves,
            max_millis: budget.max_millis,
            exhausted: false,
            params,
            load_filter,
            recording: true,
        };
        engine.install(routes)?;
        engine.record();
        Ok(engine)
    }

    fn install(&mut self, routes: Vec<Vec<usize>>) -> Result<()> {
        let n = self.view.node_count();
        for (r, route) in routes.iter().enumerate() {
            if route.is_empty() {
                return Err(Error::InvalidSolution(format!("route {r} is empty")));
            }
            for (p, &c) in route.iter().enumerate() {
                if c == 0 || c >= n {
                    return Err(Error::InvalidSolution(format!("route {r} holds invalid node {c}")));
                }
                if self.route_of[c] != NONE {
                    return Err(Error::InvalidSolution(format!("node {c} visited twice")));
                }
                self.route_of[c] = r;
                self.pos_of[c] = p;
            }
        }
        for (u, chain) in self.unit_nodes.iter().enumerate() {
            let r = self.route_of[chain[0]];
            if chain.iter().any(|&c| self.route_of[c] != r) {
                return Err(Error::ForcedArc(format!("unit {u} is split across routes")));
            }
            if r == NONE || chain.len() == 1 {
                continue;
            }
            let first = self.pos_of[chain[0]];
            let last = self.pos_of[*chain.last().unwrap()];
            let forward = last > first;
            for (k, &c) in chain.iter().enumerate() {
                let expected = if forward { first + k } else { first - k };
                if self.pos_of[c] != expected {
                    return Err(Error::ForcedArc(format!("forced chain through node {c} is broken")));
                }
            }
            if !forward && !self.unit_reversible[u] {
                return Err(Error::ForcedArc(format!(
                    "directed chain starting at node {} traversed backwards",
                    chain[0]
                )));
            }
        }
        for (r, route) in routes.iter().enumerate() {
            if !route_is_feasible(self.view, route) {
                return Err(Error::InfeasibleStart(format!("route {r} violates constraints")));
            }
        }
        for route in routes {
            self.route_costs.push(route_cost(&route, |a, b| self.view.dist(a, b)));
            self.route_loads.push(route.iter().map(|&c| self.view.demand(c)).sum());
            self.active.push(true);
            self.routes.push(route);
        }
        Ok(())
    }

    pub(crate) fn routes(&self) -> &[Vec<usize>] {
        &self.routes
    }

    pub(crate) fn into_parts(self) -> (Vec<Vec<usize>>, SearchStats) {
        (self.routes, self.stats)
    }

    pub(crate) fn total_cost(&self) -> f64 {
        self.route_costs.iter().sum()
    }

    fn record(&mut self) {
        let ms = self.started.elapsed().as_secs_f64() * 1e3;
        let obj = self.total_cost();
        self.stats.objective_trace.push((ms, obj));
    }

    pub(crate) fn out_of_budget(&mut self) -> bool {
        if self.exhausted {
            return true;
        }
        if let Some(m) = self.max_moves {
            if self.stats.moves_applied >= m {
                self.exhausted = true;
            }
        }
        if let Some(ms) = self.max_millis {
            if self.started.elapsed().as_millis() as u64 >= ms {
                self.exhausted = true;
            }
        }
        self.exhausted
    }

    /// Counts one evaluation; true once the wall budget is spent.
    #[inline]
    fn tick(&mut self) -> bool {
        self.stats.moves_evaluated += 1;
        if self.stats.moves_evaluated.is_multiple_of(256) {
            if let Some(ms) = self.max_millis {
                if self.started.elapsed().as_millis() as u64 >= ms {
                    self.exhausted = true;
                }
            }
        }
        self.exhausted
    }

    #[inline]
    fn d(&self, a: usize, b: usize) -> f64 {
        self.view.dist(a, b)
    }

    #[inline]
    fn linked(&self, a: usize, b: usize) -> bool {
        a != 0 && b != 0 && (self.fsucc[a] == b || self.fsucc[b] == a)
    }

    /// Whether `gap` (cut before position `gap`) separates two units.
    #[inline]
    fn boundary_in(&self, route: &[usize], gap: usize) -> bool {
        gap == 0 || gap == route.len() || !self.linked(route[gap - 1], route[gap])
    }

    #[inline]
    fn before_gap(route: &[usize], gap: usize) -> usize {
        if gap == 0 {
            0
        } else {
            route[gap - 1]
        }
    }

    #[inline]
    fn at_gap(route: &[usize], gap: usize) -> usize {
        if gap == route.len() {
            0
        } else {
            route[gap]
        }
    }

    /// (route, start, end) positions of a unit.
    #[inline]
    fn block(&self, u: usize) -> (usize, usize, usize) {
        let chain = &self.unit_nodes[u];
        let a = self.pos_of[chain[0]];
        let b = self.pos_of[chain[chain.len() - 1]];
        (self.route_of[chain[0]], a.min(b), a.max(b))
    }

    fn unit_live(&self, u: usize) -> bool {
        let r = self.route_of[self.unit_nodes[u][0]];
        r != NONE && self.active[r]
    }

    fn feasible(&self, route: &[usize]) -> bool {
        route.is_empty() || route_is_feasible(self.view, route)
    }

    fn reindex(&mut self, r: usize) {
        for (p, &c) in self.routes[r].iter().enumerate() {
            self.route_of[c] = r;
            self.pos_of[c] = p;
        }
    }

    /// Replaces the listed routes, drops routes that became empty.
    fn commit(&mut self, changes: Vec<(usize, Vec<usize>)>) {
        for (r, route) in changes {
            self.route_costs[r] = route_cost(&route, |a, b| self.view.dist(a, b));
            self.route_loads[r] = route.iter().map(|&c| self.view.demand(c)).sum();
            self.routes[r] = route;
            self.reindex(r);
            debug_assert!(self.feasible(&self.routes[r]));
        }
        let mut r = self.routes.len();
        while r > 0 {
            r -= 1;
            if self.routes[r].is_empty() {
                self.routes.swap_remove(r);
                self.route_costs.swap_remove(r);
                self.route_loads.swap_remove(r);
                self.active.swap_remove(r);
                if r < self.routes.len() {
                    self.reindex(r);
                }
            }
        }
        self.stats.moves_applied += 1;
        if self.recording {
            self.record();
        }
    }

    /// Swaps a set of routes for new ones; returns the new route indices.
    fn replace_routes(&mut self, old: &[usize], new: Vec<Vec<usize>>) -> Vec<usize> {
        let mut old = old.to_vec();
        old.sort_unstable_by(|a, b| b.cmp(a));
        for &r in &old {
            for &c in &self.routes[r] {
                self.route_of[c] = NONE;
                self.pos_of[c] = NONE;
            }
        }
        for &r in &old {
            self.routes.swap_remove(r);
            self.route_costs.swap_remove(r);
            self.route_loads.swap_remove(r);
            self.active.swap_remove(r);
        }
        let start = self.routes.len();
        for route in new.into_iter().filter(|r| !r.is_empty()) {
            self.route_costs.push(route_cost(&route, |a, b| self.view.dist(a, b)));
            self.route_loads.push(route.iter().map(|&c| self.view.demand(c)).sum());
            self.active.push(true);
            self.routes.push(route);
        }
        for r in 0..self.routes.len() {
            self.reindex(r);
        }
        (start..self.routes.len()).collect()
    }

    fn shuffle_orders(&mut self) {
        self.unit_order = (0..self.unit_nodes.len())
            .filter(|&u| self.route_of[self.unit_nodes[u][0]] != NONE)
            .collect();
        self.unit_order.shuffle(&mut self.rng);
        self.node_order = (1..self.view.node_count())
            .filter(|&c| self.route_of[c] != NONE)
            .collect();
        self.node_order.shuffle(&mut self.rng);
        self.cursor = [0; 4];
    }

    /// First-improvement descent with operator round-robin over the active routes.
    pub(crate) fn local_search(&mut self) {
        self.shuffle_orders();
        let mut idx = 0;
        let mut fails = 0;
        while fails < OPS.len() && !self.out_of_budget() {
            let found = match OPS[idx] {
                Op::Relocate => self.try_relocate(),
                Op::Swap => self.try_swap(),
                Op::TwoOpt => self.try_two_opt(),
                Op::TwoOptStar => self.try_two_opt_star(),
            };
            if found {
                fails = 0;
            } else {
                fails += 1;
            }
            idx = (idx + 1) % OPS.len();
        }
    }

    fn try_relocate(&mut self) -> bool {
        let m = self.unit_order.len();
        let cap = self.view.capacity();
        let eps = self.view.tolerance();
        for k in 0..m {
            let slot = (self.cursor[0] + k) % m;
            let u = self.unit_order[slot];
            if !self.unit_live(u) {
                continue;
            }
            let (ra, s, e) = self.block(u);
            let first = self.routes[ra][s];
            let last = self.routes[ra][e];
            let p = Self::before_gap(&self.routes[ra], s);
            let nx = Self::at_gap(&self.routes[ra], e + 1);
            let gain = self.d(p, first) + self.d(last, nx) - self.d(p, nx);
            let can_rev = s != e && self.unit_reversible[u];
            let ends: &[usize] = if s == e { &[0] } else { &[0, 1] };
            for &end_sel in ends {
                let end = if end_sel == 0 { first } else { last };
                for ci in 0..self.cands[end].len() {
                    let w = self.cands[end][ci];
                    let rb = self.route_of[w];
                    if rb == NONE || !self.active[rb] {
                        continue;
                    }
                    let v = self.unit_of[w];
                    if v == u {
                        continue;
                    }
                    let (_, s2, e2) = self.block(v);
                    for gap in [s2, e2 + 1] {
                        if ra == rb && gap >= s && gap <= e + 1 {
                            continue;
                        }
                        let x = Self::before_gap(&self.routes[rb], gap);
                        let y = Self::at_gap(&self.routes[rb], gap);
                        let base = self.d(x, y);
                        for rev in [false, true] {
                            if rev && !can_rev {
                                continue;
                            }
                            let (a, b) = if rev { (last, first) } else { (first, last) };
                            let delta = self.d(x, a) + self.d(b, y) - base - gain;
                            if self.tick() {
                                return false;
                            }
                            if delta >= -IMPROVE_EPS {
                                continue;
                            }
                            if ra != rb && self.load_filter && self.route_loads[rb] + self.unit_demand[u] > cap + eps {
                                continue;
                            }
                            let changes = self.build_relocate(ra, s, e, rb, gap, rev);
                            if changes.iter().all(|(_, r)| self.feasible(r)) {
                                self.commit(changes);
                                self.cursor[0] = slot;
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    }

    fn build_relocate(
        &self,
        ra: usize,
        s: usize,
        e: usize,
        rb: usize,
        gap: usize,
        rev: bool,
    ) -> Vec<(usize, Vec<usize>)> {
        let mut block: Vec<usize> = self.routes[ra][s..=e].to_vec();
        if rev {
            block.reverse();
        }
        let mut a = self.routes[ra].clone();
        a.drain(s..=e);
        if ra == rb {
            let g = if gap > e { gap - (e - s + 1) } else { gap };
            a.splice(g..g, block);
            vec![(ra, a)]
        } else {
            let mut b = self.routes[rb].clone();
            b.splice(gap..gap, block);
            vec![(ra, a), (rb, b)]
        }
    }

    fn try_swap(&mut self) -> bool {
        let m = self.unit_order.len();
        let cap = self.view.capacity();
        let eps = self.view.tolerance();
        for k in 0..m {
            let slot = (self.cursor[1] + k) % m;
            let u = self.unit_order[slot];
            if !self.unit_live(u) {
                continue;
            }
            let (ra, s1, e1) = self.block(u);
            let fu = self.routes[ra][s1];
            let lu = self.routes[ra][e1];
            let p1 = Self::before_gap(&self.routes[ra], s1);
            let n1 = Self::at_gap(&self.routes[ra], e1 + 1);
            for ci in 0..self.cands[fu].len() {
                let w = self.cands[fu][ci];
                let rb = self.route_of[w];
                if rb == NONE || !self.active[rb] {
                    continue;
                }
                let v = self.unit_of[w];
                if v == u {
                    continue;
                }
                let (_, s2, e2) = self.block(v);
                if ra == rb && !(e1 + 1 < s2 || e2 + 1 < s1) {
                    continue;
                }
                let fv = self.routes[rb][s2];
                let lv = self.routes[rb][e2];
                let p2 = Self::before_gap(&self.routes[rb], s2);
                let n2 = Self::at_gap(&self.routes[rb], e2 + 1);
                let delta = self.d(p1, fv) + self.d(lv, n1) - self.d(p1, fu) - self.d(lu, n1)
                    + self.d(p2, fu)
                    + self.d(lu, n2)
                    - self.d(p2, fv)
                    - self.d(lv, n2);
                if self.tick() {
                    return false;
                }
                if delta >= -IMPROVE_EPS {
                    continue;
                }
                if ra != rb {
                    let du = self.unit_demand[u];
                    let dv = self.unit_demand[v];
                    if self.load_filter
                        && (self.route_loads[ra] - du + dv > cap + eps
                            || self.route_loads[rb] - dv + du > cap + eps)
                    {
                        continue;
                    }
                }
                let changes = self.build_swap(ra, s1, e1, rb, s2, e2);
                if changes.iter().all(|(_, r)| self.feasible(r)) {
                    self.commit(changes);
                    self.cursor[1] = slot;
                    return true;
                }
            }
        }
        false
    }

    fn build_swap(
        &self,
        ra: usize,
        s1: usize,
        e1: usize,
        rb: usize,
        s2: usize,
        e2: usize,
    ) -> Vec<(usize, Vec<usize>)> {
        let ub = &self.routes[ra][s1..=e1];
        let vb = &self.routes[rb][s2..=e2];
        if ra == rb {
            let r = &self.routes[ra];
            let (lo_s, lo_e, hi_s, hi_e, lo_blk, hi_blk) = if s1 < s2 {
                (s1, e1, s2, e2, vb, ub)
            } else {
                (s2, e2, s1, e1, ub, vb)
            };
            let mut out = Vec::with_capacity(r.len());
            out.extend_from_slice(&r[..lo_s]);
            out.extend_from_slice(lo_blk);
            out.extend_from_slice(&r[lo_e + 1..hi_s]);
            out.extend_from_slice(hi_blk);
            out.extend_from_slice(&r[hi_e + 1..]);
            vec![(ra, out)]
        } else {
            let mut a = self.routes[ra].clone();
            a.splice(s1..=e1, vb.iter().copied());
            let mut b = self.routes[rb].clone();
            b.splice(s2..=e2, ub.iter().copied());
            vec![(ra, a), (rb, b)]
        }
    }

    fn try_two_opt(&mut self) -> bool {
        let nr = self.routes.len();
        if nr == 0 {
            return false;
        }
        for k in 0..nr {
            let r = (self.cursor[2] + k) % nr;
            if !self.active[r] {
                continue;
            }
            let len = self.routes[r].len();
            for i in 0..len {
                if !self.boundary_in(&self.routes[r], i) {
                    continue;
                }
                let p = Self::before_gap(&self.routes[r], i);
                let a = self.routes[r][i];
                let mut reversible = self.view.is_symmetric_node(a);
                for j in (i + 1)..len {
                    let prev = self.routes[r][j - 1];
                    let b = self.routes[r][j];
                    reversible &= self.view.is_symmetric_node(b);
                    if self.linked(prev, b) {
                        let directed = if self.fsucc[prev] == b {
                            self.fdirected[prev]
                        } else {
                            self.fdirected[b]
                        };
                        reversible &= !directed;
                    }
                    if !reversible {
                        break;
                    }
                    if !self.boundary_in(&self.routes[r], j + 1) {
                        continue;
                    }
                    let nx = Self::at_gap(&self.routes[r], j + 1);
                    let delta = self.d(p, b) + self.d(a, nx) - self.d(p, a) - self.d(b, nx);
                    if self.tick() {
                        return false;
                    }
                    if delta >= -IMPROVE_EPS {
                        continue;
                    }
                    let mut route = self.routes[r].clone();
                    route[i..=j].reverse();
                    if self.feasible(&route) {
                        self.commit(vec![(r, route)]);
                        self.cursor[2] = r;
                        return true;
                    }
                }
            }
        }
        false
    }

    fn try_two_opt_star(&mut self) -> bool {
        let m = self.node_order.len();
        for k in 0..m {
            let slot = (self.cursor[3] + k) % m;
            let a = self.node_order[slot];
            let ra = self.route_of[a];
            if ra == NONE || !self.active[ra] {
                continue;
            }
            let gap_a = self.pos_of[a] + 1;
            if !self.boundary_in(&self.routes[ra], gap_a) {
                continue;
            }
            let na = Self::at_gap(&self.routes[ra], gap_a);
            let d_a_na = self.d(a, na);
            for ci in 0..self.cands[a].len() {
                let w = self.cands[a][ci];
                let rb = self.route_of[w];
                if rb == NONE || rb == ra || !self.active[rb] {
                    continue;
                }
                let gap_b = self.pos_of[w];
                if !self.boundary_in(&self.routes[rb], gap_b) {
                    continue;
                }
                let pb = Self::before_gap(&self.routes[rb], gap_b);
                let delta = self.d(a, w) + self.d(pb, na) - d_a_na - self.d(pb, w);
                if self.tick() {
                    return false;
                }
                if delta >= -IMPROVE_EPS {
                    continue;
                }
                let (ha, ta) = self.routes[ra].split_at(gap_a);
                let (hb, tb) = self.routes[rb].split_at(gap_b);
                let new_a: Vec<usize> = ha.iter().chain(tb).copied().collect();
                let new_b: Vec<usize> = hb.iter().chain(ta).copied().collect();
                if self.feasible(&new_a) && self.feasible(&new_b) {
                    self.commit(vec![(ra, new_a), (rb, new_b)]);
                    self.cursor[3] = slot;
                    return true;
                }
            }
        }
        false
    }

    fn centroid(&self, r: usize) -> (f64, f64) {
        let route = &self.routes[r];
        let (sx, sy) = route.iter().fold((0.0, 0.0), |(sx, sy), &c| {
            let (x, y) = self.view.position(c);
            (sx + x, sy + y)
        });
        let k = route.len() as f64;
        (sx / k, sy / k)
    }

    /// One ruin-and-recreate plus restricted local search on a neighborhood of
    /// routes around the route of a random unit. Accepts only improvements.
    pub(crate) fn lns_step(&mut self) -> bool {
        let live: Vec<usize> = (0..self.unit_nodes.len())
            .filter(|&u| self.route_of[self.unit_nodes[u][0]] != NONE)
            .collect();
        if live.is_empty() {
            self.exhausted = true;
            return false;
        }
        let seed_unit = live[self.rng.gen_range(0..live.len())];
        let r0 = self.route_of[self.unit_nodes[seed_unit][0]];
        let chosen = self.nearest_routes(r0, self.params.neighborhood_routes.max(1));

        let before: f64 = chosen.iter().map(|&r| self.route_costs[r]).sum();
        let snapshot: Vec<Vec<usize>> = chosen.iter().map(|&r| self.routes[r].clone()).collect();

        let mut units: Vec<usize> = Vec::new();
        for route in &snapshot {
            for &c in route {
                let u = self.unit_of[c];
                if self.unit_nodes[u][0] == c {
                    units.push(u);
                }
            }
        }
        let frac = self.rng.gen_range(self.params.ruin_min..=self.params.ruin_max);
        let count = ((frac * units.len() as f64).round() as usize).clamp(1, units.len());
        let mut removed: Vec<usize> = units.choose_multiple(&mut self.rng, count).copied().collect();
        removed.sort_unstable();
        let mut gone = vec![false; self.view.node_count()];
        for &u in &removed {
            for &c in &self.unit_nodes[u] {
                gone[c] = true;
            }
        }
        let mut local: Vec<Vec<usize>> = snapshot
            .iter()
            .map(|r| r.iter().copied().filter(|&c| !gone[c]).collect::<Vec<_>>())
            .filter(|r| !r.is_empty())
            .collect();
        removed.shuffle(&mut self.rng);
        for &u in &removed {
            self.reinsert(&mut local, u);
        }

        let fresh = self.replace_routes(&chosen, local);
        self.stats.moves_applied += 1;
        for (r, a) in self.active.iter_mut().enumerate() {
            *a = fresh.contains(&r);
        }
        self.recording = false;
        self.local_search();
        self.recording = true;
        // routes emptied by the search were dropped, so re-read the active set
        let current: Vec<usize> = (0..self.routes.len()).filter(|&r| self.active[r]).collect();
        let after: f64 = current.iter().map(|&r| self.route_costs[r]).sum();
        let improved = after < before - IMPROVE_EPS;
        if !improved {
            self.replace_routes(&current, snapshot);
        }
        for a in self.active.iter_mut() {
            *a = true;
        }
        if improved {
            self.record();
        }
        improved
    }

    fn nearest_routes(&self, r0: usize, k: usize) -> Vec<usize> {
        if self.routes.len() <= k {
            return (0..self.routes.len()).collect();
        }
        let c0 = self.centroid(r0);
        let mut others: Vec<(f64, usize)> = (0..self.routes.len())
            .filter(|&r| r != r0)
            .map(|r| {
                let c = self.centroid(r);
                ((c.0 - c0.0).hypot(c.1 - c0.1), r)
            })
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = vec![r0];
        out.extend(others.iter().take(k - 1).map(|&(_, r)| r));
        out
    }

    /// Cheapest feasible insertion of a unit between two units of some route;
    /// opens a new route when nothing fits.
    fn reinsert(&mut self, local: &mut Vec<Vec<usize>>, u: usize) {
        let chain = self.unit_nodes[u].clone();
        let can_rev = chain.len() > 1 && self.unit_reversible[u];
        let (f, l) = (chain[0], chain[chain.len() - 1]);
        let cap = self.view.capacity() + self.view.tolerance();
        let mut options: Vec<(f64, usize, usize, bool)> = Vec::new();
        for (ri, route) in local.iter().enumerate() {
            if self.load_filter {
                let load: f64 = route.iter().map(|&c| self.view.demand(c)).sum();
                if load + self.unit_demand[u] > cap {
                    continue;
                }
            }
            for gap in 0..=route.len() {
                if !self.boundary_in(route, gap) {
                    continue;
                }
                let x = Self::before_gap(route, gap);
                let y = Self::at_gap(route, gap);
                let base = self.d(x, y);
                options.push((self.d(x, f) + self.d(l, y) - base, ri, gap, false));
                if can_rev {
                    options.push((self.d(x, l) + self.d(f, y) - base, ri, gap, true));
                }
                self.stats.moves_evaluated += 1;
            }
        }
        options.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, ri, gap, rev) in options {
            let mut candidate = local[ri].clone();
            if rev {
                candidate.splice(gap..gap, chain.iter().rev().copied());
            } else {
                candidate.splice(gap..gap, chain.iter().copied());
            }
            if route_is_feasible(self.view, &candidate) {
                local[ri] = candidate;
                return;
            }
        }
        local.push(chain);
    }
}

fn candidate_lists<V: ProblemView + ?Sized>(view: &V, present: &[bool], params: &SearchParams) -> Vec<Vec<usize>> {
    let n = view.node_count();
    let members: Vec<usize> = (1..n).filter(|&c| present[c]).collect();
    let customers = members.len().saturating_sub(1);
    let limit = if customers > params.neighbor_threshold {
        params.neighbor_k
    } else {
        customers
    };
    let mut out = vec![Vec::new(); n];
    for &i in &members {
        let mut others: Vec<(f64, usize)> = members
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| {
                let d = view.dist(i, j) + view.dist(j, i);
                // chained hypernodes may report infinite costs to outsiders
                (if d.is_finite() { d } else { f64::MAX }, j)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if limit < others.len() {
            others.select_nth_unstable_by(limit, cmp);
            others.truncate(limit);
        }
        others.sort_by(cmp);
        out[i] = others.into_iter().map(|(_, j)| j).collect();
    }
    out
}
