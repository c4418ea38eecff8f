//! Supervision traces for learned segmenters: per-node instability labels and
//! alternating delete/insert edge sequences.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::analysis::{nearest_routes, route_pairs};
use crate::backbone::MoveBudget;
use crate::error::{Error, Result};
use crate::mix_seed;
use crate::model::{edge_set, objective_unchecked, Edge, Instance, Solution};
use crate::segmenter::Backbone;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Delete,
    Insert,
}

impl Stage {
    fn flip(self) -> Stage {
        match self {
            Stage::Delete => Stage::Insert,
            Stage::Insert => Stage::Delete,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// A closed alternating trail. Stage `k` labels the edge from `nodes[k]` to
/// `nodes[(k + 1) % len]`; `end` marks the terminal token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArSequence {
    pub nodes: Vec<usize>,
    pub stages: Vec<Stage>,
    pub end: bool,
    /// Cost of the deleted edges minus cost of the inserted ones.
    pub improvement: f64,
}

impl ArSequence {
    pub fn edges(&self, stage: Stage) -> Vec<Edge> {
        let n = self.nodes.len();
        (0..n)
            .filter(|&k| self.stages[k] == stage)
            .map(|k| Edge::new(self.nodes[k], self.nodes[(k + 1) % n]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub instance_id: String,
    pub iteration: usize,
    pub subproblem_id: usize,
    pub route_pair: (usize, usize),
    /// 1 for customers of the pair touched by a changed edge.
    pub nar_labels: BTreeMap<usize, u8>,
    pub ar_sequences: Vec<ArSequence>,
    /// Objective decrease of the whole iteration.
    pub improvement: f64,
    pub before: Solution,
    pub after: Solution,
}

impl TraceRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.improvement >= 0.0) || !self.improvement.is_finite() {
            return Err(format!("improvement {} must be finite and non-negative", self.improvement));
        }
        let routes = self.before.routes.len();
        if self.route_pair.0 > self.route_pair.1 || self.route_pair.1 >= routes {
            return Err(format!("route pair {:?} invalid for {routes} routes", self.route_pair));
        }
        if let Some((n, l)) = self.nar_labels.iter().find(|(_, &l)| l > 1) {
            return Err(format!("label {l} of node {n} is not binary"));
        }
        for (i, seq) in self.ar_sequences.iter().enumerate() {
            if seq.nodes.len() < 2 || seq.nodes.len() % 2 != 0 || seq.stages.len() != seq.nodes.len() {
                return Err(format!("sequence {i} has inconsistent length"));
            }
            if !seq.end {
                return Err(format!("sequence {i} lacks the end token"));
            }
            let alternates = seq
                .stages
                .iter()
                .enumerate()
                .all(|(k, &s)| s == if k % 2 == 0 { Stage::Delete } else { Stage::Insert });
            if !alternates {
                return Err(format!("sequence {i} does not alternate delete/insert"));
            }
        }
        Ok(())
    }
}

/// Strict alternating closed trail through every edge of a connected
/// component, starting with a deleted edge at the lowest-index node that has
/// one and taking lowest-index neighbors first. `None` when some node has
/// unequal deleted and inserted degree.
pub fn alternating_circuit(deleted: &[Edge], inserted: &[Edge]) -> Option<(Vec<usize>, Vec<Stage>)> {
    let mut edges: Vec<(Edge, Stage)> = deleted.iter().map(|&e| (e, Stage::Delete)).collect();
    edges.extend(inserted.iter().map(|&e| (e, Stage::Insert)));
    if deleted.is_empty() {
        return None;
    }
    let mut adj: BTreeMap<usize, [Vec<usize>; 2]> = BTreeMap::new();
    for (id, (e, s)) in edges.iter().enumerate() {
        adj.entry(e.lo()).or_default()[s.slot()].push(id);
        adj.entry(e.hi()).or_default()[s.slot()].push(id);
    }
    for (&v, lists) in adj.iter_mut() {
        if lists[0].len() != lists[1].len() {
            return None;
        }
        for l in lists.iter_mut() {
            l.sort_by_key(|&id| edges[id].0.other(v));
        }
    }
    let mut used = vec![false; edges.len()];
    let mut cursor: BTreeMap<usize, [usize; 2]> = adj.keys().map(|&v| (v, [0, 0])).collect();

    let mut next_edge = |v: usize, s: Stage, used: &mut Vec<bool>| -> Option<usize> {
        let list = &adj[&v][s.slot()];
        let cur = &mut cursor.get_mut(&v).expect("known node")[s.slot()];
        while *cur < list.len() && used[list[*cur]] {
            *cur += 1;
        }
        let id = *list.get(*cur)?;
        used[id] = true;
        Some(id)
    };
    let mut walk = |v: usize, first: Stage, used: &mut Vec<bool>| -> (Vec<usize>, Vec<Stage>) {
        let (mut nodes, mut stages) = (vec![v], Vec::new());
        let (mut at, mut s) = (v, first);
        while let Some(id) = next_edge(at, s, used) {
            at = edges[id].0.other(at);
            nodes.push(at);
            stages.push(s);
            s = s.flip();
        }
        (nodes, stages)
    };

    let start = deleted.iter().map(|e| e.lo()).min()?;
    let (mut nodes, mut stages) = walk(start, Stage::Delete, &mut used);
    let mut i = 0;
    while i < stages.len() {
        let (sub_nodes, sub_stages) = walk(nodes[i], stages[i], &mut used);
        if sub_stages.is_empty() {
            i += 1;
            continue;
        }
        nodes.splice(i + 1..i + 1, sub_nodes[1..].iter().copied());
        stages.splice(i..i, sub_stages);
    }
    if used.iter().any(|u| !u) || nodes.first() != nodes.last() {
        return None;
    }
    nodes.pop();
    Some((nodes, stages))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Instances taken from the input stream.
    pub n_problems: usize,
    /// Backbone iterations per instance.
    pub iterations: usize,
    pub eta_improv: f64,
    pub alpha_ac: f64,
    pub seed: u64,
    pub backbone: Backbone,
    pub per_iter: MoveBudget,
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha_ac) {
            return Err(Error::InvalidConfig(format!("alpha_ac {} outside [0, 1]", self.alpha_ac)));
        }
        if !self.eta_improv.is_finite() {
            return Err(Error::InvalidConfig("eta_improv must be finite".into()));
        }
        self.per_iter.validate()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub records: usize,
    pub sequences_kept: usize,
    /// Sequences that failed the improvement threshold or the acceptance draw.
    pub sequences_dropped: usize,
    /// Components spanning more than two routes.
    pub components_wide: usize,
    /// Components admitting no strict alternation.
    pub components_skipped: usize,
}

struct Component {
    deleted: Vec<Edge>,
    inserted: Vec<Edge>,
    customers: BTreeSet<usize>,
}

fn components(before: &BTreeSet<Edge>, after: &BTreeSet<Edge>) -> Vec<Component> {
    let diff: Vec<(Edge, bool)> = before
        .symmetric_difference(after)
        .map(|&e| (e, before.contains(&e)))
        .collect();
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    for (e, _) in &diff {
        for v in [e.lo(), e.hi()] {
            let n = index.len();
            index.entry(v).or_insert(n);
        }
    }
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (e, _) in &diff {
        let (a, b) = (find(&mut parent, index[&e.lo()]), find(&mut parent, index[&e.hi()]));
        parent[a.max(b)] = a.min(b);
    }
    let mut groups: BTreeMap<usize, Component> = BTreeMap::new();
    for (e, is_deleted) in diff {
        let root = find(&mut parent, index[&e.lo()]);
        let c = groups.entry(root).or_insert_with(|| Component {
            deleted: Vec::new(),
            inserted: Vec::new(),
            customers: BTreeSet::new(),
        });
        if is_deleted {
            c.deleted.push(e);
        } else {
            c.inserted.push(e);
        }
        c.customers.extend([e.lo(), e.hi()].into_iter().filter(|&v| v != 0));
    }
    let mut out: Vec<Component> = groups.into_values().collect();
    out.sort_by_key(|c| c.customers.iter().next().copied());
    out
}

/// Runs `iterations` backbone steps on each of the first `n_problems`
/// instances and emits one record per route pair for every improving step.
///
/// The sink is called in order; the summary counts what was kept and skipped.
pub fn export_traces<I, F>(instances: I, cfg: &TraceConfig, mut sink: F) -> Result<TraceSummary>
where
    I: IntoIterator<Item = Result<(Instance, Solution)>>,
    F: FnMut(TraceRecord) -> Result<()>,
{
    cfg.validate()?;
    let mut summary = TraceSummary::default();
    for (k, item) in instances.into_iter().take(cfg.n_problems).enumerate() {
        let (instance, init) = item?;
        let stream = mix_seed(cfg.seed, k as u64);
        let mut accept_rng = ChaCha8Rng::seed_from_u64(mix_seed(stream, u64::MAX));
        let mut current = init;
        for t in 0..cfg.iterations {
            let budget = cfg.per_iter.with_seed(mix_seed(stream, t as u64));
            let (next, _) =
                crate::backbone::solve_warm_with(&instance, &current, &budget, cfg.backbone.mode, cfg.backbone.params)?;
            let before_edges: BTreeSet<Edge> = edge_set(&current).iter().collect();
            let after_edges: BTreeSet<Edge> = edge_set(&next).iter().collect();
            if before_edges == after_edges {
                current = next;
                continue;
            }
            let improvement = (objective_unchecked(&instance, &current) - objective_unchecked(&instance, &next)).max(0.0);
            let unstable: BTreeSet<usize> = before_edges
                .symmetric_difference(&after_edges)
                .flat_map(|e| [e.lo(), e.hi()])
                .collect();

            let mut route_of = vec![usize::MAX; instance.len()];
            for (r, route) in current.routes.iter().enumerate() {
                for &c in route {
                    route_of[c] = r;
                }
            }
            let nearest = nearest_routes(&instance, &current);
            let mut sequences: BTreeMap<(usize, usize), Vec<ArSequence>> = BTreeMap::new();
            for comp in components(&before_edges, &after_edges) {
                let routes: BTreeSet<usize> = comp.customers.iter().map(|&c| route_of[c]).collect();
                let pair = match routes.iter().copied().collect::<Vec<_>>()[..] {
                    [r] => (r.min(nearest[r]), r.max(nearest[r])),
                    [a, b] => (a, b),
                    _ => {
                        summary.components_wide += 1;
                        continue;
                    }
                };
                let Some((nodes, stages)) = alternating_circuit(&comp.deleted, &comp.inserted) else {
                    summary.components_skipped += 1;
                    continue;
                };
                let cost = |es: &[Edge]| es.iter().map(|e| instance.dist(e.lo(), e.hi())).sum::<f64>();
                let gain = cost(&comp.deleted) - cost(&comp.inserted);
                // the draw happens for every candidate so the stream does not
                // depend on eta_improv
                let draw: f64 = accept_rng.gen();
                if gain >= cfg.eta_improv && draw < cfg.alpha_ac {
                    summary.sequences_kept += 1;
                    sequences.entry(pair).or_default().push(ArSequence {
                        nodes,
                        stages,
                        end: true,
                        improvement: gain,
                    });
                } else {
                    summary.sequences_dropped += 1;
                    sequences.entry(pair).or_default();
                }
            }

            let mut pairs: BTreeSet<(usize, usize)> = route_pairs(&instance, &current).into_iter().collect();
            pairs.extend(sequences.keys().copied());
            for (id, pair) in pairs.into_iter().enumerate() {
                let mut nar_labels = BTreeMap::new();
                for r in [pair.0, pair.1] {
                    for &c in &current.routes[r] {
                        nar_labels.insert(c, u8::from(unstable.contains(&c)));
                    }
                }
                let record = TraceRecord {
                    instance_id: instance.id().to_string(),
                    iteration: t + 1,
                    subproblem_id: id,
                    route_pair: pair,
                    nar_labels,
                    ar_sequences: sequences.remove(&pair).unwrap_or_default(),
                    improvement,
                    before: current.clone(),
                    after: next.clone(),
                };
                debug_assert!(record.validate().is_ok());
                summary.records += 1;
                sink(record)?;
            }
            current = next;
        }
    }
    Ok(summary)
}
