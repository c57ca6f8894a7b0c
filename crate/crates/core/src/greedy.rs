//! Sequential greedy embedding: each request takes the cheapest alternative
//! that still fits the residual capacity, or is rejected.
//!
//! The per-alternative search is a tree generalization of min-cost path
//! embedding. Bottom-up, `subtree[i][v]` is the cheapest cost of hosting
//! virtual node `i` and everything below it when `i` sits on `v`; each child
//! link contributes a multi-source shortest-path distance toward the child's
//! subtree costs. Top-down, the tree is placed link by link in preorder,
//! reserving capacity tentatively and recomputing the subtree costs before
//! each link so that one request never double-books an element.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{IntegralEmbedding, Placement, Problem, ResolvedAlternative, ResolvedRequest, SubstrateNetwork};

const SLACK: f64 = 1e-9;

/// Remaining capacity per substrate node and arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualState {
    pub node: Vec<f64>,
    pub arc: Vec<f64>,
}

impl ResidualState {
    pub fn new(net: &SubstrateNetwork) -> Self {
        ResidualState {
            node: net.nodes().iter().map(|n| n.capacity).collect(),
            arc: net.arcs().iter().map(|a| a.capacity).collect(),
        }
    }

    fn node_fits(&self, v: usize, load: f64) -> bool {
        load <= self.node[v] + SLACK * (1.0 + self.node[v].abs())
    }

    fn arc_fits(&self, a: usize, load: f64) -> bool {
        load <= self.arc[a] + SLACK * (1.0 + self.arc[a].abs())
    }

    fn take_node(&mut self, v: usize, load: f64) {
        self.node[v] = (self.node[v] - load).max(0.0);
    }

    fn take_arc(&mut self, a: usize, load: f64) {
        self.arc[a] = (self.arc[a] - load).max(0.0);
    }
}

/// A feasible embedding of one alternative and its cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub nodes: Vec<usize>,
    pub links: Vec<Vec<usize>>,
    pub cost: f64,
}

/// Per-request record of the alternatives' candidate costs at decision time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyDecision {
    pub request: usize,
    pub costs: Vec<Option<f64>>,
    pub chosen: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyOutcome {
    /// One entry per request, in request order.
    pub embeddings: Vec<IntegralEmbedding>,
    /// Decisions in processing order.
    pub decisions: Vec<GreedyDecision>,
    pub residual: ResidualState,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `init` (per-node start distances, infinite for non-sources)
/// along usable arcs, forward or against arc direction. Returns distances
/// and the arc through which each node was reached.
fn dijkstra(
    net: &SubstrateNetwork,
    init: Vec<f64>,
    weight: impl Fn(usize) -> Option<f64>,
    forward: bool,
) -> (Vec<f64>, Vec<Option<usize>>) {
    let mut dist = init;
    let mut via = vec![None; dist.len()];
    let mut done = vec![false; dist.len()];
    let mut heap: BinaryHeap<Entry> =
        dist.iter().enumerate().filter(|(_, d)| d.is_finite()).map(|(node, &dist)| Entry { dist, node }).collect();
    while let Some(Entry { dist: d, node: v }) = heap.pop() {
        if done[v] || d > dist[v] {
            continue;
        }
        done[v] = true;
        let arcs = if forward { net.out_arcs(v) } else { net.in_arcs(v) };
        for &a in arcs {
            let Some(w) = weight(a) else { continue };
            let (s, t) = net.arc_ends(a);
            let u = if forward { t } else { s };
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                via[u] = Some(a);
                heap.push(Entry { dist: nd, node: u });
            }
        }
    }
    (dist, via)
}

struct Search<'a> {
    net: &'a SubstrateNetwork,
    alt: &'a ResolvedAlternative,
    demand: f64,
}

impl Search<'_> {
    fn node_load(&self, i: usize, v: usize) -> Option<f64> {
        Some(self.demand * self.alt.node_sizes[i] * self.alt.node_efficiency(i, v)?)
    }

    fn arc_load(&self, l: usize, a: usize) -> Option<f64> {
        Some(self.demand * self.alt.links[l].2 * self.alt.link_efficiency(l, a)?)
    }

    fn arc_weight(&self, l: usize, a: usize, residual: &ResidualState) -> Option<f64> {
        let load = self.arc_load(l, a)?;
        residual.arc_fits(a, load).then(|| load * self.net.arc(a).cost)
    }

    /// Cheapest cost of the subtree below (and including) `i` per host node.
    fn subtree_costs(&self, i: usize, residual: &ResidualState) -> Vec<f64> {
        let nv = self.net.node_count();
        let mut cost: Vec<f64> = (0..nv)
            .map(|v| match self.node_load(i, v) {
                Some(load) if residual.node_fits(v, load) => load * self.net.node(v).cost,
                _ => f64::INFINITY,
            })
            .collect();
        for &l in &self.alt.children[i] {
            let j = self.alt.links[l].1;
            let below = self.subtree_costs(j, residual);
            let (reach, _) = dijkstra(self.net, below, |a| self.arc_weight(l, a, residual), false);
            for v in 0..nv {
                cost[v] += reach[v];
            }
        }
        cost
    }

    fn embed(&self, origin: usize, residual: &ResidualState) -> Option<Candidate> {
        let mut residual = residual.clone();
        let alt = self.alt;
        if !self.subtree_costs(alt.root, &residual)[origin].is_finite() {
            return None;
        }
        let mut nodes = vec![usize::MAX; alt.node_count()];
        let mut links = vec![Vec::new(); alt.link_count()];
        let mut cost = 0.0;
        nodes[alt.root] = origin;
        let root_load = self.node_load(alt.root, origin)?;
        residual.take_node(origin, root_load);
        cost += root_load * self.net.node(origin).cost;
        for &l in &alt.preorder {
            let (i, j, _) = alt.links[l];
            let below = self.subtree_costs(j, &residual);
            let mut init = vec![f64::INFINITY; self.net.node_count()];
            init[nodes[i]] = 0.0;
            let (dist, via) = dijkstra(self.net, init, |a| self.arc_weight(l, a, &residual), true);
            let target = (0..dist.len())
                .map(|w| (w, dist[w] + below[w]))
                .filter(|(_, c)| c.is_finite())
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))?
                .0;
            let mut path = Vec::new();
            let mut at = target;
            while let Some(a) = via[at] {
                path.push(a);
                at = self.net.arc_ends(a).0;
            }
            path.reverse();
            for &a in &path {
                let load = self.arc_load(l, a)?;
                if !residual.arc_fits(a, load) {
                    return None;
                }
                residual.take_arc(a, load);
                cost += load * self.net.arc(a).cost;
            }
            let load = self.node_load(j, target)?;
            if !residual.node_fits(target, load) {
                return None;
            }
            residual.take_node(target, load);
            cost += load * self.net.node(target).cost;
            nodes[j] = target;
            links[l] = path;
        }
        Some(Candidate { nodes, links, cost })
    }
}

/// Cheapest embedding of alternative `alternative` of `app` rooted at
/// `origin` within `residual`, or `None` when nothing fits.
pub fn minv_embed(
    problem: &Problem,
    app: usize,
    alternative: usize,
    origin: usize,
    demand: f64,
    residual: &ResidualState,
) -> Option<Candidate> {
    let search = Search { net: problem.substrate(), alt: problem.alternative(app, alternative), demand };
    search.embed(origin, residual)
}

fn reserve(
    problem: &Problem,
    req: &ResolvedRequest,
    alternative: usize,
    cand: &Candidate,
    residual: &mut ResidualState,
) {
    let search =
        Search { net: problem.substrate(), alt: problem.alternative(req.app, alternative), demand: req.demand };
    for (i, &v) in cand.nodes.iter().enumerate() {
        residual.take_node(v, search.node_load(i, v).unwrap_or(0.0));
    }
    for (l, path) in cand.links.iter().enumerate() {
        for &a in path {
            residual.take_arc(a, search.arc_load(l, a).unwrap_or(0.0));
        }
    }
}

/// Embeds requests one at a time in a seeded random order. A request whose
/// cheapest candidate costs more than rejecting it (`psi * demand`) is
/// rejected.
pub fn greedy_embed_all(problem: &Problem, requests: &[ResolvedRequest], psi: f64, seed: u64) -> GreedyOutcome {
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut residual = ResidualState::new(problem.substrate());
    let mut embeddings: Vec<IntegralEmbedding> = (0..requests.len()).map(IntegralEmbedding::rejected).collect();
    let mut decisions = Vec::with_capacity(requests.len());
    for r in order {
        let req = &requests[r];
        let candidates: Vec<Option<Candidate>> = (0..problem.alternatives(req.app).len())
            .map(|t| minv_embed(problem, req.app, t, req.origin, req.demand, &residual))
            .collect();
        let best = candidates
            .iter()
            .enumerate()
            .filter_map(|(t, c)| c.as_ref().map(|c| (t, c.cost)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .filter(|&(_, cost)| cost <= psi * req.demand * (1.0 + SLACK));
        let chosen = best.map(|(t, _)| t);
        if let Some(t) = chosen {
            let cand = candidates[t].as_ref().expect("chosen candidate exists");
            reserve(problem, req, t, cand, &mut residual);
            embeddings[r].placement =
                Placement::Embedded { alternative: t, nodes: cand.nodes.clone(), links: cand.links.clone() };
        }
        decisions.push(GreedyDecision {
            request: r,
            costs: candidates.iter().map(|c| c.as_ref().map(|c| c.cost)).collect(),
            chosen,
        });
    }
    GreedyOutcome { embeddings, decisions, residual }
}
