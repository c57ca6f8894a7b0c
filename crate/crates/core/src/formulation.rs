//! The embedding MILP, its LP relaxation over aggregated requests, and the
//! transforms between aggregate and per-request fractional solutions.
//!
//! One variable family exists per owner (a request or an aggregate) and
//! alternative: `x(i, v)` places virtual node `i` on substrate node `v` and
//! `x(l, a)` routes virtual link `l` over substrate arc `a`. Rows:
//!
//! * `onealt_{o}`: the root variables of all alternatives sum to at most 1;
//! * `flow_{o}_{t}_{l}_{v}`: `x(j, v) = x(i, v) + inflow(l, v) - outflow(l, v)`
//!   for each virtual link `l = (i, j)`;
//! * `ncap_{v}` / `acap_{a}`: induced load within capacity.
//!
//! The root may only sit at the owner's origin, so only that root variable is
//! created. Pairs marked forbidden, and pairs no embedding can reach, get no
//! variable. The objective is compute cost plus bandwidth cost plus
//! `psi * demand * (1 - sum of root variables)`; the constant part is the
//! objective offset.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, Sense};
use crate::model::{
    Catalog, EfficiencyMap, IntegralEmbedding, ModelError, Placement, Problem, ResolvedAlternative, ResolvedRequest,
    SubstrateNetwork, Tier,
};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FormulationError {
    #[error("rejection penalty {0} must be finite and nonnegative")]
    NegativePenalty(f64),
    #[error("owner {index} has demand {demand}, must be finite and positive")]
    BadDemand { index: usize, demand: f64 },
    #[error("request {0} belongs to no aggregate")]
    RequestNotAggregated(usize),
    #[error("application {app} has no alternative with index {index}")]
    MissingAlternative { app: alloc::string::String, index: usize },
    #[error("no substrate node can host the collocated main alternative of {0}")]
    NoPenaltyBasis(alloc::string::String),
    #[error("solution has {got} values, model has {expected} variables")]
    ValueCount { got: usize, expected: usize },
    #[error("integral embeddings need a per-request model")]
    NotPerRequest,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariableKind {
    NodePlace { vnode: usize, snode: usize },
    LinkPlace { vlink: usize, arc: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableKey {
    pub owner: usize,
    pub alternative: usize,
    pub kind: VariableKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OwnerKind {
    Request,
    Aggregate,
}

/// A built model: the linear program plus the meaning of every variable.
#[derive(Clone, Debug)]
pub struct EmbeddingModel {
    pub lp: LinearProgram,
    pub keys: Vec<VariableKey>,
    pub owners: Vec<ResolvedRequest>,
    pub owner_kind: OwnerKind,
    pub psi: f64,
}

/// Fractional placement weights of one alternative, dense over the
/// substrate: `node[vnode * |V| + v]`, `link[vlink * |A| + a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AltFlow {
    pub substrate_nodes: usize,
    pub substrate_arcs: usize,
    pub node: Vec<f64>,
    pub link: Vec<f64>,
}

impl AltFlow {
    pub fn zeros(alt: &ResolvedAlternative, substrate_nodes: usize, substrate_arcs: usize) -> Self {
        AltFlow {
            substrate_nodes,
            substrate_arcs,
            node: vec![0.0; alt.node_count() * substrate_nodes],
            link: vec![0.0; alt.link_count() * substrate_arcs],
        }
    }

    pub fn node(&self, vnode: usize, snode: usize) -> f64 {
        self.node[vnode * self.substrate_nodes + snode]
    }

    pub fn node_mut(&mut self, vnode: usize, snode: usize) -> &mut f64 {
        &mut self.node[vnode * self.substrate_nodes + snode]
    }

    pub fn link(&self, vlink: usize, arc: usize) -> f64 {
        self.link[vlink * self.substrate_arcs + arc]
    }

    pub fn link_mut(&mut self, vlink: usize, arc: usize) -> &mut f64 {
        &mut self.link[vlink * self.substrate_arcs + arc]
    }

    fn scaled(&self, factor: f64) -> AltFlow {
        AltFlow {
            substrate_nodes: self.substrate_nodes,
            substrate_arcs: self.substrate_arcs,
            node: self.node.iter().map(|y| y * factor).collect(),
            link: self.link.iter().map(|y| y * factor).collect(),
        }
    }

    fn add(&mut self, other: &AltFlow) {
        for (a, b) in self.node.iter_mut().zip(&other.node) {
            *a += b;
        }
        for (a, b) in self.link.iter_mut().zip(&other.link) {
            *a += b;
        }
    }
}

/// Fractional solution of one owner. Loads are `normalizer * weight`; the
/// unserved demand is `demand - normalizer * (sum of root weights)`.
///
/// For a request or aggregate solved directly `normalizer == demand`. After
/// splitting an aggregate, each member keeps the aggregate's demand as its
/// normalizer so that its weights are shares of the aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OwnerFlow {
    pub origin: usize,
    pub app: usize,
    pub demand: f64,
    pub normalizer: f64,
    pub alternatives: Vec<AltFlow>,
}

impl OwnerFlow {
    pub fn root_weight(&self, problem: &Problem, alternative: usize) -> f64 {
        let root = problem.alternative(self.app, alternative).root;
        self.alternatives[alternative].node(root, self.origin)
    }

    pub fn served_weight(&self, problem: &Problem) -> f64 {
        (0..self.alternatives.len()).map(|t| self.root_weight(problem, t)).sum()
    }

    pub fn rejected_demand(&self, problem: &Problem) -> f64 {
        self.demand - self.normalizer * self.served_weight(problem)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalSolution {
    pub owners: Vec<OwnerFlow>,
    pub objective: f64,
}

impl FractionalSolution {
    pub fn zeros(problem: &Problem, owners: &[ResolvedRequest]) -> Self {
        let (nv, na) = (problem.substrate().node_count(), problem.substrate().arc_count());
        FractionalSolution {
            owners: owners
                .iter()
                .map(|o| OwnerFlow {
                    origin: o.origin,
                    app: o.app,
                    demand: o.demand,
                    normalizer: o.demand,
                    alternatives: problem.alternatives(o.app).iter().map(|a| AltFlow::zeros(a, nv, na)).collect(),
                })
                .collect(),
            objective: 0.0,
        }
    }
}

/// Requests sharing an origin and an application.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatedRequest {
    pub origin: usize,
    pub app: usize,
    pub demand: f64,
}

impl From<AggregatedRequest> for ResolvedRequest {
    fn from(a: AggregatedRequest) -> Self {
        ResolvedRequest { origin: a.origin, app: a.app, demand: a.demand }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregation {
    /// Ordered by (origin, app).
    pub aggregates: Vec<AggregatedRequest>,
    /// Request indices per aggregate, ascending.
    pub members: Vec<Vec<usize>>,
    /// Aggregate index per request.
    pub owner_of: Vec<usize>,
}

pub fn aggregate_requests(requests: &[ResolvedRequest]) -> Aggregation {
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (r, req) in requests.iter().enumerate() {
        groups.entry((req.origin, req.app)).or_default().push(r);
    }
    let mut owner_of = vec![0; requests.len()];
    let mut aggregates = Vec::with_capacity(groups.len());
    let mut members = Vec::with_capacity(groups.len());
    for (k, ((origin, app), list)) in groups.into_iter().enumerate() {
        let demand = list.iter().map(|&r| requests[r].demand).sum();
        for &r in &list {
            owner_of[r] = k;
        }
        aggregates.push(AggregatedRequest { origin, app, demand });
        members.push(list);
    }
    Aggregation { aggregates, members, owner_of }
}

/// The exact model over individual requests with binary variables.
pub fn build_milp(
    problem: &Problem,
    requests: &[ResolvedRequest],
    psi: f64,
) -> Result<EmbeddingModel, FormulationError> {
    build(problem, requests, psi, true, OwnerKind::Request)
}

/// The per-request model with variables relaxed to `[0, 1]`.
pub fn build_relaxed_lp(
    problem: &Problem,
    requests: &[ResolvedRequest],
    psi: f64,
) -> Result<EmbeddingModel, FormulationError> {
    build(problem, requests, psi, false, OwnerKind::Request)
}

/// The relaxed model with one variable family per aggregate; its size does
/// not depend on how many requests were merged.
pub fn build_relaxed_aggregate_lp(
    problem: &Problem,
    aggregates: &[AggregatedRequest],
    psi: f64,
) -> Result<EmbeddingModel, FormulationError> {
    let owners: Vec<ResolvedRequest> = aggregates.iter().map(|&a| a.into()).collect();
    build(problem, &owners, psi, false, OwnerKind::Aggregate)
}

/// Substrate elements usable by each virtual element of one alternative for
/// one origin.
pub(crate) struct Support {
    pub nodes: Vec<Vec<bool>>,
    pub arcs: Vec<Vec<bool>>,
}

fn closure(net: &SubstrateNetwork, start: &[bool], usable: impl Fn(usize) -> bool, forward: bool) -> Vec<bool> {
    let mut seen = start.to_vec();
    let mut stack: Vec<usize> = (0..seen.len()).filter(|&v| seen[v]).collect();
    while let Some(v) = stack.pop() {
        let arcs = if forward { net.out_arcs(v) } else { net.in_arcs(v) };
        for &a in arcs {
            if !usable(a) {
                continue;
            }
            let (s, d) = net.arc_ends(a);
            let w = if forward { d } else { s };
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Computes which placements lie on some embedding rooted at `origin`, or
/// `None` when the alternative cannot be embedded at all.
pub(crate) fn support(problem: &Problem, alt: &ResolvedAlternative, origin: usize) -> Option<Support> {
    let net = problem.substrate();
    let nv = net.node_count();
    // Bottom-up: nodes from which the subtree below each virtual node fits.
    let mut able: Vec<Vec<bool>> =
        (0..alt.node_count()).map(|i| (0..nv).map(|v| alt.node_efficiency(i, v).is_some()).collect()).collect();
    for &l in alt.preorder.iter().rev() {
        let (i, j, _) = alt.links[l];
        let reach_child = closure(net, &able[j], |a| alt.link_efficiency(l, a).is_some(), false);
        for v in 0..nv {
            able[i][v] = able[i][v] && reach_child[v];
        }
    }
    if !able[alt.root][origin] {
        return None;
    }
    // Top-down: keep what is reachable from the placements above.
    let mut nodes = vec![vec![false; nv]; alt.node_count()];
    nodes[alt.root][origin] = true;
    let mut arcs = vec![Vec::new(); alt.link_count()];
    for &l in &alt.preorder {
        let (i, j, _) = alt.links[l];
        let usable = |a: usize| alt.link_efficiency(l, a).is_some();
        let fwd = closure(net, &nodes[i], usable, true);
        for v in 0..nv {
            nodes[j][v] = fwd[v] && able[j][v];
        }
        let bwd = closure(net, &nodes[j], usable, false);
        arcs[l] = (0..net.arc_count())
            .map(|a| {
                let (s, d) = net.arc_ends(a);
                usable(a) && fwd[s] && bwd[d]
            })
            .collect();
    }
    Some(Support { nodes, arcs })
}

fn build(
    problem: &Problem,
    owners: &[ResolvedRequest],
    psi: f64,
    binary: bool,
    owner_kind: OwnerKind,
) -> Result<EmbeddingModel, FormulationError> {
    if !(psi >= 0.0 && psi.is_finite()) {
        return Err(FormulationError::NegativePenalty(psi));
    }
    for (index, o) in owners.iter().enumerate() {
        if !(o.demand > 0.0 && o.demand.is_finite()) {
            return Err(FormulationError::BadDemand { index, demand: o.demand });
        }
    }
    let net = problem.substrate();
    let (nv, na) = (net.node_count(), net.arc_count());
    let mut lp = LinearProgram::new();
    let mut keys = Vec::new();
    let mut node_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    let mut arc_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); na];
    lp.objective_offset = psi * owners.iter().map(|o| o.demand).sum::<f64>();

    for (o, owner) in owners.iter().enumerate() {
        let demand = owner.demand;
        let mut roots = Vec::new();
        for (t, alt) in problem.alternatives(owner.app).iter().enumerate() {
            let Some(sup) = support(problem, alt, owner.origin) else { continue };
            let mut node_var = vec![None; alt.node_count() * nv];
            for i in 0..alt.node_count() {
                for v in (0..nv).filter(|&v| sup.nodes[i][v]) {
                    let var = lp.add_variable(format!("n{o}_{t}_{i}_{v}"), 0.0, 1.0, binary);
                    keys.push(VariableKey {
                        owner: o,
                        alternative: t,
                        kind: VariableKind::NodePlace { vnode: i, snode: v },
                    });
                    node_var[i * nv + v] = Some(var);
                    let load = demand * alt.node_sizes[i] * alt.node_efficiency(i, v).unwrap_or(1.0);
                    let mut cost = load * net.node(v).cost;
                    if i == alt.root {
                        cost -= psi * demand;
                        roots.push((var, 1.0));
                    }
                    if cost != 0.0 {
                        lp.objective.push((var, cost));
                    }
                    if load != 0.0 {
                        node_rows[v].push((var, load));
                    }
                }
            }
            let mut link_var = vec![None; alt.link_count() * na];
            for (l, &(_, _, size)) in alt.links.iter().enumerate() {
                for a in (0..na).filter(|&a| sup.arcs[l][a]) {
                    let var = lp.add_variable(format!("l{o}_{t}_{l}_{a}"), 0.0, 1.0, binary);
                    keys.push(VariableKey {
                        owner: o,
                        alternative: t,
                        kind: VariableKind::LinkPlace { vlink: l, arc: a },
                    });
                    link_var[l * na + a] = Some(var);
                    let load = demand * size * alt.link_efficiency(l, a).unwrap_or(1.0);
                    let cost = load * net.arc(a).cost;
                    if cost != 0.0 {
                        lp.objective.push((var, cost));
                    }
                    if load != 0.0 {
                        arc_rows[a].push((var, load));
                    }
                }
            }
            for (l, &(i, j, _)) in alt.links.iter().enumerate() {
                for v in 0..nv {
                    let mut coeffs = Vec::new();
                    if let Some(var) = node_var[j * nv + v] {
                        coeffs.push((var, 1.0));
                    }
                    if let Some(var) = node_var[i * nv + v] {
                        coeffs.push((var, -1.0));
                    }
                    for &a in net.in_arcs(v) {
                        if let Some(var) = link_var[l * na + a] {
                            coeffs.push((var, -1.0));
                        }
                    }
                    for &a in net.out_arcs(v) {
                        if let Some(var) = link_var[l * na + a] {
                            coeffs.push((var, 1.0));
                        }
                    }
                    if !coeffs.is_empty() {
                        lp.add_constraint(format!("flow_{o}_{t}_{l}_{v}"), coeffs, Sense::Eq, 0.0);
                    }
                }
            }
        }
        if !roots.is_empty() {
            lp.add_constraint(format!("onealt_{o}"), roots, Sense::Le, 1.0);
        }
    }
    for (v, coeffs) in node_rows.into_iter().enumerate() {
        if !coeffs.is_empty() {
            lp.add_constraint(format!("ncap_{v}"), coeffs, Sense::Le, net.node(v).capacity);
        }
    }
    for (a, coeffs) in arc_rows.into_iter().enumerate() {
        if !coeffs.is_empty() {
            lp.add_constraint(format!("acap_{a}"), coeffs, Sense::Le, net.arc(a).capacity);
        }
    }
    Ok(EmbeddingModel { lp, keys, owners: owners.to_vec(), owner_kind, psi })
}

impl EmbeddingModel {
    /// Reads solver values into dense per-owner weights.
    pub fn fractional(
        &self,
        problem: &Problem,
        values: &[f64],
        objective: f64,
    ) -> Result<FractionalSolution, FormulationError> {
        if values.len() != self.keys.len() {
            return Err(FormulationError::ValueCount { got: values.len(), expected: self.keys.len() });
        }
        let mut sol = FractionalSolution::zeros(problem, &self.owners);
        sol.objective = objective;
        for (key, &y) in self.keys.iter().zip(values) {
            let flow = &mut sol.owners[key.owner].alternatives[key.alternative];
            match key.kind {
                VariableKind::NodePlace { vnode, snode } => *flow.node_mut(vnode, snode) = y,
                VariableKind::LinkPlace { vlink, arc } => *flow.link_mut(vlink, arc) = y,
            }
        }
        Ok(sol)
    }

    /// Reads a 0/1 solution of a per-request model as embeddings. Values
    /// above one half count as set; a link path follows set arcs from the
    /// parent's node until the child's node is reached.
    pub fn integral_embeddings(
        &self,
        problem: &Problem,
        values: &[f64],
    ) -> Result<Vec<IntegralEmbedding>, FormulationError> {
        if self.owner_kind != OwnerKind::Request {
            return Err(FormulationError::NotPerRequest);
        }
        let frac = self.fractional(problem, values, 0.0)?;
        let net = problem.substrate();
        Ok(frac
            .owners
            .iter()
            .enumerate()
            .map(|(r, owner)| {
                let chosen = (0..owner.alternatives.len()).find(|&t| owner.root_weight(problem, t) > 0.5);
                let Some(t) = chosen else { return IntegralEmbedding::rejected(r) };
                let alt = problem.alternative(owner.app, t);
                let flow = &owner.alternatives[t];
                let mut nodes = vec![usize::MAX; alt.node_count()];
                nodes[alt.root] = owner.origin;
                for (i, host) in nodes.iter_mut().enumerate() {
                    if let Some(v) = (0..net.node_count()).find(|&v| flow.node(i, v) > 0.5) {
                        *host = v;
                    }
                }
                let links = alt
                    .links
                    .iter()
                    .enumerate()
                    .map(|(l, &(i, j, _))| {
                        let mut path = Vec::new();
                        let mut used = vec![false; net.arc_count()];
                        let mut v = nodes[i];
                        while v != nodes[j] {
                            let next = net.out_arcs(v).iter().copied().find(|&a| !used[a] && flow.link(l, a) > 0.5);
                            let Some(a) = next else { break };
                            used[a] = true;
                            path.push(a);
                            v = net.arc_ends(a).1;
                        }
                        path
                    })
                    .collect();
                IntegralEmbedding { request: r, placement: Placement::Embedded { alternative: t, nodes, links } }
            })
            .collect())
    }
}

/// Member solutions of an aggregate solution: every weight is scaled by
/// `d(r) / d_aggregate`.
pub fn split_solution(
    y: &FractionalSolution,
    aggregation: &Aggregation,
    requests: &[ResolvedRequest],
) -> Result<FractionalSolution, FormulationError> {
    let owners = requests
        .iter()
        .enumerate()
        .map(|(r, req)| {
            let k = *aggregation.owner_of.get(r).ok_or(FormulationError::RequestNotAggregated(r))?;
            let agg = y.owners.get(k).ok_or(FormulationError::RequestNotAggregated(r))?;
            if agg.origin != req.origin || agg.app != req.app {
                return Err(FormulationError::RequestNotAggregated(r));
            }
            let share = req.demand / agg.normalizer;
            Ok(OwnerFlow {
                origin: req.origin,
                app: req.app,
                demand: req.demand,
                normalizer: agg.normalizer,
                alternatives: agg.alternatives.iter().map(|f| f.scaled(share)).collect(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FractionalSolution { owners, objective: y.objective })
}

/// Aggregate solution from member solutions: weights of members add up.
pub fn merge_solution(x: &FractionalSolution, aggregation: &Aggregation) -> FractionalSolution {
    let owners = aggregation
        .aggregates
        .iter()
        .zip(&aggregation.members)
        .map(|(agg, members)| {
            let mut alternatives: Vec<AltFlow> =
                x.owners[members[0]].alternatives.iter().map(|f| f.scaled(0.0)).collect();
            let mut normalizer = 0.0;
            for &r in members {
                for (acc, f) in alternatives.iter_mut().zip(&x.owners[r].alternatives) {
                    acc.add(f);
                }
                normalizer = x.owners[r].normalizer;
            }
            OwnerFlow { origin: agg.origin, app: agg.app, demand: agg.demand, normalizer, alternatives }
        })
        .collect();
    FractionalSolution { owners, objective: x.objective }
}

/// Keeps only alternative `index` of every application.
pub fn restrict_to_alternative(catalog: &Catalog, index: usize) -> Result<Catalog, FormulationError> {
    let applications = catalog
        .applications
        .iter()
        .map(|app| {
            let alt = app
                .alternatives
                .get(index)
                .ok_or_else(|| FormulationError::MissingAlternative { app: app.id.clone(), index })?;
            let mut app = app.clone();
            app.alternatives = vec![alt.clone()];
            Ok(app)
        })
        .collect::<Result<Vec<_>, FormulationError>>()?;
    Ok(Catalog { applications })
}

/// [`restrict_to_alternative`] applied to a whole problem; efficiency
/// entries naming dropped alternatives are discarded.
pub fn restrict_problem(problem: &Problem, index: usize) -> Result<Problem, FormulationError> {
    let catalog = restrict_to_alternative(problem.catalog(), index)?;
    let keep = |app: &str, alt: &Option<alloc::string::String>| match alt {
        None => true,
        Some(name) => catalog.applications.iter().any(|a| a.id == app && a.alternatives[0].name == *name),
    };
    let eff = problem.efficiency();
    let efficiency = EfficiencyMap {
        nodes: eff.nodes.iter().filter(|e| keep(&e.app, &e.alternative)).cloned().collect(),
        links: eff.links.iter().filter(|e| keep(&e.app, &e.alternative)).cloned().collect(),
    };
    Ok(Problem::new(problem.substrate().clone(), catalog, efficiency)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyBasis {
    EdgeNodes,
    AllNodes,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionPenalty {
    pub psi: f64,
    pub basis: PenaltyBasis,
}

/// Per-unit rejection penalty: the most expensive collocation of any
/// application's main alternative on a single Edge node. Without Edge nodes
/// every node is considered.
pub fn compute_rejection_penalty(problem: &Problem) -> Result<RejectionPenalty, FormulationError> {
    let net = problem.substrate();
    let edge: Vec<usize> = (0..net.node_count()).filter(|&v| net.node(v).tier == Some(Tier::Edge)).collect();
    let (candidates, basis) = if edge.is_empty() {
        log::warn!("substrate has no Edge node; rejection penalty uses every node");
        ((0..net.node_count()).collect(), PenaltyBasis::AllNodes)
    } else {
        (edge, PenaltyBasis::EdgeNodes)
    };
    let mut psi: f64 = 0.0;
    for (a, app) in problem.catalog().applications.iter().enumerate() {
        let main = problem.alternative(a, 0);
        let best = candidates
            .iter()
            .filter_map(|&v| {
                let mut cost = 0.0;
                for (i, &size) in main.node_sizes.iter().enumerate() {
                    cost += size * main.node_efficiency(i, v)? * net.node(v).cost;
                }
                Some(cost)
            })
            .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |m| m.max(c))));
        match best {
            Some(c) => psi = psi.max(c),
            None => return Err(FormulationError::NoPenaltyBasis(app.id.clone())),
        }
    }
    Ok(RejectionPenalty { psi, basis })
}
