//! Independent feasibility checks and cost accounting.
//!
//! Nothing here reuses the formulation's constraint code: embeddings and
//! fractional solutions are checked by walking them directly.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::FractionalSolution;
use crate::model::{IntegralEmbedding, Placement, Problem, ResolvedRequest, SubstrateNetwork};

/// Relative slack allowed on capacity and conservation checks.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    #[error("embedding refers to unknown request {request}")]
    RequestOutOfRange { request: usize },
    #[error("request {request} is embedded more than once")]
    DuplicateRequest { request: usize },
    #[error("request {request} uses unknown alternative {alternative}")]
    AlternativeOutOfRange { request: usize, alternative: usize },
    #[error("request {request}: placement does not match the alternative's shape")]
    ShapeMismatch { request: usize },
    #[error("request {request}: root placed on {found}, origin is {expected}")]
    RootMisplaced { request: usize, expected: usize, found: usize },
    #[error("request {request}: unknown substrate node {node}")]
    NodeOutOfRange { request: usize, node: usize },
    #[error("request {request}: unknown substrate arc {arc}")]
    ArcOutOfRange { request: usize, arc: usize },
    #[error("request {request}: virtual node {vnode} may not run on {snode}")]
    ForbiddenNode { request: usize, vnode: usize, snode: usize },
    #[error("request {request}: virtual link {vlink} may not use arc {arc}")]
    ForbiddenArc { request: usize, vlink: usize, arc: usize },
    #[error("request {request}: path of virtual link {vlink} does not join its endpoints")]
    BrokenPath { request: usize, vlink: usize },
    #[error("owner {owner}: weight {value} outside [0, 1]")]
    WeightOutOfRange { owner: usize, value: f64 },
    #[error("owner {owner}: served share {served} exceeds its demand")]
    OverServed { owner: usize, served: f64 },
    #[error("owner {owner}, alternative {alternative}, link {vlink}: flow off by {imbalance} at node {node}")]
    FlowImbalance { owner: usize, alternative: usize, vlink: usize, node: usize, imbalance: f64 },
    #[error("node {node}: load {load} exceeds capacity {capacity}")]
    NodeCapacity { node: usize, load: f64, capacity: f64 },
    #[error("arc {arc}: load {load} exceeds capacity {capacity}")]
    ArcCapacity { arc: usize, load: f64, capacity: f64 },
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ValidationError {
    #[error("embeddings are infeasible: {} violation(s), first: {}", .0.len(), .0[0])]
    Infeasible(Vec<Violation>),
    #[error("request {0} has no embedding or rejection")]
    Missing(usize),
}

/// Induced load per substrate node and arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadVector {
    pub node: Vec<f64>,
    pub arc: Vec<f64>,
}

impl LoadVector {
    pub fn zeros(net: &SubstrateNetwork) -> Self {
        LoadVector { node: vec![0.0; net.node_count()], arc: vec![0.0; net.arc_count()] }
    }

    pub fn add(&mut self, other: &LoadVector) {
        for (a, b) in self.node.iter_mut().zip(&other.node) {
            *a += b;
        }
        for (a, b) in self.arc.iter_mut().zip(&other.arc) {
            *a += b;
        }
    }

    /// Capacity violations of this load.
    pub fn overloads(&self, net: &SubstrateNetwork) -> Vec<Violation> {
        let mut out = Vec::new();
        for (v, &load) in self.node.iter().enumerate() {
            let capacity = net.node(v).capacity;
            if exceeds(load, capacity) {
                out.push(Violation::NodeCapacity { node: v, load, capacity });
            }
        }
        for (a, &load) in self.arc.iter().enumerate() {
            let capacity = net.arc(a).capacity;
            if exceeds(load, capacity) {
                out.push(Violation::ArcCapacity { arc: a, load, capacity });
            }
        }
        out
    }

    /// Compute and bandwidth cost of this load.
    pub fn cost(&self, net: &SubstrateNetwork) -> (f64, f64) {
        let compute = self.node.iter().enumerate().map(|(v, l)| l * net.node(v).cost).sum();
        let bandwidth = self.arc.iter().enumerate().map(|(a, l)| l * net.arc(a).cost).sum();
        (compute, bandwidth)
    }
}

fn exceeds(load: f64, capacity: f64) -> bool {
    load > capacity + TOLERANCE * (1.0 + capacity.abs())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub compute: f64,
    pub bandwidth: f64,
    pub rejection: f64,
    pub total: f64,
    pub served_demand: f64,
    pub rejected_demand: f64,
}

impl CostBreakdown {
    fn new(compute: f64, bandwidth: f64, psi: f64, served_demand: f64, rejected_demand: f64) -> Self {
        // Empty float sums are -0.0; adding 0.0 clears the sign.
        let (compute, bandwidth, rejected_demand) = (compute + 0.0, bandwidth + 0.0, rejected_demand + 0.0);
        let rejection = psi * rejected_demand;
        CostBreakdown {
            compute,
            bandwidth,
            rejection,
            total: compute + bandwidth + rejection,
            served_demand,
            rejected_demand,
        }
    }
}

/// Loads induced by `embeddings` together with every structural violation
/// found on the way; capacity is not checked here.
pub fn induced_load(
    problem: &Problem,
    requests: &[ResolvedRequest],
    embeddings: &[IntegralEmbedding],
) -> (LoadVector, Vec<Violation>) {
    let net = problem.substrate();
    let mut load = LoadVector::zeros(net);
    let mut violations = Vec::new();
    let mut seen = vec![false; requests.len()];
    for emb in embeddings {
        let request = emb.request;
        let Some(req) = requests.get(request) else {
            violations.push(Violation::RequestOutOfRange { request });
            continue;
        };
        if core::mem::replace(&mut seen[request], true) {
            violations.push(Violation::DuplicateRequest { request });
            continue;
        }
        let Placement::Embedded { alternative, nodes, links } = &emb.placement else { continue };
        let Some(alt) = problem.alternatives(req.app).get(*alternative) else {
            violations.push(Violation::AlternativeOutOfRange { request, alternative: *alternative });
            continue;
        };
        if nodes.len() != alt.node_count() || links.len() != alt.link_count() {
            violations.push(Violation::ShapeMismatch { request });
            continue;
        }
        if let Some(&node) = nodes.iter().find(|&&v| v >= net.node_count()) {
            violations.push(Violation::NodeOutOfRange { request, node });
            continue;
        }
        if let Some(&arc) = links.iter().flatten().find(|&&a| a >= net.arc_count()) {
            violations.push(Violation::ArcOutOfRange { request, arc });
            continue;
        }
        if nodes[alt.root] != req.origin {
            violations.push(Violation::RootMisplaced { request, expected: req.origin, found: nodes[alt.root] });
        }
        for (i, &v) in nodes.iter().enumerate() {
            match alt.node_efficiency(i, v) {
                Some(eff) => load.node[v] += req.demand * alt.node_sizes[i] * eff,
                None => violations.push(Violation::ForbiddenNode { request, vnode: i, snode: v }),
            }
        }
        for (l, path) in links.iter().enumerate() {
            let (i, j, size) = alt.links[l];
            let mut at = nodes[i];
            let mut contiguous = true;
            for &a in path {
                let (src, dst) = net.arc_ends(a);
                contiguous &= src == at;
                at = dst;
                match alt.link_efficiency(l, a) {
                    Some(eff) => load.arc[a] += req.demand * size * eff,
                    None => violations.push(Violation::ForbiddenArc { request, vlink: l, arc: a }),
                }
            }
            let collocated_detour = nodes[i] == nodes[j] && !path.is_empty();
            if !contiguous || at != nodes[j] || collocated_detour {
                violations.push(Violation::BrokenPath { request, vlink: l });
            }
        }
    }
    (load, violations)
}

/// Every violated constraint; empty when the embeddings are feasible.
pub fn check_feasibility(
    problem: &Problem,
    requests: &[ResolvedRequest],
    embeddings: &[IntegralEmbedding],
) -> Vec<Violation> {
    let (load, mut violations) = induced_load(problem, requests, embeddings);
    violations.extend(load.overloads(problem.substrate()));
    violations
}

/// Cost of a complete, feasible set of embeddings: one entry per request.
pub fn total_cost(
    problem: &Problem,
    requests: &[ResolvedRequest],
    embeddings: &[IntegralEmbedding],
    psi: f64,
) -> Result<CostBreakdown, ValidationError> {
    let violations = check_feasibility(problem, requests, embeddings);
    if !violations.is_empty() {
        return Err(ValidationError::Infeasible(violations));
    }
    let mut covered = vec![false; requests.len()];
    for e in embeddings {
        covered[e.request] = true;
    }
    if let Some(r) = covered.iter().position(|c| !c) {
        return Err(ValidationError::Missing(r));
    }
    let (load, _) = induced_load(problem, requests, embeddings);
    let (compute, bandwidth) = load.cost(problem.substrate());
    let rejected: f64 = embeddings.iter().filter(|e| e.is_rejected()).map(|e| requests[e.request].demand).sum();
    let total: f64 = requests.iter().map(|r| r.demand).sum();
    Ok(CostBreakdown::new(compute, bandwidth, psi, total - rejected, rejected))
}

/// Demand-weighted fraction of rejected requests; 0 for no demand.
pub fn rejection_rate(requests: &[ResolvedRequest], embeddings: &[IntegralEmbedding]) -> f64 {
    let total: f64 = embeddings.iter().map(|e| requests[e.request].demand).sum();
    if total <= 0.0 {
        return 0.0;
    }
    // Adding zero turns the -0.0 of an empty sum into 0.0.
    embeddings.iter().filter(|e| e.is_rejected()).map(|e| requests[e.request].demand).sum::<f64>() / total + 0.0
}

/// Fraction of served demand per alternative index; empty when nothing is
/// served.
pub fn alternative_shares(requests: &[ResolvedRequest], embeddings: &[IntegralEmbedding]) -> BTreeMap<usize, f64> {
    let mut shares = BTreeMap::new();
    let mut served = 0.0;
    for e in embeddings {
        if let Some(t) = e.alternative() {
            let d = requests[e.request].demand;
            *shares.entry(t).or_insert(0.0) += d;
            served += d;
        }
    }
    for share in shares.values_mut() {
        *share /= served;
    }
    shares
}

/// Served demand per alternative index of a fractional solution, as
/// fractions of all served demand.
pub fn fractional_shares(problem: &Problem, sol: &FractionalSolution) -> BTreeMap<usize, f64> {
    let mut shares = BTreeMap::new();
    let mut served = 0.0;
    for owner in &sol.owners {
        for t in 0..owner.alternatives.len() {
            let d = owner.normalizer * owner.root_weight(problem, t);
            if d > 0.0 {
                *shares.entry(t).or_insert(0.0) += d;
                served += d;
            }
        }
    }
    for share in shares.values_mut() {
        *share /= served;
    }
    shares
}

/// Loads induced by a fractional solution.
pub fn fractional_loads(problem: &Problem, sol: &FractionalSolution) -> LoadVector {
    let net = problem.substrate();
    let mut load = LoadVector::zeros(net);
    for owner in &sol.owners {
        for (t, flow) in owner.alternatives.iter().enumerate() {
            let alt = problem.alternative(owner.app, t);
            for (i, &size) in alt.node_sizes.iter().enumerate() {
                for v in 0..net.node_count() {
                    let w = flow.node(i, v);
                    if w != 0.0 {
                        load.node[v] += owner.normalizer * size * w * alt.node_efficiency(i, v).unwrap_or(1.0);
                    }
                }
            }
            for (l, &(_, _, size)) in alt.links.iter().enumerate() {
                for a in 0..net.arc_count() {
                    let w = flow.link(l, a);
                    if w != 0.0 {
                        load.arc[a] += owner.normalizer * size * w * alt.link_efficiency(l, a).unwrap_or(1.0);
                    }
                }
            }
        }
    }
    load
}

/// Objective value of a fractional solution recomputed from its weights.
pub fn fractional_cost(problem: &Problem, sol: &FractionalSolution, psi: f64) -> CostBreakdown {
    let (compute, bandwidth) = fractional_loads(problem, sol).cost(problem.substrate());
    let rejected: f64 = sol.owners.iter().map(|o| o.rejected_demand(problem)).sum();
    let total: f64 = sol.owners.iter().map(|o| o.demand).sum();
    CostBreakdown::new(compute, bandwidth, psi, total - rejected, rejected)
}

/// Constraint violations of a fractional solution, with `tol` as absolute
/// slack on weights and flow balance.
pub fn check_fractional(problem: &Problem, sol: &FractionalSolution, tol: f64) -> Vec<Violation> {
    let net = problem.substrate();
    let mut out = Vec::new();
    for (o, owner) in sol.owners.iter().enumerate() {
        let cap = owner.demand / owner.normalizer;
        for (t, flow) in owner.alternatives.iter().enumerate() {
            let alt = problem.alternative(owner.app, t);
            for &value in flow.node.iter().chain(&flow.link) {
                if value < -tol || value > 1.0 + tol {
                    out.push(Violation::WeightOutOfRange { owner: o, value });
                }
            }
            for i in 0..alt.node_count() {
                for v in 0..net.node_count() {
                    let w = flow.node(i, v);
                    if w.abs() <= tol {
                        continue;
                    }
                    if i == alt.root && v != owner.origin {
                        out.push(Violation::RootMisplaced { request: o, expected: owner.origin, found: v });
                    }
                    if alt.node_efficiency(i, v).is_none() {
                        out.push(Violation::ForbiddenNode { request: o, vnode: i, snode: v });
                    }
                }
            }
            for (l, &(i, j, _)) in alt.links.iter().enumerate() {
                for a in 0..net.arc_count() {
                    if flow.link(l, a).abs() > tol && alt.link_efficiency(l, a).is_none() {
                        out.push(Violation::ForbiddenArc { request: o, vlink: l, arc: a });
                    }
                }
                for v in 0..net.node_count() {
                    let inflow: f64 = net.in_arcs(v).iter().map(|&a| flow.link(l, a)).sum();
                    let outflow: f64 = net.out_arcs(v).iter().map(|&a| flow.link(l, a)).sum();
                    let imbalance = flow.node(j, v) - flow.node(i, v) - inflow + outflow;
                    if imbalance.abs() > tol {
                        out.push(Violation::FlowImbalance { owner: o, alternative: t, vlink: l, node: v, imbalance });
                    }
                }
            }
        }
        let served = owner.served_weight(problem);
        if served > cap + tol {
            out.push(Violation::OverServed { owner: o, served });
        }
    }
    out.extend(fractional_loads(problem, sol).overloads(net));
    out
}

/// Absolute difference between a reported objective and a recomputed cost.
pub fn objective_consistency(reported: f64, recomputed: &CostBreakdown) -> f64 {
    (reported - recomputed.total).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn setup() -> (Problem, Vec<ResolvedRequest>) {
        let p = fixtures::toy_problem(10_000.0);
        let r = p.resolve_requests(&fixtures::toy_requests(1)).unwrap();
        (p, r)
    }

    fn embedded(alternative: usize, nodes: Vec<usize>, links: Vec<Vec<usize>>) -> IntegralEmbedding {
        IntegralEmbedding { request: 0, placement: Placement::Embedded { alternative, nodes, links } }
    }

    // Edge = 0, Core = 1; arc 0 is Edge->Core.
    #[test]
    fn toy_costs_per_option() {
        let (p, r) = setup();
        let a = embedded(0, vec![0, 1, 1], vec![vec![0], vec![]]);
        let c = total_cost(&p, &r, &[a], 1050.0).unwrap();
        assert_eq!((c.compute, c.bandwidth, c.total), (105.0, 100.0, 205.0));
        let b = embedded(0, vec![0, 0, 1], vec![vec![], vec![0]]);
        assert_eq!(total_cost(&p, &r, &[b], 1050.0).unwrap().total, 250.0);
        let all_edge = embedded(0, vec![0, 0, 0], vec![vec![], vec![]]);
        assert_eq!(total_cost(&p, &r, &[all_edge], 1050.0).unwrap().total, 1050.0);
        let d = embedded(1, vec![0, 0, 0, 1], vec![vec![], vec![], vec![0]]);
        let c = total_cost(&p, &r, &[d], 1050.0).unwrap();
        assert_eq!((c.compute, c.bandwidth, c.total), (250.0, 30.0, 280.0));
    }

    #[test]
    fn rejected_pays_penalty() {
        let (p, r) = setup();
        let c = total_cost(&p, &r, &[IntegralEmbedding::rejected(0)], 1050.0).unwrap();
        assert_eq!(c.total, 1050.0);
        assert_eq!(rejection_rate(&r, &[IntegralEmbedding::rejected(0)]), 1.0);
        assert!(alternative_shares(&r, &[IntegralEmbedding::rejected(0)]).is_empty());
    }

    #[test]
    fn misplaced_root() {
        let (p, r) = setup();
        let e = embedded(0, vec![1, 1, 1], vec![vec![], vec![]]);
        assert_eq!(
            check_feasibility(&p, &r, &[e]),
            vec![Violation::RootMisplaced { request: 0, expected: 0, found: 1 }]
        );
    }

    #[test]
    fn arc_overload() {
        let p = fixtures::toy_problem(50.0);
        let r = p.resolve_requests(&fixtures::toy_requests(1)).unwrap();
        let e = embedded(0, vec![0, 0, 1], vec![vec![], vec![0]]);
        assert_eq!(
            check_feasibility(&p, &r, &[e]),
            vec![Violation::ArcCapacity { arc: 0, load: 100.0, capacity: 50.0 }]
        );
    }

    #[test]
    fn broken_and_detour_paths() {
        let (p, r) = setup();
        let e = embedded(0, vec![0, 1, 1], vec![vec![], vec![]]);
        assert_eq!(check_feasibility(&p, &r, &[e]), vec![Violation::BrokenPath { request: 0, vlink: 0 }]);
        let e = embedded(0, vec![0, 0, 0], vec![vec![0, 1], vec![]]);
        assert_eq!(check_feasibility(&p, &r, &[e]), vec![Violation::BrokenPath { request: 0, vlink: 0 }]);
    }

    #[test]
    fn duplicate_and_missing() {
        let (p, r) = setup();
        let rej = IntegralEmbedding::rejected(0);
        assert_eq!(check_feasibility(&p, &r, &[rej.clone(), rej]), vec![Violation::DuplicateRequest { request: 0 }]);
        assert_eq!(total_cost(&p, &r, &[], 1.0), Err(ValidationError::Missing(0)));
    }

    #[test]
    fn shares_and_rate() {
        let p = fixtures::toy_problem(10_000.0);
        let mut reqs = p.resolve_requests(&fixtures::toy_requests(3)).unwrap();
        reqs[1].demand = 3.0;
        let es = vec![
            IntegralEmbedding {
                request: 0,
                placement: Placement::Embedded { alternative: 0, nodes: vec![0; 3], links: vec![vec![]; 2] },
            },
            IntegralEmbedding {
                request: 1,
                placement: Placement::Embedded { alternative: 1, nodes: vec![0; 4], links: vec![vec![]; 3] },
            },
            IntegralEmbedding::rejected(2),
        ];
        assert_eq!(rejection_rate(&reqs, &es), 0.2);
        let shares = alternative_shares(&reqs, &es);
        assert_eq!(shares[&0], 0.25);
        assert_eq!(shares[&1], 0.75);
    }

    #[test]
    fn consistency_delta() {
        let c = CostBreakdown::new(1.0, 2.0, 0.0, 1.0, 0.0);
        assert_eq!(objective_consistency(3.0, &c), 0.0);
        assert_eq!(objective_consistency(3.5, &c), 0.5);
    }
}
