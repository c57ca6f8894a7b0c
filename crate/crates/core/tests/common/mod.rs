//! Seeded random instances for property tests.

#![allow(dead_code)]

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use vneap_core::model::{
    AlternativeTopology, Application, Catalog, Efficiency, EfficiencyMap, NodeEfficiency, Problem, Request,
    ResolvedRequest, SubstrateArc, SubstrateNetwork, SubstrateNode, Tier, VirtualLink, VirtualNode,
};

pub struct Instance {
    pub problem: Problem,
    pub requests: Vec<ResolvedRequest>,
    pub psi: f64,
}

pub struct Shape {
    pub max_nodes: usize,
    pub max_requests: usize,
    pub max_functions: usize,
    pub max_alternatives: usize,
}

pub const SMALL: Shape = Shape { max_nodes: 5, max_requests: 4, max_functions: 3, max_alternatives: 2 };

fn random_tree(rng: &mut SmallRng, name: &str, functions: usize) -> AlternativeTopology {
    let mut nodes = vec![VirtualNode { id: "root".into(), size: 0.0 }];
    let mut links = Vec::new();
    for k in 0..functions {
        let id = format!("f{k}");
        let parent = nodes[rng.random_range(0..nodes.len())].id.clone();
        nodes.push(VirtualNode { id: id.clone(), size: f64::from(rng.random_range(1..=20u32)) });
        links.push(VirtualLink { parent, child: id, size: f64::from(rng.random_range(1..=20u32)) });
    }
    AlternativeTopology { name: name.into(), root: "root".into(), nodes, links }
}

/// A connected substrate, one application and a few requests. Node 0 is
/// always an Edge node; costs and sizes are small integers.
pub fn instance(seed: u64, shape: &Shape) -> Instance {
    let mut rng = SmallRng::seed_from_u64(seed);
    let n = rng.random_range(2..=shape.max_nodes);
    let tiers = [Tier::Edge, Tier::Transport, Tier::Core];
    let nodes: Vec<SubstrateNode> = (0..n)
        .map(|v| {
            let tier = if v == 0 { Tier::Edge } else { tiers[rng.random_range(0..3)] };
            SubstrateNode {
                id: format!("n{v}"),
                cost: f64::from(rng.random_range(1..=10u32)),
                capacity: f64::from(rng.random_range(20..=400u32)),
                tier: Some(tier),
            }
        })
        .collect();
    let mut pairs = Vec::new();
    for v in 1..n {
        pairs.push((rng.random_range(0..v), v));
    }
    for _ in 0..rng.random_range(0..=n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let pair = (a.min(b), a.max(b));
        if a != b && !pairs.contains(&pair) {
            pairs.push(pair);
        }
    }
    let links: Vec<SubstrateArc> = pairs
        .iter()
        .map(|&(a, b)| SubstrateArc {
            src: format!("n{a}"),
            dst: format!("n{b}"),
            cost: f64::from(rng.random_range(1..=3u32)),
            capacity: f64::from(rng.random_range(20..=400u32)),
            tier: None,
        })
        .collect();
    let net = SubstrateNetwork::with_links(nodes, Vec::new(), links);

    let alternatives = (0..rng.random_range(1..=shape.max_alternatives))
        .map(|t| {
            let functions = rng.random_range(0..=shape.max_functions);
            random_tree(&mut rng, &format!("alt{t}"), functions)
        })
        .collect();
    let app = Application { id: "app".into(), alternatives };
    let mut efficiency = EfficiencyMap::default();
    if rng.random_bool(0.3) && n > 2 {
        let snode = format!("n{}", rng.random_range(1..n));
        let value = if rng.random_bool(0.5) {
            Efficiency::Forbidden
        } else {
            Efficiency::Factor(f64::from(rng.random_range(1..=4u32)) * 0.5)
        };
        efficiency.nodes.push(NodeEfficiency {
            app: "app".into(),
            alternative: None,
            vnode: "f0".into(),
            snode,
            value,
        });
    }
    let problem = match Problem::new(net.clone(), Catalog::new(vec![app.clone()]), efficiency) {
        Ok(p) => p,
        // The efficiency entry may name a node the sampled trees lack.
        Err(_) => Problem::new(net, Catalog::new(vec![app]), EfficiencyMap::default()).expect("valid instance"),
    };
    let requests: Vec<Request> = (0..rng.random_range(1..=shape.max_requests))
        .map(|_| Request {
            origin: format!("n{}", rng.random_range(0..n)),
            app: "app".into(),
            demand: f64::from(rng.random_range(1..=6u32)) * 0.5,
        })
        .collect();
    let requests = problem.resolve_requests(&requests).expect("requests resolve");
    let psi = vneap_core::compute_rejection_penalty(&problem).map(|p| p.psi).unwrap_or(100.0).max(1.0);
    Instance { problem, requests, psi }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}
