//! Small reference instances.
//!
//! The two-datacenter instance has an Edge node (cost 10, capacity 10 000)
//! linked to a Core node (cost 1, capacity 100 000). Its application has a
//! main chain `root -> A(5) -> B(100)` and an accelerated chain
//! `root -> A(5) -> acc(10) -> B(100)` whose last hop shrinks from 100 to 30
//! bandwidth units.
//!
//! The CCTV catalog fixes the totals of its two alternatives (105 and 115
//! compute units, accelerator size 10); the split across functions and the
//! link sizes are assumed values.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{
    AlternativeTopology, Application, Catalog, EfficiencyMap, Problem, Request, SubstrateArc, SubstrateNetwork,
    SubstrateNode, Tier, VirtualLink, VirtualNode,
};

fn vnode(id: &str, size: f64) -> VirtualNode {
    VirtualNode { id: id.into(), size }
}

fn vlink(parent: &str, child: &str, size: f64) -> VirtualLink {
    VirtualLink { parent: parent.into(), child: child.into(), size }
}

/// Builds a chain alternative `root -> names[0] -> names[1] -> ...`.
pub fn chain(name: &str, root: &str, nodes: &[(&str, f64)], link_sizes: &[f64]) -> AlternativeTopology {
    assert_eq!(nodes.len(), link_sizes.len());
    let mut vnodes = vec![vnode(root, 0.0)];
    let mut links = Vec::with_capacity(nodes.len());
    let mut prev = root;
    for (&(id, size), &bw) in nodes.iter().zip(link_sizes) {
        vnodes.push(vnode(id, size));
        links.push(vlink(prev, id, bw));
        prev = id;
    }
    AlternativeTopology { name: name.into(), root: root.into(), nodes: vnodes, links }
}

/// The two-node Edge/Core substrate with the given link capacity per
/// direction.
pub fn toy_substrate(link_capacity: f64) -> SubstrateNetwork {
    toy_substrate_with(10_000.0, 100_000.0, link_capacity)
}

pub fn toy_substrate_with(edge_capacity: f64, core_capacity: f64, link_capacity: f64) -> SubstrateNetwork {
    let node = |id: &str, cost, capacity, tier| SubstrateNode { id: id.into(), cost, capacity, tier: Some(tier) };
    let nodes = vec![node("Edge", 10.0, edge_capacity, Tier::Edge), node("Core", 1.0, core_capacity, Tier::Core)];
    let link = SubstrateArc {
        src: "Edge".into(),
        dst: "Core".into(),
        cost: 1.0,
        capacity: link_capacity,
        tier: Some(Tier::Edge),
    };
    SubstrateNetwork::with_links(nodes, Vec::new(), vec![link])
}

pub fn toy_application() -> Application {
    Application {
        id: "toy".into(),
        alternatives: vec![
            chain("main", "root", &[("A", 5.0), ("B", 100.0)], &[100.0, 100.0]),
            chain("accelerated", "root", &[("A", 5.0), ("acc", 10.0), ("B", 100.0)], &[100.0, 100.0, 30.0]),
        ],
    }
}

pub fn toy_catalog() -> Catalog {
    Catalog::new(vec![toy_application()])
}

pub fn toy_problem(link_capacity: f64) -> Problem {
    Problem::new(toy_substrate(link_capacity), toy_catalog(), EfficiencyMap::default()).expect("toy instance is valid")
}

/// `count` requests of unit demand for the toy application at the Edge node.
pub fn toy_requests(count: usize) -> Vec<Request> {
    (0..count).map(|_| Request { origin: "Edge".into(), app: "toy".into(), demand: 1.0 }).collect()
}

pub fn cctv_application() -> Application {
    let root = "camera";
    let main = AlternativeTopology {
        name: "main".into(),
        root: root.into(),
        nodes: vec![vnode(root, 0.0), vnode("f1", 5.0), vnode("f2", 20.0), vnode("f3", 50.0), vnode("f4", 30.0)],
        links: vec![
            vlink(root, "f1", 100.0),
            vlink("f1", "f2", 100.0),
            vlink("f2", "f3", 100.0),
            vlink("f2", "f4", 10.0),
        ],
    };
    let mut accelerated = main.clone();
    accelerated.name = "accelerated".into();
    accelerated.nodes.push(vnode("acc", 10.0));
    accelerated.links = vec![
        vlink(root, "f1", 100.0),
        vlink("f1", "f2", 100.0),
        vlink("f2", "acc", 100.0),
        vlink("acc", "f3", 30.0),
        vlink("f2", "f4", 10.0),
    ];
    Application { id: String::from("cctv"), alternatives: vec![main, accelerated] }
}

pub fn cctv_catalog() -> Catalog {
    Catalog::new(vec![cctv_application()])
}
