//! Tier-based cost and capacity assignment.
//!
//! Node costs fall and capacities grow by a constant ratio from edge to
//! transport to core. Link capacities follow the capacity ratio by link
//! tier; link costs use their own ratio so the edge link cost can sit near
//! twice the core link cost. Capacities are relative until calibrated.

use serde::{Deserialize, Serialize};
use vneap_core::model::{SubstrateArc, SubstrateNode};
use vneap_core::{SubstrateNetwork, Tier};

use crate::graphml::RawTopology;
use crate::tiers::{classify_tiers, tier_rank, TierAssignment, TierError, TierMethod};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TierRatios {
    /// Node cost of a tier divided by the cost of the next tier up.
    pub cost: f64,
    /// Capacity of a tier divided by the capacity of the next tier down.
    pub capacity: f64,
    /// Link cost of a tier divided by the link cost of the next tier up.
    pub link_cost: f64,
}

impl Default for TierRatios {
    fn default() -> Self {
        TierRatios { cost: 3.0, capacity: 3.0, link_cost: std::f64::consts::SQRT_2 }
    }
}

impl TierRatios {
    pub fn uniform(ratio: f64) -> Self {
        TierRatios { cost: ratio, capacity: ratio, link_cost: ratio }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostAnchors {
    pub edge_node_cost: f64,
    pub core_link_cost: f64,
}

impl Default for CostAnchors {
    fn default() -> Self {
        CostAnchors { edge_node_cost: 0.09, core_link_cost: 0.01 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubstrateConfig {
    pub tiers: TierMethod,
    pub ratios: TierRatios,
    pub anchors: CostAnchors,
}

/// Per-unit node cost and relative capacity of `tier`.
pub fn node_parameters(tier: Tier, ratios: &TierRatios, anchors: &CostAnchors) -> (f64, f64) {
    let k = tier_rank(tier) as i32;
    (anchors.edge_node_cost / ratios.cost.powi(k), ratios.capacity.powi(k))
}

/// Per-unit link cost and relative capacity of a link of `tier`.
pub fn link_parameters(tier: Tier, ratios: &TierRatios, anchors: &CostAnchors) -> (f64, f64) {
    let k = tier_rank(tier) as i32;
    (anchors.core_link_cost * ratios.link_cost.powi(2 - k), ratios.capacity.powi(k))
}

pub fn assign_costs_capacities(
    topo: &RawTopology,
    tiers: &TierAssignment,
    config: &SubstrateConfig,
) -> SubstrateNetwork {
    let nodes = topo
        .nodes
        .iter()
        .zip(&tiers.nodes)
        .map(|(n, &tier)| {
            let (cost, capacity) = node_parameters(tier, &config.ratios, &config.anchors);
            SubstrateNode { id: n.id.clone(), cost, capacity, tier: Some(tier) }
        })
        .collect();
    let links = topo
        .edges
        .iter()
        .zip(&tiers.links)
        .map(|(e, &tier)| {
            let (cost, capacity) = link_parameters(tier, &config.ratios, &config.anchors);
            SubstrateArc { src: e.source.clone(), dst: e.target.clone(), cost, capacity, tier: Some(tier) }
        })
        .collect();
    SubstrateNetwork::with_links(nodes, Vec::new(), links)
}

/// Classifies tiers and assigns costs and relative capacities.
pub fn build_substrate(
    topo: &RawTopology,
    config: &SubstrateConfig,
) -> Result<(SubstrateNetwork, TierAssignment), TierError> {
    let tiers = classify_tiers(topo, &config.tiers)?;
    Ok((assign_costs_capacities(topo, &tiers, config), tiers))
}
