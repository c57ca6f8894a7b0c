//! Edge / transport / core classification of a raw topology.
//!
//! The default method splits node degrees into three natural-breaks classes
//! (Fisher's exact optimal partition of the sorted degrees). Nodes sharing a
//! degree always share a class; among equally good partitions the one that
//! keeps more nodes in lower tiers wins.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vneap_core::Tier;

use crate::graphml::RawTopology;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TierMethod {
    #[default]
    NaturalBreaks,
    /// Reads `edge` / `transport` / `core` from a node attribute.
    Attribute { name: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierAssignment {
    /// Tier per node, in topology order.
    pub nodes: Vec<Tier>,
    /// Tier per undirected edge: the lower tier of its endpoints.
    pub links: Vec<Tier>,
}

impl TierAssignment {
    /// Node counts as `[edge, transport, core]`.
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for t in &self.nodes {
            c[tier_rank(*t)] += 1;
        }
        c
    }
}

#[derive(Debug, Error)]
pub enum TierError {
    #[error("node {node} has no {attribute} attribute")]
    MissingAttribute { node: String, attribute: String },
    #[error("node {node} has unknown tier {value:?}")]
    UnknownTier { node: String, value: String },
}

pub(crate) fn tier_rank(t: Tier) -> usize {
    match t {
        Tier::Edge => 0,
        Tier::Transport => 1,
        Tier::Core => 2,
    }
}

pub fn classify_tiers(topo: &RawTopology, method: &TierMethod) -> Result<TierAssignment, TierError> {
    let nodes = match method {
        TierMethod::NaturalBreaks => degree_tiers(&topo.degrees()),
        TierMethod::Attribute { name } => topo
            .nodes
            .iter()
            .map(|n| {
                let value = n
                    .attributes
                    .get(name)
                    .ok_or_else(|| TierError::MissingAttribute { node: n.id.clone(), attribute: name.clone() })?;
                match value.to_ascii_lowercase().as_str() {
                    "edge" => Ok(Tier::Edge),
                    "transport" => Ok(Tier::Transport),
                    "core" => Ok(Tier::Core),
                    _ => Err(TierError::UnknownTier { node: n.id.clone(), value: value.clone() }),
                }
            })
            .collect::<Result<_, _>>()?,
    };
    if !topo.is_connected() {
        log::warn!("topology is not connected; tiers are computed per node regardless");
    }
    let index = topo.node_index();
    let links =
        topo.edges.iter().map(|e| nodes[index[e.source.as_str()]].min(nodes[index[e.target.as_str()]])).collect();
    Ok(TierAssignment { nodes, links })
}

/// Natural-breaks tiers from node degrees. Fewer than three distinct degrees
/// degrade to two classes (edge and core) or a single edge class.
pub fn degree_tiers(degrees: &[usize]) -> Vec<Tier> {
    let mut values: Vec<usize> = degrees.to_vec();
    values.sort_unstable();
    values.dedup();
    let groups: Vec<(f64, f64)> =
        values.iter().map(|&d| (d as f64, degrees.iter().filter(|&&x| x == d).count() as f64)).collect();
    let labels: Vec<Tier> = match groups.len() {
        0 => Vec::new(),
        1 => {
            log::warn!("all nodes share one degree; every node is classified as edge");
            vec![Tier::Edge]
        }
        2 => {
            log::warn!("only two distinct degrees; classifying into edge and core");
            vec![Tier::Edge, Tier::Core]
        }
        _ => {
            let classes = natural_breaks(&groups, 3);
            let tiers = [Tier::Edge, Tier::Transport, Tier::Core];
            classes.iter().map(|&c| tiers[c]).collect()
        }
    };
    degrees.iter().map(|d| labels[values.binary_search(d).expect("degree present")]).collect()
}

/// Optimal partition of weighted sorted `(value, weight)` groups into `k`
/// contiguous classes minimizing the within-class sum of squared deviations.
/// Returns the class of every group.
pub fn natural_breaks(groups: &[(f64, f64)], k: usize) -> Vec<usize> {
    let n = groups.len();
    let k = k.min(n).max(1);
    // Prefix sums for O(1) class cost.
    let mut w = vec![0.0; n + 1];
    let mut s = vec![0.0; n + 1];
    let mut q = vec![0.0; n + 1];
    for (i, &(x, c)) in groups.iter().enumerate() {
        w[i + 1] = w[i] + c;
        s[i + 1] = s[i] + c * x;
        q[i + 1] = q[i] + c * x * x;
    }
    let ssd = |a: usize, b: usize| {
        let (wt, sm) = (w[b] - w[a], s[b] - s[a]);
        (q[b] - q[a]) - sm * sm / wt
    };
    // best[c][j]: cost of splitting the first j groups into c + 1 classes.
    let mut best = vec![vec![f64::INFINITY; n + 1]; k];
    let mut start = vec![vec![0usize; n + 1]; k];
    for (j, b) in best[0].iter_mut().enumerate().skip(1) {
        *b = ssd(0, j);
    }
    for c in 1..k {
        for j in c + 1..=n {
            for i in c..j {
                let cost = best[c - 1][i] + ssd(i, j);
                // Later breaks win ties, leaving boundary groups in the lower class.
                if cost <= best[c][j] + 1e-12 * (1.0 + cost.abs()) {
                    best[c][j] = cost;
                    start[c][j] = i;
                }
            }
        }
    }
    let mut classes = vec![0; n];
    let mut j = n;
    for c in (0..k).rev() {
        let i = if c == 0 { 0 } else { start[c][j] };
        for slot in &mut classes[i..j] {
            *slot = c;
        }
        j = i;
    }
    classes
}
