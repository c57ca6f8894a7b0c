//! Request generation and target-utilization calibration.
//!
//! Both work with the main-alternative footprint of an application: its
//! total compute size and total link size per unit of demand, each virtual
//! link counted over a single substrate hop.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::{LogNormal, Normal};
use serde::{Deserialize, Serialize};
use vneap_core::{Application, Catalog, Request, SubstrateNetwork, Tier};

use crate::error::{Error, Result};
use crate::streams::stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SizeDistribution {
    pub mean: f64,
    pub sd: f64,
    /// Draws below the floor are raised to it.
    pub floor: f64,
}

impl Default for SizeDistribution {
    fn default() -> Self {
        SizeDistribution { mean: 10.0, sd: 2.0, floor: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spatial {
    #[default]
    Uniform,
    /// Each edge node, in topology order, gets a log-normal popularity
    /// weight; origins are drawn proportionally.
    LogNormal { mu: f64, sigma: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginCap {
    /// No per-origin limit.
    Off,
    /// Demand at an origin stays within both its node capacity and the
    /// capacity of its outgoing arcs, each measured with the main footprint.
    #[default]
    Local,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestConfig {
    pub count: usize,
    /// Application id; the first catalog entry when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app: Option<String>,
    #[serde(default)]
    pub size: SizeDistribution,
    #[serde(default)]
    pub spatial: Spatial,
    #[serde(default)]
    pub origin_cap: OriginCap,
}

impl RequestConfig {
    pub fn new(count: usize) -> Self {
        RequestConfig {
            count,
            app: None,
            size: SizeDistribution::default(),
            spatial: Spatial::default(),
            origin_cap: OriginCap::default(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let s = &self.size;
        if !(s.sd > 0.0 && s.sd.is_finite() && s.mean.is_finite() && s.floor > 0.0) {
            return Err(Error::Config(format!("size distribution needs sd > 0 and floor > 0, got {s:?}")));
        }
        if let Spatial::LogNormal { mu, sigma } = self.spatial {
            if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
                return Err(Error::Config(format!("log-normal origins need sigma > 0, got {sigma}")));
            }
        }
        Ok(())
    }
}

/// Main-alternative resources per unit of demand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Footprint {
    pub node: f64,
    pub link: f64,
    /// Bandwidth leaving the root.
    pub root_link: f64,
}

pub fn main_footprint(app: &Application) -> Footprint {
    let main = &app.alternatives[0];
    Footprint {
        node: main.nodes.iter().map(|n| n.size).sum(),
        link: main.links.iter().map(|l| l.size).sum(),
        root_link: main.links.iter().filter(|l| l.parent == main.root).map(|l| l.size).sum(),
    }
}

fn application<'a>(catalog: &'a Catalog, id: &str) -> Result<&'a Application> {
    catalog.applications.iter().find(|a| a.id == id).ok_or_else(|| Error::Config(format!("unknown application {id}")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub requests: Vec<Request>,
    /// Requests that could not be placed under the origin cap.
    pub shortfall: usize,
}

pub fn generate_requests(
    net: &SubstrateNetwork,
    catalog: &Catalog,
    config: &RequestConfig,
    seed: u64,
) -> Result<Generated> {
    config.check()?;
    let app = match &config.app {
        Some(id) => application(catalog, id)?,
        None => catalog.applications.first().ok_or_else(|| Error::Config("empty catalog".into()))?,
    };
    let origins: Vec<usize> = (0..net.node_count()).filter(|&v| net.node(v).tier == Some(Tier::Edge)).collect();
    if origins.is_empty() {
        return Err(Error::NoEdgeNodes);
    }
    let mut rng = stream(seed, "requests");
    let mut weights: Vec<f64> = match config.spatial {
        Spatial::Uniform => vec![1.0; origins.len()],
        Spatial::LogNormal { mu, sigma } => {
            let law = LogNormal::new(mu, sigma).map_err(|e| Error::Config(e.to_string()))?;
            origins.iter().map(|_| law.sample(&mut rng)).collect()
        }
    };
    let fp = main_footprint(app);
    let mut headroom: Vec<f64> = origins
        .iter()
        .map(|&v| match config.origin_cap {
            OriginCap::Off => f64::INFINITY,
            OriginCap::Local => {
                let node = if fp.node > 0.0 { net.node(v).capacity / fp.node } else { f64::INFINITY };
                let out: f64 = net.out_arcs(v).iter().map(|&a| net.arc(a).capacity).sum();
                let link = if fp.root_link > 0.0 { out / fp.root_link } else { f64::INFINITY };
                node.min(link)
            }
        })
        .collect();
    let sizes = Normal::new(config.size.mean, config.size.sd).map_err(|e| Error::Config(e.to_string()))?;

    let mut requests = Vec::with_capacity(config.count);
    let mut picker = WeightedIndex::new(&weights).ok();
    while requests.len() < config.count {
        let Some(pick) = &picker else { break };
        let demand = sizes.sample(&mut rng).max(config.size.floor);
        let k = pick.sample(&mut rng);
        if demand <= headroom[k] {
            headroom[k] -= demand;
            requests.push(Request { origin: net.node(origins[k]).id.clone(), app: app.id.clone(), demand });
        } else {
            // The origin is full; later draws go elsewhere.
            weights[k] = 0.0;
            picker = WeightedIndex::new(&weights).ok();
        }
    }
    let shortfall = config.count - requests.len();
    if shortfall > 0 {
        log::warn!("origin capacity caps allow only {} of {} requests", requests.len(), config.count);
    }
    Ok(Generated { requests, shortfall })
}

/// Total main-footprint demand of `requests` as `(node, link)`.
pub fn footprint_demand(catalog: &Catalog, requests: &[Request]) -> Result<(f64, f64)> {
    let mut node = 0.0;
    let mut link = 0.0;
    for r in requests {
        let fp = main_footprint(application(catalog, &r.app)?);
        node += r.demand * fp.node;
        link += r.demand * fp.link;
    }
    Ok((node, link))
}

/// Requested main-footprint resources over total substrate capacity, for
/// nodes and arcs.
pub fn target_utilization(net: &SubstrateNetwork, catalog: &Catalog, requests: &[Request]) -> Result<(f64, f64)> {
    let (node, link) = footprint_demand(catalog, requests)?;
    let node_cap: f64 = net.nodes().iter().map(|n| n.capacity).sum();
    let arc_cap: f64 = net.arcs().iter().map(|a| a.capacity).sum();
    Ok((node / node_cap, link / arc_cap))
}

/// Rescales node and arc capacities so `requests` reach the given target
/// utilizations. Relative capacities within each class are preserved.
pub fn calibrate(
    net: &SubstrateNetwork,
    catalog: &Catalog,
    requests: &[Request],
    node_tu: f64,
    link_tu: f64,
) -> Result<SubstrateNetwork> {
    for (name, tu) in [("node", node_tu), ("link", link_tu)] {
        if !(tu > 0.0 && tu.is_finite()) {
            return Err(Error::Config(format!("{name} target utilization must be positive, got {tu}")));
        }
    }
    let (node, link) = footprint_demand(catalog, requests)?;
    if node <= 0.0 {
        return Err(Error::ZeroDemand);
    }
    let node_cap: f64 = net.nodes().iter().map(|n| n.capacity).sum();
    let arc_cap: f64 = net.arcs().iter().map(|a| a.capacity).sum();
    if node_cap <= 0.0 {
        return Err(Error::Config("substrate has no node capacity to scale".into()));
    }
    let node_scale = node / node_tu / node_cap;
    let arc_scale = if link > 0.0 && arc_cap > 0.0 {
        link / link_tu / arc_cap
    } else {
        log::warn!("no link demand to calibrate against; arc capacities unchanged");
        1.0
    };
    let nodes: Vec<f64> = net.nodes().iter().map(|n| n.capacity * node_scale).collect();
    let arcs: Vec<f64> = net.arcs().iter().map(|a| a.capacity * arc_scale).collect();
    Ok(net.with_capacities(&nodes, &arcs))
}
