//! Problem entities: the substrate network, applications with alternative
//! virtual topologies, efficiency coefficients, requests and integral
//! embeddings.
//!
//! The serializable types use opaque string identifiers. [`Problem`] resolves
//! them once into dense indices that every solver works with.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Datacenter tier label used by the experiment harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Edge,
    Transport,
    Core,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Edge => "edge",
            Tier::Transport => "transport",
            Tier::Core => "core",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstrateNode {
    pub id: String,
    /// Cost per unit of induced compute load.
    pub cost: f64,
    /// Compute units available.
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstrateArc {
    pub src: String,
    pub dst: String,
    /// Cost per unit of induced bandwidth load.
    pub cost: f64,
    /// Bandwidth units available.
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
}

/// Wire form of a substrate. `links` are undirected and expand into two
/// opposing arcs that each carry the full capacity and cost.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct SubstrateParts {
    #[serde(default)]
    nodes: Vec<SubstrateNode>,
    #[serde(default)]
    arcs: Vec<SubstrateArc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    links: Vec<SubstrateArc>,
}

/// Directed capacitated substrate graph.
///
/// Construction never fails; structural problems are reported by
/// [`SubstrateNetwork::validate`]. Dangling arcs are left out of the
/// adjacency lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "SubstrateParts", into = "SubstrateParts")]
pub struct SubstrateNetwork {
    nodes: Vec<SubstrateNode>,
    arcs: Vec<SubstrateArc>,
    index: BTreeMap<String, usize>,
    ends: Vec<Option<(usize, usize)>>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl From<SubstrateParts> for SubstrateNetwork {
    fn from(parts: SubstrateParts) -> Self {
        SubstrateNetwork::with_links(parts.nodes, parts.arcs, parts.links)
    }
}

impl From<SubstrateNetwork> for SubstrateParts {
    fn from(net: SubstrateNetwork) -> Self {
        SubstrateParts { nodes: net.nodes, arcs: net.arcs, links: Vec::new() }
    }
}

impl SubstrateNetwork {
    pub fn new(nodes: Vec<SubstrateNode>, arcs: Vec<SubstrateArc>) -> Self {
        let mut index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            index.entry(n.id.clone()).or_insert(i);
        }
        let mut out = vec![Vec::new(); nodes.len()];
        let mut inc = vec![Vec::new(); nodes.len()];
        let ends = arcs
            .iter()
            .enumerate()
            .map(|(a, arc)| {
                let s = *index.get(&arc.src)?;
                let d = *index.get(&arc.dst)?;
                out[s].push(a);
                inc[d].push(a);
                Some((s, d))
            })
            .collect();
        SubstrateNetwork { nodes, arcs, index, ends, out, inc }
    }

    /// Builds a network from directed arcs plus undirected links, each link
    /// becoming the arc pair `src -> dst`, `dst -> src`.
    pub fn with_links(nodes: Vec<SubstrateNode>, mut arcs: Vec<SubstrateArc>, links: Vec<SubstrateArc>) -> Self {
        for link in links {
            let back = SubstrateArc {
                src: link.dst.clone(),
                dst: link.src.clone(),
                cost: link.cost,
                capacity: link.capacity,
                tier: link.tier,
            };
            arcs.push(link);
            arcs.push(back);
        }
        Self::new(nodes, arcs)
    }

    pub fn nodes(&self) -> &[SubstrateNode] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[SubstrateArc] {
        &self.arcs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn node(&self, v: usize) -> &SubstrateNode {
        &self.nodes[v]
    }

    pub fn arc(&self, a: usize) -> &SubstrateArc {
        &self.arcs[a]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Endpoints of arc `a` as node indices.
    ///
    /// Panics on a dangling arc; callers work on validated networks.
    pub fn arc_ends(&self, a: usize) -> (usize, usize) {
        self.ends[a].expect("dangling arc in a validated substrate")
    }

    pub fn out_arcs(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn in_arcs(&self, v: usize) -> &[usize] {
        &self.inc[v]
    }

    pub fn arc_between(&self, v: usize, w: usize) -> Option<usize> {
        self.out[v].iter().copied().find(|&a| self.ends[a] == Some((v, w)))
    }

    /// Returns a copy with node and arc capacities replaced.
    pub fn with_capacities(&self, node_caps: &[f64], arc_caps: &[f64]) -> Self {
        let mut net = self.clone();
        for (n, &c) in net.nodes.iter_mut().zip(node_caps) {
            n.capacity = c;
        }
        for (a, &c) in net.arcs.iter_mut().zip(arc_caps) {
            a.capacity = c;
        }
        net
    }

    pub fn validate(&self) -> Vec<SubstrateViolation> {
        validate_substrate(self)
    }
}

/// A substrate element named in a violation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Element {
    Node(String),
    Arc { src: String, dst: String },
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Node(id) => write!(f, "node {id}"),
            Element::Arc { src, dst } => write!(f, "arc {src}->{dst}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SubstrateViolation {
    DuplicateNode { node: String },
    DanglingArc { src: String, dst: String, missing: String },
    SelfLoop { node: String },
    ParallelArc { src: String, dst: String },
    NegativeCost { element: Element, cost: f64 },
    NegativeCapacity { element: Element, capacity: f64 },
}

impl fmt::Display for SubstrateViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateNode { node } => write!(f, "duplicate node id {node}"),
            Self::DanglingArc { src, dst, missing } => {
                write!(f, "arc {src}->{dst} references unknown node {missing}")
            }
            Self::SelfLoop { node } => write!(f, "self-loop arc at {node}"),
            Self::ParallelArc { src, dst } => write!(f, "more than one arc {src}->{dst}"),
            Self::NegativeCost { element, cost } => write!(f, "{element} has cost {cost}"),
            Self::NegativeCapacity { element, capacity } => {
                write!(f, "{element} has capacity {capacity}")
            }
        }
    }
}

fn nonnegative(x: f64) -> bool {
    x >= 0.0 && x.is_finite()
}

pub fn validate_substrate(net: &SubstrateNetwork) -> Vec<SubstrateViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeMap::new();
    for n in &net.nodes {
        if seen.insert(n.id.as_str(), ()).is_some() {
            out.push(SubstrateViolation::DuplicateNode { node: n.id.clone() });
        }
        let element = Element::Node(n.id.clone());
        if !nonnegative(n.cost) {
            out.push(SubstrateViolation::NegativeCost { element: element.clone(), cost: n.cost });
        }
        if !nonnegative(n.capacity) {
            out.push(SubstrateViolation::NegativeCapacity { element, capacity: n.capacity });
        }
    }
    let mut pairs = BTreeMap::new();
    for (a, arc) in net.arcs.iter().enumerate() {
        for end in [&arc.src, &arc.dst] {
            if !net.index.contains_key(end) {
                out.push(SubstrateViolation::DanglingArc {
                    src: arc.src.clone(),
                    dst: arc.dst.clone(),
                    missing: end.clone(),
                });
            }
        }
        if arc.src == arc.dst {
            out.push(SubstrateViolation::SelfLoop { node: arc.src.clone() });
        }
        if net.ends[a].is_some() && pairs.insert((arc.src.as_str(), arc.dst.as_str()), ()).is_some() {
            out.push(SubstrateViolation::ParallelArc { src: arc.src.clone(), dst: arc.dst.clone() });
        }
        let element = Element::Arc { src: arc.src.clone(), dst: arc.dst.clone() };
        if !nonnegative(arc.cost) {
            out.push(SubstrateViolation::NegativeCost { element: element.clone(), cost: arc.cost });
        }
        if !nonnegative(arc.capacity) {
            out.push(SubstrateViolation::NegativeCapacity { element, capacity: arc.capacity });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualNode {
    pub id: String,
    /// Compute units per unit of demand.
    pub size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualLink {
    pub parent: String,
    pub child: String,
    /// Bandwidth units per unit of demand.
    pub size: f64,
}

/// One member of an application's set of functionally equivalent virtual
/// topologies: a tree rooted at a zero-size anchor node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternativeTopology {
    pub name: String,
    pub root: String,
    pub nodes: Vec<VirtualNode>,
    #[serde(default)]
    pub links: Vec<VirtualLink>,
}

impl AlternativeTopology {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn link_index(&self, parent: &str, child: &str) -> Option<usize> {
        self.links.iter().position(|l| l.parent == parent && l.child == child)
    }

    /// Number of virtual elements (nodes plus links).
    pub fn element_count(&self) -> usize {
        self.nodes.len() + self.links.len()
    }

    /// Link indices ordered so that every link's parent is the root or the
    /// child of an earlier link.
    pub fn link_preorder(&self) -> Result<Vec<usize>, ModelError> {
        let shape =
            tree_shape(self).map_err(|reason| ModelError::NotATree { alternative: self.name.clone(), reason })?;
        Ok(shape.preorder)
    }
}

/// Free-function form of [`AlternativeTopology::link_preorder`].
pub fn link_preorder(alt: &AlternativeTopology) -> Result<Vec<usize>, ModelError> {
    alt.link_preorder()
}

struct TreeShape {
    root: usize,
    /// (parent, child) node indices per link.
    ends: Vec<(usize, usize)>,
    preorder: Vec<usize>,
    children: Vec<Vec<usize>>,
}

fn tree_shape(alt: &AlternativeTopology) -> Result<TreeShape, String> {
    use alloc::format;
    let root = alt.node_index(&alt.root).ok_or_else(|| format!("root {} is not a node", alt.root))?;
    let mut ends = Vec::with_capacity(alt.links.len());
    let mut parent_of: Vec<Option<usize>> = vec![None; alt.nodes.len()];
    let mut children = vec![Vec::new(); alt.nodes.len()];
    for (l, link) in alt.links.iter().enumerate() {
        let p = alt.node_index(&link.parent).ok_or_else(|| format!("link parent {} is not a node", link.parent))?;
        let c = alt.node_index(&link.child).ok_or_else(|| format!("link child {} is not a node", link.child))?;
        if c == root {
            return Err(format!("root {} has a parent", alt.root));
        }
        if parent_of[c].replace(p).is_some() {
            return Err(format!("node {} has more than one parent", link.child));
        }
        ends.push((p, c));
        children[p].push(l);
    }
    let mut preorder = Vec::with_capacity(alt.links.len());
    let mut seen = vec![false; alt.nodes.len()];
    seen[root] = true;
    let mut stack: Vec<usize> = children[root].iter().rev().copied().collect();
    while let Some(l) = stack.pop() {
        let c = ends[l].1;
        if seen[c] {
            return Err(format!("cycle through {}", alt.nodes[c].id));
        }
        seen[c] = true;
        preorder.push(l);
        stack.extend(children[c].iter().rev().copied());
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(format!("node {} is not reachable from the root", alt.nodes[v].id));
    }
    Ok(TreeShape { root, ends, preorder, children })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Application {
    pub id: String,
    /// The first alternative is the main one.
    pub alternatives: Vec<AlternativeTopology>,
}

impl Application {
    pub fn alternative_index(&self, name: &str) -> Option<usize> {
        self.alternatives.iter().position(|a| a.name == name)
    }

    pub fn validate(&self) -> Vec<ApplicationViolation> {
        validate_application(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ApplicationViolation {
    NoAlternatives { app: String },
    DuplicateAlternative { app: String, alternative: String },
    DuplicateVirtualNode { app: String, alternative: String, node: String },
    DuplicateVirtualLink { app: String, alternative: String, parent: String, child: String },
    NotATree { app: String, alternative: String, reason: String },
    RootSizeNonzero { app: String, alternative: String, size: f64 },
    NegativeSize { app: String, alternative: String, element: String, size: f64 },
}

impl fmt::Display for ApplicationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoAlternatives { app } => write!(f, "application {app} has no alternatives"),
            Self::DuplicateAlternative { app, alternative } => {
                write!(f, "application {app} repeats alternative {alternative}")
            }
            Self::DuplicateVirtualNode { app, alternative, node } => {
                write!(f, "{app}/{alternative}: duplicate virtual node {node}")
            }
            Self::DuplicateVirtualLink { app, alternative, parent, child } => {
                write!(f, "{app}/{alternative}: duplicate virtual link {parent}->{child}")
            }
            Self::NotATree { app, alternative, reason } => {
                write!(f, "{app}/{alternative} is not a rooted tree: {reason}")
            }
            Self::RootSizeNonzero { app, alternative, size } => {
                write!(f, "{app}/{alternative}: root size is {size}, must be 0")
            }
            Self::NegativeSize { app, alternative, element, size } => {
                write!(f, "{app}/{alternative}: {element} has size {size}")
            }
        }
    }
}

pub fn validate_application(app: &Application) -> Vec<ApplicationViolation> {
    use alloc::format;
    let mut out = Vec::new();
    if app.alternatives.is_empty() {
        out.push(ApplicationViolation::NoAlternatives { app: app.id.clone() });
    }
    let mut names = BTreeMap::new();
    for alt in &app.alternatives {
        let (a, t) = (app.id.clone(), alt.name.clone());
        if names.insert(alt.name.as_str(), ()).is_some() {
            out.push(ApplicationViolation::DuplicateAlternative { app: a.clone(), alternative: t.clone() });
        }
        let mut ids = BTreeMap::new();
        for n in &alt.nodes {
            if ids.insert(n.id.as_str(), ()).is_some() {
                out.push(ApplicationViolation::DuplicateVirtualNode {
                    app: a.clone(),
                    alternative: t.clone(),
                    node: n.id.clone(),
                });
            }
            if !nonnegative(n.size) {
                out.push(ApplicationViolation::NegativeSize {
                    app: a.clone(),
                    alternative: t.clone(),
                    element: n.id.clone(),
                    size: n.size,
                });
            }
        }
        let mut pairs = BTreeMap::new();
        for l in &alt.links {
            if pairs.insert((l.parent.as_str(), l.child.as_str()), ()).is_some() {
                out.push(ApplicationViolation::DuplicateVirtualLink {
                    app: a.clone(),
                    alternative: t.clone(),
                    parent: l.parent.clone(),
                    child: l.child.clone(),
                });
            }
            if !nonnegative(l.size) {
                out.push(ApplicationViolation::NegativeSize {
                    app: a.clone(),
                    alternative: t.clone(),
                    element: format!("{}->{}", l.parent, l.child),
                    size: l.size,
                });
            }
        }
        if let Err(reason) = tree_shape(alt) {
            out.push(ApplicationViolation::NotATree { app: a.clone(), alternative: t.clone(), reason });
        }
        if let Some(root) = alt.node_index(&alt.root) {
            let size = alt.nodes[root].size;
            if size != 0.0 {
                out.push(ApplicationViolation::RootSizeNonzero { app: a, alternative: t, size });
            }
        }
    }
    out
}

/// Application catalog.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub applications: Vec<Application>,
}

impl Catalog {
    pub fn new(applications: Vec<Application>) -> Self {
        Catalog { applications }
    }

    pub fn app_index(&self, id: &str) -> Option<usize> {
        self.applications.iter().position(|a| a.id == id)
    }
}

/// An (in)efficiency coefficient: a positive multiplier on the induced load,
/// or an outright prohibition of the pairing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EfficiencyRepr", into = "EfficiencyRepr")]
pub enum Efficiency {
    Factor(f64),
    Forbidden,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum EfficiencyRepr {
    Factor(f64),
    Word(String),
}

impl TryFrom<EfficiencyRepr> for Efficiency {
    type Error = String;

    fn try_from(repr: EfficiencyRepr) -> Result<Self, String> {
        match repr {
            EfficiencyRepr::Factor(x) => Ok(Efficiency::Factor(x)),
            EfficiencyRepr::Word(w) if w.eq_ignore_ascii_case("forbidden") => Ok(Efficiency::Forbidden),
            EfficiencyRepr::Word(w) => Err(alloc::format!("expected a number or \"forbidden\", got {w:?}")),
        }
    }
}

impl From<Efficiency> for EfficiencyRepr {
    fn from(e: Efficiency) -> Self {
        match e {
            Efficiency::Factor(x) => EfficiencyRepr::Factor(x),
            Efficiency::Forbidden => EfficiencyRepr::Word("forbidden".into()),
        }
    }
}

/// Coefficient for serving virtual node `vnode` of `app` on substrate node
/// `snode`. `alternative: None` applies to every alternative containing
/// `vnode`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeEfficiency {
    pub app: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative: Option<String>,
    pub vnode: String,
    pub snode: String,
    pub value: Efficiency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkEfficiency {
    pub app: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative: Option<String>,
    pub parent: String,
    pub child: String,
    pub src: String,
    pub dst: String,
    pub value: Efficiency,
}

/// Sparse efficiency table; unspecified pairs default to 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyMap {
    #[serde(default)]
    pub nodes: Vec<NodeEfficiency>,
    #[serde(default)]
    pub links: Vec<LinkEfficiency>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub origin: String,
    pub app: String,
    pub demand: f64,
}

/// A request with its identifiers resolved against a [`Problem`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRequest {
    pub origin: usize,
    pub app: usize,
    pub demand: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Placement {
    Embedded {
        alternative: usize,
        /// Substrate node per virtual node.
        nodes: Vec<usize>,
        /// Substrate arc path per virtual link; empty when collocated.
        links: Vec<Vec<usize>>,
    },
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralEmbedding {
    /// Index into the request list the embedding was computed for.
    pub request: usize,
    pub placement: Placement,
}

impl IntegralEmbedding {
    pub fn rejected(request: usize) -> Self {
        IntegralEmbedding { request, placement: Placement::Rejected }
    }

    pub fn alternative(&self) -> Option<usize> {
        match self.placement {
            Placement::Embedded { alternative, .. } => Some(alternative),
            Placement::Rejected => None,
        }
    }

    pub fn is_rejected(&self) -> bool {
        matches!(self.placement, Placement::Rejected)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid substrate: {}", join(.0))]
    InvalidSubstrate(Vec<SubstrateViolation>),
    #[error("invalid application: {}", join(.0))]
    InvalidApplication(Vec<ApplicationViolation>),
    #[error("{alternative} is not a rooted tree: {reason}")]
    NotATree { alternative: String, reason: String },
    #[error("duplicate application id {0}")]
    DuplicateApplication(String),
    #[error("unknown substrate node {0}")]
    UnknownNode(String),
    #[error("unknown substrate arc {src}->{dst}")]
    UnknownArc { src: String, dst: String },
    #[error("unknown application {0}")]
    UnknownApplication(String),
    #[error("application {app} has no alternative {alternative}")]
    UnknownAlternative { app: String, alternative: String },
    #[error("application {app} has no virtual element {element}")]
    UnknownVirtualElement { app: String, element: String },
    #[error("efficiency coefficient {value} for {what} must be finite and positive")]
    BadEfficiency { what: String, value: f64 },
    #[error("request {index} has demand {demand}, must be finite and positive")]
    BadDemand { index: usize, demand: f64 },
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    for (k, item) in items.iter().enumerate() {
        if k > 0 {
            s.push_str("; ");
        }
        let _ = write!(s, "{item}");
    }
    s
}

/// An alternative in dense form with its efficiency tables resolved against
/// the substrate.
#[derive(Clone, Debug)]
pub struct ResolvedAlternative {
    pub root: usize,
    pub node_sizes: Vec<f64>,
    /// (parent, child, size) per virtual link.
    pub links: Vec<(usize, usize, f64)>,
    pub preorder: Vec<usize>,
    /// Outgoing link indices per virtual node.
    pub children: Vec<Vec<usize>>,
    node_eff: Vec<Option<f64>>,
    link_eff: Vec<Option<f64>>,
    substrate_nodes: usize,
    substrate_arcs: usize,
}

impl ResolvedAlternative {
    pub fn node_count(&self) -> usize {
        self.node_sizes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn element_count(&self) -> usize {
        self.node_sizes.len() + self.links.len()
    }

    /// δ(i, v); `None` when forbidden.
    pub fn node_efficiency(&self, vnode: usize, snode: usize) -> Option<f64> {
        self.node_eff[vnode * self.substrate_nodes + snode]
    }

    /// δ(ij, arc); `None` when forbidden.
    pub fn link_efficiency(&self, vlink: usize, arc: usize) -> Option<f64> {
        self.link_eff[vlink * self.substrate_arcs + arc]
    }
}

/// A validated problem: substrate, catalog and efficiency coefficients
/// resolved to dense indices.
#[derive(Clone, Debug)]
pub struct Problem {
    net: SubstrateNetwork,
    catalog: Catalog,
    efficiency: EfficiencyMap,
    apps: Vec<Vec<ResolvedAlternative>>,
}

impl Problem {
    pub fn new(net: SubstrateNetwork, catalog: Catalog, efficiency: EfficiencyMap) -> Result<Self, ModelError> {
        let violations = net.validate();
        if !violations.is_empty() {
            return Err(ModelError::InvalidSubstrate(violations));
        }
        let mut ids = BTreeMap::new();
        for app in &catalog.applications {
            if ids.insert(app.id.as_str(), ()).is_some() {
                return Err(ModelError::DuplicateApplication(app.id.clone()));
            }
            let violations = app.validate();
            if !violations.is_empty() {
                return Err(ModelError::InvalidApplication(violations));
            }
        }
        let (nv, na) = (net.node_count(), net.arc_count());
        let mut apps: Vec<Vec<ResolvedAlternative>> = catalog
            .applications
            .iter()
            .map(|app| {
                app.alternatives
                    .iter()
                    .map(|alt| {
                        let shape = tree_shape(alt).expect("validated tree");
                        ResolvedAlternative {
                            root: shape.root,
                            node_sizes: alt.nodes.iter().map(|n| n.size).collect(),
                            links: shape.ends.iter().zip(&alt.links).map(|(&(p, c), l)| (p, c, l.size)).collect(),
                            preorder: shape.preorder,
                            children: shape.children,
                            node_eff: vec![Some(1.0); alt.nodes.len() * nv],
                            link_eff: vec![Some(1.0); alt.links.len() * na],
                            substrate_nodes: nv,
                            substrate_arcs: na,
                        }
                    })
                    .collect()
            })
            .collect();

        for e in &efficiency.nodes {
            let value = check_efficiency(e.value, || alloc::format!("{}:{} on {}", e.app, e.vnode, e.snode))?;
            let a = catalog.app_index(&e.app).ok_or_else(|| ModelError::UnknownApplication(e.app.clone()))?;
            let v = net.node_index(&e.snode).ok_or_else(|| ModelError::UnknownNode(e.snode.clone()))?;
            let app = &catalog.applications[a];
            let mut matched = false;
            for (t, alt) in app.alternatives.iter().enumerate() {
                if !alt_matches(&e.alternative, alt) {
                    continue;
                }
                if let Some(i) = alt.node_index(&e.vnode) {
                    apps[a][t].node_eff[i * nv + v] = value;
                    matched = true;
                }
            }
            if !matched {
                return Err(unknown_target(app, &e.alternative, &e.vnode));
            }
        }
        for e in &efficiency.links {
            let value = check_efficiency(e.value, || {
                alloc::format!("{}:{}->{} on {}->{}", e.app, e.parent, e.child, e.src, e.dst)
            })?;
            let a = catalog.app_index(&e.app).ok_or_else(|| ModelError::UnknownApplication(e.app.clone()))?;
            let s = net.node_index(&e.src).ok_or_else(|| ModelError::UnknownNode(e.src.clone()))?;
            let d = net.node_index(&e.dst).ok_or_else(|| ModelError::UnknownNode(e.dst.clone()))?;
            let arc = net
                .arc_between(s, d)
                .ok_or_else(|| ModelError::UnknownArc { src: e.src.clone(), dst: e.dst.clone() })?;
            let app = &catalog.applications[a];
            let mut matched = false;
            for (t, alt) in app.alternatives.iter().enumerate() {
                if !alt_matches(&e.alternative, alt) {
                    continue;
                }
                if let Some(l) = alt.link_index(&e.parent, &e.child) {
                    apps[a][t].link_eff[l * na + arc] = value;
                    matched = true;
                }
            }
            if !matched {
                let element = alloc::format!("{}->{}", e.parent, e.child);
                return Err(unknown_target(app, &e.alternative, &element));
            }
        }
        Ok(Problem { net, catalog, efficiency, apps })
    }

    pub fn substrate(&self) -> &SubstrateNetwork {
        &self.net
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn efficiency(&self) -> &EfficiencyMap {
        &self.efficiency
    }

    pub fn app_count(&self) -> usize {
        self.apps.len()
    }

    pub fn alternatives(&self, app: usize) -> &[ResolvedAlternative] {
        &self.apps[app]
    }

    pub fn alternative(&self, app: usize, alt: usize) -> &ResolvedAlternative {
        &self.apps[app][alt]
    }

    /// Σ over applications and alternatives of the element count.
    pub fn total_elements(&self) -> usize {
        self.apps.iter().flatten().map(|a| a.element_count()).sum()
    }

    /// Same catalog and efficiency over a substrate with new capacities.
    pub fn with_substrate(&self, net: SubstrateNetwork) -> Result<Self, ModelError> {
        Problem::new(net, self.catalog.clone(), self.efficiency.clone())
    }

    pub fn resolve_requests(&self, requests: &[Request]) -> Result<Vec<ResolvedRequest>, ModelError> {
        requests
            .iter()
            .enumerate()
            .map(|(index, r)| {
                let origin = self.net.node_index(&r.origin).ok_or_else(|| ModelError::UnknownNode(r.origin.clone()))?;
                let app =
                    self.catalog.app_index(&r.app).ok_or_else(|| ModelError::UnknownApplication(r.app.clone()))?;
                if !(r.demand > 0.0 && r.demand.is_finite()) {
                    return Err(ModelError::BadDemand { index, demand: r.demand });
                }
                Ok(ResolvedRequest { origin, app, demand: r.demand })
            })
            .collect()
    }

    /// Inverse of [`Problem::resolve_requests`].
    pub fn describe_request(&self, r: &ResolvedRequest) -> Request {
        Request {
            origin: self.net.node(r.origin).id.clone(),
            app: self.catalog.applications[r.app].id.clone(),
            demand: r.demand,
        }
    }
}

fn alt_matches(filter: &Option<String>, alt: &AlternativeTopology) -> bool {
    filter.as_deref().is_none_or(|name| name == alt.name)
}

fn unknown_target(app: &Application, alternative: &Option<String>, element: &str) -> ModelError {
    match alternative {
        Some(name) if app.alternative_index(name).is_none() => {
            ModelError::UnknownAlternative { app: app.id.clone(), alternative: name.clone() }
        }
        _ => ModelError::UnknownVirtualElement { app: app.id.clone(), element: element.into() },
    }
}

fn check_efficiency(value: Efficiency, what: impl FnOnce() -> String) -> Result<Option<f64>, ModelError> {
    match value {
        Efficiency::Forbidden => Ok(None),
        Efficiency::Factor(x) if x > 0.0 && x.is_finite() => Ok(Some(x)),
        Efficiency::Factor(x) => Err(ModelError::BadEfficiency { what: what(), value: x }),
    }
}
