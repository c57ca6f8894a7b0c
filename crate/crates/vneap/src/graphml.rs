//! GraphML ingestion into a raw undirected topology.
//!
//! `<data>` values are keyed by the `attr.name` of their `<key>` declaration
//! when one exists, otherwise by the raw key id. Parallel edges collapse into
//! one and self-loops are dropped, both with a warning.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawNode {
    pub id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
}

impl RawNode {
    pub fn label(&self) -> Option<&str> {
        self.attributes.get("label").map(String::as_str)
    }

    /// `(longitude, latitude)` when both attributes parse.
    pub fn position(&self) -> Option<(f64, f64)> {
        let lon = self.attributes.get("Longitude")?.trim().parse().ok()?;
        let lat = self.attributes.get("Latitude")?.trim().parse().ok()?;
        Some((lon, lat))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawEdge {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
}

/// Undirected topology exactly as read, before tiers or costs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RawTopology {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nodes: Vec<RawNode>,
    pub edges: Vec<RawEdge>,
}

impl RawTopology {
    pub fn node_index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect()
    }

    /// Neighbour lists by node position.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let index = self.node_index();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            let (a, b) = (index[e.source.as_str()], index[e.target.as_str()]);
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency().iter().map(Vec::len).collect()
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        if adj.is_empty() {
            return true;
        }
        let mut seen = vec![false; adj.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Error)]
pub enum GraphmlError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml { line: u32, column: u32, message: String },
    #[error("invalid GraphML at line {line}, column {column}: {message}")]
    Structure { line: u32, column: u32, message: String },
    #[error("graph has no nodes")]
    Empty,
}

fn structure(doc: &roxmltree::Document, node: roxmltree::Node, message: impl Into<String>) -> GraphmlError {
    let pos = doc.text_pos_at(node.range().start);
    GraphmlError::Structure { line: pos.row, column: pos.col, message: message.into() }
}

pub fn read_graphml(path: &Path) -> Result<RawTopology, GraphmlError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| GraphmlError::Io { path: path.display().to_string(), source })?;
    parse_graphml(&text)
}

pub fn parse_graphml(text: &str) -> Result<RawTopology, GraphmlError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let pos = e.pos();
        GraphmlError::Xml { line: pos.row, column: pos.col, message: e.to_string() }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "graphml" {
        return Err(structure(&doc, root, format!("expected <graphml>, found <{}>", root.tag_name().name())));
    }
    let keys: HashMap<&str, &str> = root
        .children()
        .filter(|n| n.tag_name().name() == "key")
        .filter_map(|k| Some((k.attribute("id")?, k.attribute("attr.name").unwrap_or(k.attribute("id")?))))
        .collect();
    let graph = root
        .children()
        .find(|n| n.tag_name().name() == "graph")
        .ok_or_else(|| structure(&doc, root, "no <graph> element"))?;

    let data = |n: roxmltree::Node| -> BTreeMap<String, String> {
        n.children()
            .filter(|c| c.tag_name().name() == "data")
            .filter_map(|c| {
                let key = c.attribute("key")?;
                let name = keys.get(key).copied().unwrap_or(key);
                Some((name.to_string(), c.text().unwrap_or("").trim().to_string()))
            })
            .collect()
    };

    let mut topo = RawTopology {
        name: data(graph).remove("Network").or_else(|| graph.attribute("id").map(str::to_string)),
        ..RawTopology::default()
    };
    let mut ids = BTreeSet::new();
    for n in graph.children().filter(|n| n.tag_name().name() == "node") {
        let id = n.attribute("id").ok_or_else(|| structure(&doc, n, "node without id"))?;
        if !ids.insert(id.to_string()) {
            return Err(structure(&doc, n, format!("duplicate node id {id:?}")));
        }
        topo.nodes.push(RawNode { id: id.to_string(), attributes: data(n) });
    }
    if topo.nodes.is_empty() {
        return Err(GraphmlError::Empty);
    }

    let mut pairs = BTreeSet::new();
    for e in graph.children().filter(|n| n.tag_name().name() == "edge") {
        let (Some(source), Some(target)) = (e.attribute("source"), e.attribute("target")) else {
            return Err(structure(&doc, e, "edge without source or target"));
        };
        for end in [source, target] {
            if !ids.contains(end) {
                return Err(structure(&doc, e, format!("edge refers to unknown node {end:?}")));
            }
        }
        if source == target {
            log::warn!("dropping self-loop at node {source}");
            continue;
        }
        let key = if source < target { (source, target) } else { (target, source) };
        if !pairs.insert(key) {
            log::warn!("dropping parallel edge {source} - {target}");
            continue;
        }
        topo.edges.push(RawEdge { source: source.to_string(), target: target.to_string(), attributes: data(e) });
    }
    Ok(topo)
}
