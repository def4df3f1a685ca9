//! Directed, labeled flow graphs: the common ground between the IR, BPMN XML
//! and the similarity metrics.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlowNode {
    pub id: String,
    /// Local BPMN element name, e.g. `userTask` or `exclusiveGateway`.
    #[serde(rename = "type")]
    pub kind: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlowEdge {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Flow nodes and sequence flows in document order. Parallel edges are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowGraph {
    pub nodes: Vec<FlowNode>,
    pub edges: Vec<FlowEdge>,
}

impl FlowNode {
    pub fn new(id: impl Into<String>, kind: impl Into<String>, label: impl Into<String>) -> Self {
        FlowNode {
            id: id.into(),
            kind: kind.into(),
            label: label.into(),
        }
    }

    pub fn is_gateway(&self) -> bool {
        self.kind.ends_with("Gateway")
    }
}

impl FlowGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&FlowNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn add_node(&mut self, id: &str, kind: &str, label: &str) -> &mut Self {
        self.nodes.push(FlowNode::new(id, kind, label));
        self
    }

    /// Adds an edge with a generated `e<n>` id.
    pub fn add_edge(&mut self, source: &str, target: &str, label: Option<&str>) -> &mut Self {
        let id = format!("e{}", self.edges.len() + 1);
        self.edges.push(FlowEdge {
            id,
            source: source.into(),
            target: target.into(),
            label: label.map(str::to_string),
        });
        self
    }

    pub fn outgoing<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a FlowEdge> + 'a {
        self.edges.iter().filter(move |e| e.source == id)
    }

    pub fn incoming<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a FlowEdge> + 'a {
        self.edges.iter().filter(move |e| e.target == id)
    }

    /// Ids reachable from any node of kind `startEvent`.
    pub fn reachable_from_starts(&self) -> HashSet<&str> {
        let mut adjacency: HashMap<&str, Vec<&str>> = HashMap::new();
        for e in &self.edges {
            adjacency.entry(&e.source).or_default().push(&e.target);
        }
        let mut seen: HashSet<&str> = HashSet::new();
        let mut queue: VecDeque<&str> = self
            .nodes
            .iter()
            .filter(|n| n.kind == "startEvent")
            .map(|n| n.id.as_str())
            .collect();
        while let Some(id) = queue.pop_front() {
            if !seen.insert(id) {
                continue;
            }
            for &next in adjacency.get(id).map(Vec::as_slice).unwrap_or_default() {
                if !seen.contains(next) {
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    /// Gateways that do not split: at least one incoming flow and exactly one
    /// outgoing. Synthesized joins whose other branches all terminate have a
    /// single incoming flow.
    pub fn is_join(&self, node: &FlowNode) -> bool {
        node.is_gateway() && self.incoming(&node.id).count() >= 1 && self.outgoing(&node.id).count() == 1
    }

    /// Contracts every join gateway, wiring each predecessor straight to the
    /// successor. Incoming flow labels are kept.
    pub fn without_joins(&self) -> FlowGraph {
        let joins: HashSet<&str> = self
            .nodes
            .iter()
            .filter(|n| self.is_join(n))
            .map(|n| n.id.as_str())
            .collect();
        if joins.is_empty() {
            return self.clone();
        }
        // Resolve chains of joins to their first non-join successor.
        let resolve = |start: &str| -> Option<String> {
            let mut id = start.to_string();
            for _ in 0..=joins.len() {
                if !joins.contains(id.as_str()) {
                    return Some(id);
                }
                let next = self.outgoing(&id).next()?.target.clone();
                id = next;
            }
            None
        };
        let mut out = FlowGraph {
            nodes: self
                .nodes
                .iter()
                .filter(|n| !joins.contains(n.id.as_str()))
                .cloned()
                .collect(),
            edges: Vec::new(),
        };
        for e in &self.edges {
            if joins.contains(e.source.as_str()) {
                continue;
            }
            if let Some(target) = resolve(&e.target) {
                out.edges.push(FlowEdge {
                    target,
                    ..e.clone()
                });
            }
        }
        out
    }
}
