//! Recovers the block-structured IR from a BPMN flow graph.
//!
//! The graph is walked depth first from the start event. A gateway with two
//! or more outgoing flows is a split; a gateway with at most one outgoing flow
//! is a join and ends the branch that reaches it. Flows into nodes that were
//! already placed become branch `next` references. The recovered model is
//! lowered again and compared with the input graph, so anything the IR
//! cannot express is reported instead of silently approximated.

use std::collections::{HashMap, HashSet};

use super::{check_document, BpmnDocument, XmlError};
use crate::graph::{FlowEdge, FlowGraph};
use crate::ir::{join_id, lower, validate, Branch, Element, EventKind, ProcessModel, TaskKind, ValidationReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReconstructError {
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("unsupported element type `{0}`")]
    UnsupportedElement(String),
    #[error("diagram is not block-structured: {0}")]
    Unstructured(String),
    #[error("diagram does not form a valid process: {}", .0.summary())]
    Invalid(ValidationReport),
}

pub fn reconstruct_ir(xml: &str) -> Result<ProcessModel, ReconstructError> {
    reconstruct_document(&BpmnDocument::parse(xml)?)
}

pub fn reconstruct_document(doc: &BpmnDocument) -> Result<ProcessModel, ReconstructError> {
    if !doc.has_process() {
        return Err(XmlError::NoProcessElement.into());
    }
    if let Some(node) = doc.nodes.iter().find(|n| kind_of(&n.kind).is_none()) {
        return Err(ReconstructError::UnsupportedElement(node.kind.clone()));
    }
    let report = check_document(doc);
    if !report.ok {
        return Err(ReconstructError::Invalid(report));
    }
    let graph = doc.flow_graph();
    let mut walker = Walker::new(doc, &graph);
    let model = walker.run()?;

    let expected = walker.renamed_graph();
    if !same_graph(&lower(&model), &expected) {
        return Err(unstructured("the flows cannot be expressed as nested branches"));
    }
    let report = validate(&model);
    if !report.ok {
        return Err(ReconstructError::Invalid(report));
    }
    Ok(model)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Task(TaskKind),
    Event(EventKind),
    Exclusive,
    Parallel,
}

fn kind_of(name: &str) -> Option<Kind> {
    Some(match name {
        "task" => Kind::Task(TaskKind::Task),
        "userTask" => Kind::Task(TaskKind::UserTask),
        "serviceTask" => Kind::Task(TaskKind::ServiceTask),
        "startEvent" => Kind::Event(EventKind::Start),
        "endEvent" => Kind::Event(EventKind::End),
        "exclusiveGateway" => Kind::Exclusive,
        "parallelGateway" => Kind::Parallel,
        _ => return None,
    })
}

fn unstructured(message: impl Into<String>) -> ReconstructError {
    ReconstructError::Unstructured(message.into())
}

/// How a sequence stops.
enum Tail {
    /// The last element ends every path (end event or gateway without join).
    Terminated,
    /// Control reaches this join gateway.
    Join(String),
    /// Control jumps to an element placed earlier.
    Jump(String),
    /// The last element has no outgoing flow.
    Dangling,
}

struct Walker<'g> {
    graph: &'g FlowGraph,
    /// Name attributes; the flow graph flattens absent names to "".
    names: HashMap<&'g str, Option<String>>,
    out: HashMap<&'g str, Vec<&'g FlowEdge>>,
    placed: HashSet<String>,
    /// Join node id in the input to the split that claimed it.
    joins: HashMap<String, String>,
}

impl<'g> Walker<'g> {
    fn new(doc: &'g BpmnDocument, graph: &'g FlowGraph) -> Self {
        let mut out: HashMap<&str, Vec<&FlowEdge>> = HashMap::new();
        for e in &graph.edges {
            out.entry(e.source.as_str()).or_default().push(e);
        }
        Walker {
            graph,
            names: doc.nodes.iter().map(|n| (n.id.as_str(), n.name.clone())).collect(),
            out,
            placed: HashSet::new(),
            joins: HashMap::new(),
        }
    }

    fn outgoing(&self, id: &str) -> &[&'g FlowEdge] {
        self.out.get(id).map(Vec::as_slice).unwrap_or_default()
    }

    fn kind(&self, id: &str) -> Kind {
        let node = self.graph.node(id).expect("endpoints were checked");
        kind_of(&node.kind).expect("element types were checked")
    }

    fn is_join(&self, id: &str) -> bool {
        matches!(self.kind(id), Kind::Exclusive | Kind::Parallel) && self.outgoing(id).len() <= 1
    }

    fn run(&mut self) -> Result<ProcessModel, ReconstructError> {
        let starts: Vec<&str> = self
            .graph
            .nodes
            .iter()
            .filter(|n| n.kind == "startEvent")
            .map(|n| n.id.as_str())
            .collect();
        if starts.len() != 1 {
            return Err(unstructured(format!("expected one start event, found {}", starts.len())));
        }
        let (process, tail) = self.sequence(starts[0], true)?;
        match tail {
            Tail::Terminated | Tail::Dangling => {}
            Tail::Join(j) => return Err(unstructured(format!("gateway `{j}` merges flows without a matching split"))),
            Tail::Jump(x) => {
                return Err(unstructured(format!("a flow loops back to `{x}` outside any exclusive branch")))
            }
        }
        Ok(ProcessModel { process })
    }

    /// Walks a sequence starting at `first` until it terminates, jumps or
    /// reaches a join.
    fn sequence(&mut self, first: &str, top_level: bool) -> Result<(Vec<Element>, Tail), ReconstructError> {
        let mut seq = Vec::new();
        let mut current = first.to_string();
        loop {
            if self.is_join(&current) {
                return Ok((seq, Tail::Join(current)));
            }
            if self.placed.contains(&current) {
                return Ok((seq, Tail::Jump(current)));
            }
            self.placed.insert(current.clone());
            let node = self.graph.node(&current).expect("endpoints were checked");
            let name = self.name_of(&current);
            let out = self.outgoing(&current);
            match self.kind(&current) {
                Kind::Event(EventKind::Start) if !(top_level && seq.is_empty()) => {
                    return Err(unstructured(format!("start event `{current}` is the target of a flow")));
                }
                Kind::Event(EventKind::End) => {
                    if !out.is_empty() {
                        return Err(unstructured(format!("end event `{current}` has outgoing flows")));
                    }
                    seq.push(Element::Event {
                        kind: EventKind::End,
                        id: current,
                        label: name,
                    });
                    return Ok((seq, Tail::Terminated));
                }
                Kind::Event(EventKind::Start) | Kind::Task(_) => {
                    let element = match self.kind(&current) {
                        Kind::Task(kind) => Element::Task {
                            kind,
                            id: current.clone(),
                            label: node.label.clone(),
                        },
                        _ => Element::Event {
                            kind: EventKind::Start,
                            id: current.clone(),
                            label: name,
                        },
                    };
                    seq.push(element);
                    match out {
                        [] => return Ok((seq, Tail::Dangling)),
                        [edge] => {
                            if edge.label.is_some() {
                                return Err(unstructured(format!(
                                    "flow `{}` is named but does not leave an exclusive gateway",
                                    edge.id
                                )));
                            }
                            current = edge.target.clone();
                        }
                        _ => {
                            return Err(unstructured(format!(
                                "`{current}` splits the flow without a gateway"
                            )))
                        }
                    }
                }
                kind @ (Kind::Exclusive | Kind::Parallel) => {
                    let (element, after) = self.split(&current, kind == Kind::Parallel, name)?;
                    seq.push(element);
                    match after {
                        None => return Ok((seq, Tail::Terminated)),
                        Some(join) => match self.outgoing(&join) {
                            [] => return Ok((seq, Tail::Dangling)),
                            [edge] => {
                                if edge.label.is_some() {
                                    return Err(unstructured(format!("flow `{}` leaving a join is named", edge.id)));
                                }
                                current = edge.target.clone();
                            }
                            _ => unreachable!("joins have at most one outgoing flow"),
                        },
                    }
                }
            }
        }
    }

    fn name_of(&self, id: &str) -> Option<String> {
        self.names.get(id).cloned().flatten()
    }

    /// Builds the gateway element for split `id` and returns it with the id
    /// of its join, if any.
    fn split(
        &mut self,
        id: &str,
        parallel: bool,
        name: Option<String>,
    ) -> Result<(Element, Option<String>), ReconstructError> {
        let edges: Vec<&FlowEdge> = self.outgoing(id).to_vec();
        let mut join: Option<String> = None;
        let mut exclusive_branches = Vec::new();
        let mut parallel_branches = Vec::new();
        for edge in edges {
            let (path, tail) = self.sequence(&edge.target, false)?;
            let next = match tail {
                Tail::Terminated => None,
                Tail::Join(j) => {
                    match &join {
                        None => join = Some(j),
                        Some(existing) if *existing == j => {}
                        Some(existing) => {
                            return Err(unstructured(format!(
                                "branches of `{id}` merge at both `{existing}` and `{j}`"
                            )))
                        }
                    }
                    None
                }
                Tail::Jump(x) if !parallel => Some(x),
                Tail::Jump(x) => {
                    return Err(unstructured(format!("a branch of parallel gateway `{id}` jumps to `{x}`")))
                }
                Tail::Dangling => {
                    return Err(unstructured(format!("a branch of `{id}` stops without an end event")))
                }
            };
            if parallel {
                if edge.label.is_some() {
                    return Err(unstructured(format!("flow `{}` leaving parallel gateway `{id}` is named", edge.id)));
                }
                parallel_branches.push(path);
            } else {
                let Some(condition) = edge.label.clone().filter(|c| !c.trim().is_empty()) else {
                    return Err(unstructured(format!("flow `{}` leaving `{id}` has no condition", edge.id)));
                };
                exclusive_branches.push(Branch { condition, path, next });
            }
        }

        if let Some(j) = &join {
            if self.kind(j) != self.kind(id) {
                return Err(unstructured(format!("`{id}` and its join `{j}` are different gateway types")));
            }
            if let Some(owner) = self.joins.get(j) {
                return Err(unstructured(format!("`{id}` and `{owner}` share the join `{j}`")));
            }
            if self.name_of(j).is_some() {
                return Err(unstructured(format!("join `{j}` carries a name")));
            }
            self.joins.insert(j.clone(), id.to_string());
            self.placed.insert(j.clone());
        }

        let element = if parallel {
            if join.is_none() {
                return Err(unstructured(format!("parallel gateway `{id}` has no join")));
            }
            if name.is_some() {
                return Err(unstructured(format!("parallel gateway `{id}` carries a name")));
            }
            Element::ParallelGateway {
                id: id.to_string(),
                branches: parallel_branches,
            }
        } else {
            Element::ExclusiveGateway {
                id: id.to_string(),
                label: name,
                has_join: join.is_some(),
                branches: exclusive_branches,
            }
        };
        Ok((element, join))
    }

    /// The input graph with joins renamed to the synthesized convention.
    fn renamed_graph(&self) -> FlowGraph {
        let rename = |id: &str| match self.joins.get(id) {
            Some(split) => join_id(split),
            None => id.to_string(),
        };
        FlowGraph {
            nodes: self
                .graph
                .nodes
                .iter()
                .map(|n| crate::graph::FlowNode {
                    id: rename(&n.id),
                    ..n.clone()
                })
                .collect(),
            edges: self
                .graph
                .edges
                .iter()
                .map(|e| FlowEdge {
                    source: rename(&e.source),
                    target: rename(&e.target),
                    ..e.clone()
                })
                .collect(),
        }
    }
}

/// Equality of node sets and edge multisets, ignoring edge ids and order.
fn same_graph(a: &FlowGraph, b: &FlowGraph) -> bool {
    let mut na: Vec<_> = a.nodes.iter().map(|n| (&n.id, &n.kind, &n.label)).collect();
    let mut nb: Vec<_> = b.nodes.iter().map(|n| (&n.id, &n.kind, &n.label)).collect();
    na.sort();
    nb.sort();
    let mut ea: Vec<_> = a.edges.iter().map(|e| (&e.source, &e.target, &e.label)).collect();
    let mut eb: Vec<_> = b.edges.iter().map(|e| (&e.source, &e.target, &e.label)).collect();
    ea.sort();
    eb.sort();
    na == nb && ea == eb
}
