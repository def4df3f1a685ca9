//! Flattening of the block-structured IR into flow nodes and sequence flows.

use crate::graph::{FlowEdge, FlowGraph, FlowNode};

use super::{Element, ProcessModel};

pub const JOIN_SUFFIX: &str = "-join";

/// Id of the join synthesized for the gateway `split_id`.
pub fn join_id(split_id: &str) -> String {
    format!("{split_id}{JOIN_SUFFIX}")
}

/// Lowers a model to its flow graph.
///
/// Nodes appear in depth-first document order with each synthesized join
/// placed after its branches; flows are numbered `Flow_<n>` in emission
/// order. Total over invalid models: dangling exits simply produce no flow.
pub fn lower(model: &ProcessModel) -> FlowGraph {
    let mut lowerer = Lowerer::default();
    lowerer.sequence(&model.process, None);
    lowerer.graph
}

#[derive(Default)]
struct Lowerer {
    graph: FlowGraph,
}

impl Lowerer {
    fn node(&mut self, id: &str, kind: &str, label: &str) {
        self.graph.nodes.push(FlowNode::new(id, kind, label));
    }

    fn flow(&mut self, source: &str, target: &str, label: Option<&str>) {
        let id = format!("Flow_{}", self.graph.edges.len() + 1);
        self.graph.edges.push(FlowEdge {
            id,
            source: source.to_string(),
            target: target.to_string(),
            label: label.map(str::to_string),
        });
    }

    /// Lowers `seq`; the last element's exit flows into `continuation`.
    fn sequence(&mut self, seq: &[Element], continuation: Option<&str>) {
        let mut pending: Option<String> = None;
        for element in seq {
            if let Some(exit) = pending.take() {
                self.flow(&exit, element.id(), None);
            }
            pending = self.element(element);
        }
        if let (Some(exit), Some(target)) = (pending, continuation) {
            self.flow(&exit, target, None);
        }
    }

    /// Emits `element` and returns the node its successor should be wired from.
    fn element(&mut self, element: &Element) -> Option<String> {
        self.node(element.id(), element.type_name(), element.label());
        match element {
            Element::Task { id, .. } => Some(id.clone()),
            Element::Event { id, .. } => (!element.is_end()).then(|| id.clone()),
            Element::ExclusiveGateway {
                id,
                has_join,
                branches,
                ..
            } => {
                let join = has_join.then(|| join_id(id));
                for branch in branches {
                    let target = branch.next.clone().or_else(|| join.clone());
                    match branch.path.first() {
                        Some(first) => {
                            self.flow(id, first.id(), Some(&branch.condition));
                            self.sequence(&branch.path, target.as_deref());
                        }
                        None => {
                            if let Some(target) = target {
                                self.flow(id, &target, Some(&branch.condition));
                            }
                        }
                    }
                }
                if let Some(join) = &join {
                    self.node(join, "exclusiveGateway", "");
                }
                join
            }
            Element::ParallelGateway { id, branches } => {
                let join = join_id(id);
                for branch in branches {
                    match branch.first() {
                        Some(first) => {
                            self.flow(id, first.id(), None);
                            self.sequence(branch, Some(&join));
                        }
                        None => self.flow(id, &join, None),
                    }
                }
                self.node(&join, "parallelGateway", "");
                Some(join)
            }
        }
    }
}
