//! BPMN 2.0 XML: emission from the IR, import to flow graphs, structural
//! checks and reconstruction of the IR from structured diagrams.

mod check;
mod document;
mod emit;
mod reconstruct;

pub use check::{check_document, validate_xml_structure};
pub use document::{BpmnDocument, FlowRecord, NodeRecord, FLOW_NODE_TYPES};
pub use emit::{escape_attr, to_bpmn_xml, BPMN_MODEL_NS, EXPORTER, TARGET_NAMESPACE};
pub use reconstruct::{reconstruct_document, reconstruct_ir, ReconstructError};

use crate::graph::FlowGraph;
use crate::ir::ValidationReport;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum XmlError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("the document contains no process element")]
    NoProcessElement,
    #[error("model is invalid: {}", .0.summary())]
    InvalidModel(ValidationReport),
}

/// Flow graph of the first process in `xml`. Diagram interchange content is
/// ignored.
pub fn import_flow_graph(xml: &str) -> Result<FlowGraph, XmlError> {
    let doc = BpmnDocument::parse(xml)?;
    if !doc.has_process() {
        return Err(XmlError::NoProcessElement);
    }
    Ok(doc.flow_graph())
}

/// `xml` without its `BPMNDiagram` sections.
pub fn strip_di(xml: &str) -> Result<String, XmlError> {
    Ok(BpmnDocument::parse(xml)?.strip_di())
}
