//! Process modeling engine: a block-structured process IR with atomic edits,
//! compilation to BPMN 2.0 XML with auto-layout, and graph edit distance
//! metrics for comparing process models.

pub mod edit;
pub mod eval;
pub mod graph;
pub mod ir;
pub mod layout;
pub mod par;
pub mod similarity;
pub mod xml;

pub use edit::{apply_edit_script, EditError, EditOp, EditResult};
pub use graph::{FlowEdge, FlowGraph, FlowNode};
pub use ir::{parse_process, serialize_process, validate, Element, ProcessModel, ValidationReport};
pub use layout::{compute_layout, embed_di, layout_xml, DiagramLayout, LayoutError};
pub use par::ExecMode;
pub use similarity::{ged, rged, similarity, to_flow_graph, CostModel, GedResult};
pub use xml::{import_flow_graph, reconstruct_ir, to_bpmn_xml, validate_xml_structure, BpmnDocument, XmlError};
