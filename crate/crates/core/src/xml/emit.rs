use std::collections::HashMap;
use std::fmt::Write;

use super::XmlError;
use crate::ir::{lower, validate, Element, ProcessModel};

pub const BPMN_MODEL_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";
pub const TARGET_NAMESPACE: &str = "http://bpmn.io/schema/bpmn";
pub const EXPORTER: &str = "bpmn-assist";

/// Escapes an attribute value. Line breaks and tabs become character
/// references so they survive attribute value normalization.
pub fn escape_attr(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

fn element_name(element: &Element) -> Option<&str> {
    match element {
        Element::Task { label, .. } => Some(label),
        Element::Event { label, .. } | Element::ExclusiveGateway { label, .. } => label.as_deref(),
        Element::ParallelGateway { .. } => None,
    }
}

/// Compiles a valid model to BPMN 2.0 XML without diagram interchange.
pub fn to_bpmn_xml(model: &ProcessModel) -> Result<String, XmlError> {
    let report = validate(model);
    if !report.ok {
        return Err(XmlError::InvalidModel(report));
    }
    let names: HashMap<&str, Option<&str>> = model.walk().map(|e| (e.id(), element_name(e))).collect();
    let graph = lower(model);

    let mut xml = String::new();
    xml.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        xml,
        "<bpmn:definitions xmlns:bpmn=\"{BPMN_MODEL_NS}\" id=\"Definitions_1\" targetNamespace=\"{TARGET_NAMESPACE}\" exporter=\"{EXPORTER}\" exporterVersion=\"{}\">",
        env!("CARGO_PKG_VERSION")
    );
    xml.push_str("  <bpmn:process id=\"Process_1\" isExecutable=\"true\">\n");
    for node in &graph.nodes {
        let _ = write!(xml, "    <bpmn:{} id=\"{}\"", node.kind, escape_attr(&node.id));
        if let Some(name) = names.get(node.id.as_str()).copied().flatten() {
            let _ = write!(xml, " name=\"{}\"", escape_attr(name));
        }
        let incoming: Vec<&str> = graph.incoming(&node.id).map(|e| e.id.as_str()).collect();
        let outgoing: Vec<&str> = graph.outgoing(&node.id).map(|e| e.id.as_str()).collect();
        if incoming.is_empty() && outgoing.is_empty() {
            xml.push_str(" />\n");
            continue;
        }
        xml.push_str(">\n");
        for id in incoming {
            let _ = writeln!(xml, "      <bpmn:incoming>{id}</bpmn:incoming>");
        }
        for id in outgoing {
            let _ = writeln!(xml, "      <bpmn:outgoing>{id}</bpmn:outgoing>");
        }
        let _ = writeln!(xml, "    </bpmn:{}>", node.kind);
    }
    for edge in &graph.edges {
        let _ = write!(xml, "    <bpmn:sequenceFlow id=\"{}\"", edge.id);
        if let Some(label) = &edge.label {
            let _ = write!(xml, " name=\"{}\"", escape_attr(label));
        }
        let _ = writeln!(
            xml,
            " sourceRef=\"{}\" targetRef=\"{}\" />",
            escape_attr(&edge.source),
            escape_attr(&edge.target)
        );
    }
    xml.push_str("  </bpmn:process>\n");
    xml.push_str("</bpmn:definitions>\n");
    Ok(xml)
}
