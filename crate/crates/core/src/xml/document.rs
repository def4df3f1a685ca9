use std::ops::Range;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::XmlError;
use crate::graph::{FlowEdge, FlowGraph, FlowNode};

/// Local names of BPMN flow nodes recognized on import.
pub const FLOW_NODE_TYPES: &[&str] = &[
    "task",
    "userTask",
    "serviceTask",
    "manualTask",
    "scriptTask",
    "sendTask",
    "receiveTask",
    "businessRuleTask",
    "callActivity",
    "subProcess",
    "transaction",
    "adHocSubProcess",
    "startEvent",
    "endEvent",
    "intermediateCatchEvent",
    "intermediateThrowEvent",
    "boundaryEvent",
    "exclusiveGateway",
    "parallelGateway",
    "inclusiveGateway",
    "eventBasedGateway",
    "complexGateway",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: String,
    pub kind: String,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRecord {
    pub id: String,
    pub source: Option<String>,
    pub target: Option<String>,
    pub name: Option<String>,
}

/// A BPMN XML text plus an index of the flow nodes and sequence flows of its
/// first process.
#[derive(Debug, Clone)]
pub struct BpmnDocument {
    xml: String,
    pub process_id: Option<String>,
    pub process_count: usize,
    pub nodes: Vec<NodeRecord>,
    pub flows: Vec<FlowRecord>,
    /// Every `id` attribute in document order, DI included.
    pub ids: Vec<String>,
    pub has_lanes: bool,
    pub participant_count: usize,
    /// Byte ranges of `BPMNDiagram` elements.
    pub diagram_ranges: Vec<Range<usize>>,
    /// Byte offset of the closing root tag.
    pub root_close: Option<usize>,
}

fn local(name: &[u8]) -> &[u8] {
    match name.iter().rposition(|&b| b == b':') {
        Some(i) => &name[i + 1..],
        None => name,
    }
}

fn attr(e: &BytesStart<'_>, name: &str) -> Result<Option<String>, XmlError> {
    for a in e.attributes() {
        let a = a.map_err(|err| XmlError::MalformedXml(err.to_string()))?;
        if a.key.local_name().as_ref() == name.as_bytes() {
            let value = a
                .unescape_value()
                .map_err(|err| XmlError::MalformedXml(err.to_string()))?;
            return Ok(Some(value.into_owned()));
        }
    }
    Ok(None)
}

fn tag_name(e: &BytesStart<'_>) -> String {
    String::from_utf8_lossy(local(e.name().as_ref())).into_owned()
}

impl BpmnDocument {
    pub fn parse(text: &str) -> Result<Self, XmlError> {
        let mut reader = Reader::from_str(text);
        let mut doc = BpmnDocument {
            xml: text.to_string(),
            process_id: None,
            process_count: 0,
            nodes: Vec::new(),
            flows: Vec::new(),
            ids: Vec::new(),
            has_lanes: false,
            participant_count: 0,
            diagram_ranges: Vec::new(),
            root_close: None,
        };
        let mut depth = 0usize;
        let mut saw_root = false;
        // Depth of the first process element's children while inside it.
        let mut process_children: Option<usize> = None;
        let mut diagram_start: Option<(usize, usize)> = None;

        loop {
            let before = reader.buffer_position() as usize;
            let event = reader.read_event().map_err(|err| {
                XmlError::MalformedXml(format!("{err} at byte {}", reader.error_position()))
            })?;
            match event {
                Event::Start(e) => {
                    if depth == 0 {
                        if saw_root {
                            return Err(XmlError::MalformedXml("multiple root elements".into()));
                        }
                        saw_root = true;
                    }
                    depth += 1;
                    let name = tag_name(&e);
                    doc.open(&e, &name, depth, &mut process_children)?;
                    if name == "BPMNDiagram" && diagram_start.is_none() {
                        diagram_start = Some((before, depth));
                    }
                    if name == "process" && doc.process_count == 1 && process_children.is_none() && doc.nodes.is_empty() && doc.flows.is_empty() {
                        process_children = Some(depth + 1);
                    }
                }
                Event::Empty(e) => {
                    if depth == 0 {
                        if saw_root {
                            return Err(XmlError::MalformedXml("multiple root elements".into()));
                        }
                        saw_root = true;
                    }
                    let name = tag_name(&e);
                    doc.open(&e, &name, depth + 1, &mut process_children)?;
                    if name == "BPMNDiagram" {
                        doc.diagram_ranges.push(before..reader.buffer_position() as usize);
                    }
                }
                Event::End(e) => {
                    let name = String::from_utf8_lossy(local(e.name().as_ref())).into_owned();
                    if let Some((start, d)) = diagram_start {
                        if d == depth && name == "BPMNDiagram" {
                            doc.diagram_ranges.push(start..reader.buffer_position() as usize);
                            diagram_start = None;
                        }
                    }
                    if process_children == Some(depth + 1) && name == "process" {
                        process_children = Some(usize::MAX);
                    }
                    if depth == 1 {
                        doc.root_close = Some(before);
                    }
                    depth = depth.saturating_sub(1);
                }
                Event::Text(t) if depth == 0 => {
                    let raw = t.into_inner();
                    if !raw.iter().all(u8::is_ascii_whitespace) {
                        return Err(XmlError::MalformedXml("text outside the root element".into()));
                    }
                }
                Event::Eof => break,
                _ => {}
            }
        }
        if depth != 0 {
            return Err(XmlError::MalformedXml("unexpected end of document: unclosed elements".into()));
        }
        if !saw_root {
            return Err(XmlError::MalformedXml("no root element".into()));
        }
        Ok(doc)
    }

    fn open(
        &mut self,
        e: &BytesStart<'_>,
        name: &str,
        depth: usize,
        process_children: &mut Option<usize>,
    ) -> Result<(), XmlError> {
        let id = attr(e, "id")?;
        if let Some(id) = &id {
            self.ids.push(id.clone());
        }
        match name {
            "process" => {
                self.process_count += 1;
                if self.process_count == 1 {
                    self.process_id = id.clone();
                }
            }
            "lane" | "laneSet" => self.has_lanes = true,
            "participant" => self.participant_count += 1,
            _ => {}
        }
        if *process_children != Some(depth) {
            return Ok(());
        }
        if name == "sequenceFlow" {
            self.flows.push(FlowRecord {
                id: id.unwrap_or_default(),
                source: attr(e, "sourceRef")?,
                target: attr(e, "targetRef")?,
                name: attr(e, "name")?,
            });
        } else if FLOW_NODE_TYPES.contains(&name) {
            self.nodes.push(NodeRecord {
                id: id.unwrap_or_default(),
                kind: name.to_string(),
                name: attr(e, "name")?,
            });
        }
        Ok(())
    }

    pub fn xml(&self) -> &str {
        &self.xml
    }

    pub fn into_xml(self) -> String {
        self.xml
    }

    pub fn has_process(&self) -> bool {
        self.process_count > 0
    }

    pub fn node(&self, id: &str) -> Option<&NodeRecord> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Flow graph of the first process; DI is ignored.
    pub fn flow_graph(&self) -> FlowGraph {
        FlowGraph {
            nodes: self
                .nodes
                .iter()
                .map(|n| FlowNode::new(&n.id, &n.kind, n.name.clone().unwrap_or_default()))
                .collect(),
            edges: self
                .flows
                .iter()
                .map(|f| FlowEdge {
                    id: f.id.clone(),
                    source: f.source.clone().unwrap_or_default(),
                    target: f.target.clone().unwrap_or_default(),
                    label: f.name.clone(),
                })
                .collect(),
        }
    }

    /// The document with every `BPMNDiagram` element removed, including the
    /// indentation before it and the line break after it.
    pub fn strip_di(&self) -> String {
        let bytes = self.xml.as_bytes();
        let mut out = String::with_capacity(self.xml.len());
        let mut cursor = 0;
        for range in &self.diagram_ranges {
            let mut start = range.start;
            while start > cursor && matches!(bytes[start - 1], b' ' | b'\t') {
                start -= 1;
            }
            if start > cursor && bytes[start - 1] != b'\n' {
                start = range.start;
            }
            let mut end = range.end;
            if bytes.get(end) == Some(&b'\r') {
                end += 1;
            }
            if bytes.get(end) == Some(&b'\n') && (start == 0 || bytes[start - 1] == b'\n') {
                end += 1;
            }
            out.push_str(&self.xml[cursor..start]);
            cursor = end;
        }
        out.push_str(&self.xml[cursor..]);
        out
    }
}
