//! Layered left-to-right auto-layout and BPMN DI embedding.
//!
//! Layers are longest-path distances from the start event once loop edges
//! are removed; rows follow branch order. Forward flows leave a shape on its
//! right side and enter the target on its left, with one vertical jog in the
//! gap before the target column. Loop flows drop out of the bottom of the
//! source into a corridor below every row and climb back into the bottom of
//! the target.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::xml::{check_document, escape_attr, BpmnDocument, XmlError};

pub const TASK_SIZE: (f64, f64) = (100.0, 80.0);
pub const EVENT_SIZE: (f64, f64) = (36.0, 36.0);
pub const GATEWAY_SIZE: (f64, f64) = (50.0, 50.0);
pub const H_PITCH: f64 = 150.0;
pub const V_PITCH: f64 = 110.0;
const ORIGIN: (f64, f64) = (100.0, 100.0);
/// Distance from the lowest shape to the first loop corridor.
const CORRIDOR_GAP: f64 = 30.0;
const CORRIDOR_STEP: f64 = 20.0;

pub const BPMNDI_NS: &str = "http://www.omg.org/spec/BPMN/20100524/DI";
pub const DC_NS: &str = "http://www.omg.org/spec/DD/20100524/DC";
pub const DI_NS: &str = "http://www.omg.org/spec/DD/20100524/DI";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    pub fn center(&self) -> Point {
        Point {
            x: self.x + self.width / 2.0,
            y: self.y + self.height / 2.0,
        }
    }

    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.height
    }

    /// Whether the interiors of the two rectangles intersect.
    pub fn overlaps(&self, other: &Bounds) -> bool {
        self.x < other.right() && other.x < self.right() && self.y < other.bottom() && other.y < self.bottom()
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        const EPS: f64 = 1e-9;
        let within_x = p.x >= self.x - EPS && p.x <= self.right() + EPS;
        let within_y = p.y >= self.y - EPS && p.y <= self.bottom() + EPS;
        let on_vertical = (p.x - self.x).abs() < EPS || (p.x - self.right()).abs() < EPS;
        let on_horizontal = (p.y - self.y).abs() < EPS || (p.y - self.bottom()).abs() < EPS;
        within_x && within_y && (on_vertical || on_horizontal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Shape bounds per flow node and waypoints per sequence flow, both in
/// document order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagramLayout {
    pub shapes: IndexMap<String, Bounds>,
    pub edges: IndexMap<String, Vec<Point>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LayoutError {
    #[error("document cannot be laid out: {0}")]
    InvalidDocument(String),
    #[error("multi-pool and multi-lane diagrams are not supported")]
    PoolsOrLanes,
    #[error("layout does not cover: {}", .0.join(", "))]
    IncompleteLayout(Vec<String>),
    #[error(transparent)]
    Xml(#[from] XmlError),
}

fn size_of(kind: &str) -> (f64, f64) {
    if kind.ends_with("Event") {
        EVENT_SIZE
    } else if kind.ends_with("Gateway") {
        GATEWAY_SIZE
    } else {
        TASK_SIZE
    }
}

pub fn compute_layout(doc: &BpmnDocument) -> Result<DiagramLayout, LayoutError> {
    if doc.process_count > 1 || doc.participant_count > 1 || doc.has_lanes {
        return Err(LayoutError::PoolsOrLanes);
    }
    let report = check_document(doc);
    if !report.ok {
        return Err(LayoutError::InvalidDocument(report.summary()));
    }

    let n = doc.nodes.len();
    let index: HashMap<&str, usize> = doc.nodes.iter().enumerate().map(|(i, node)| (node.id.as_str(), i)).collect();
    let flows: Vec<(usize, usize)> = doc
        .flows
        .iter()
        .map(|f| {
            let end = |r: &Option<String>| index[r.as_deref().expect("endpoints were checked")];
            (end(&f.source), end(&f.target))
        })
        .collect();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (fi, &(s, _)) in flows.iter().enumerate() {
        out[s].push(fi);
    }

    let back = back_edges(doc, &flows, &out);
    let forward: Vec<usize> = (0..flows.len()).filter(|f| !back.contains(f)).collect();

    // Longest-path layering in a deterministic topological order.
    let mut indegree = vec![0usize; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &f in &forward {
        let (s, t) = flows[f];
        indegree[t] += 1;
        preds[t].push(s);
        if !succs[s].contains(&t) {
            succs[s].push(t);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    let mut layer = vec![0usize; n];
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &f in &forward {
            let (s, t) = flows[f];
            if s == v {
                layer[t] = layer[t].max(layer[v] + 1);
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    ready.insert(t);
                }
            }
        }
    }

    let mut row = vec![0usize; n];
    let mut occupied: HashMap<usize, HashSet<usize>> = HashMap::new();
    for &v in &order {
        let desired = match preds[v].as_slice() {
            [] => 0,
            ps if ps.iter().all(|&p| p == ps[0]) => {
                let p = ps[0];
                let offset = succs[p].iter().position(|&t| t == v).unwrap_or(0);
                row[p] + offset
            }
            ps => ps.iter().map(|&p| row[p]).min().unwrap_or(0),
        };
        let taken = occupied.entry(layer[v]).or_default();
        let mut r = desired;
        while taken.contains(&r) {
            r += 1;
        }
        taken.insert(r);
        row[v] = r;
    }

    let mut layout = DiagramLayout::default();
    for (i, node) in doc.nodes.iter().enumerate() {
        let (w, h) = size_of(&node.kind);
        let cx = ORIGIN.0 + layer[i] as f64 * H_PITCH + TASK_SIZE.0 / 2.0;
        let cy = ORIGIN.1 + row[i] as f64 * V_PITCH + TASK_SIZE.1 / 2.0;
        layout.shapes.insert(
            node.id.clone(),
            Bounds {
                x: cx - w / 2.0,
                y: cy - h / 2.0,
                width: w,
                height: h,
            },
        );
    }

    let lowest = layout.shapes.values().map(Bounds::bottom).fold(ORIGIN.1, f64::max);
    let mut corridor = 0usize;
    for (fi, flow) in doc.flows.iter().enumerate() {
        let (s, t) = flows[fi];
        let a = layout.shapes[s];
        let b = layout.shapes[t];
        let (ca, cb) = (a.center(), b.center());
        let points = if back.contains(&fi) {
            let y = lowest + CORRIDOR_GAP + corridor as f64 * CORRIDOR_STEP;
            corridor += 1;
            let (xa, xb) = if s == t {
                (ca.x - a.width / 4.0, cb.x + b.width / 4.0)
            } else {
                (ca.x, cb.x)
            };
            vec![
                Point { x: xa, y: a.bottom() },
                Point { x: xa, y },
                Point { x: xb, y },
                Point { x: xb, y: b.bottom() },
            ]
        } else if (ca.y - cb.y).abs() < f64::EPSILON {
            vec![Point { x: a.right(), y: ca.y }, Point { x: b.x, y: cb.y }]
        } else {
            let jog = cb.x - H_PITCH / 2.0;
            vec![
                Point { x: a.right(), y: ca.y },
                Point { x: jog, y: ca.y },
                Point { x: jog, y: cb.y },
                Point { x: b.x, y: cb.y },
            ]
        };
        layout.edges.insert(flow.id.clone(), points);
    }
    Ok(layout)
}

/// Flows closing a cycle, found by depth-first search from the start events
/// in document order.
fn back_edges(doc: &BpmnDocument, flows: &[(usize, usize)], out: &[Vec<usize>]) -> HashSet<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        New,
        Active,
        Done,
    }
    let n = doc.nodes.len();
    let mut state = vec![State::New; n];
    let mut back = HashSet::new();
    let roots = doc
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, node)| node.kind == "startEvent")
        .map(|(i, _)| i)
        .chain(0..n);
    for root in roots {
        if state[root] != State::New {
            continue;
        }
        // (node, index of the next outgoing flow to explore)
        let mut stack = vec![(root, 0usize)];
        state[root] = State::Active;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&f) = out[v].get(*next) {
                *next += 1;
                let t = flows[f].1;
                match state[t] {
                    State::New => {
                        state[t] = State::Active;
                        stack.push((t, 0));
                    }
                    State::Active => {
                        back.insert(f);
                    }
                    State::Done => {}
                }
            } else {
                state[v] = State::Done;
                stack.pop();
            }
        }
    }
    back
}

/// Appends a `BPMNDiagram` built from `layout` to `xml`. Any existing diagram
/// is replaced; everything else is kept byte for byte.
pub fn embed_di(xml: &str, layout: &DiagramLayout) -> Result<String, LayoutError> {
    let original = BpmnDocument::parse(xml)?;
    let doc = if original.diagram_ranges.is_empty() {
        original
    } else {
        BpmnDocument::parse(&original.strip_di())?
    };
    let missing: Vec<String> = doc
        .nodes
        .iter()
        .map(|n| &n.id)
        .filter(|id| !layout.shapes.contains_key(*id))
        .chain(doc.flows.iter().map(|f| &f.id).filter(|id| !layout.edges.contains_key(*id)))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(LayoutError::IncompleteLayout(missing));
    }
    let close = doc
        .root_close
        .ok_or_else(|| LayoutError::InvalidDocument("the root element has no closing tag".into()))?;

    let mut taken: HashSet<String> = doc.ids.iter().cloned().collect();
    let mut fresh = |base: String| {
        let mut id = base.clone();
        let mut k = 1;
        while taken.contains(&id) {
            k += 1;
            id = format!("{base}_{k}");
        }
        taken.insert(id.clone());
        id
    };

    let text = doc.xml();
    let line_start = text[..close].rfind('\n').map_or(0, |i| i + 1);
    let own_line = text[line_start..close].trim().is_empty();
    let (indent, nl) = if own_line { ("  ", "\n") } else { ("", "") };
    let inner = if own_line { "\n" } else { "" };
    let pad = |depth: usize| if own_line { "  ".repeat(depth + 1) } else { String::new() };

    let mut di = String::new();
    let _ = write!(
        di,
        "{indent}<bpmndi:BPMNDiagram id=\"{}\" xmlns:bpmndi=\"{BPMNDI_NS}\" xmlns:dc=\"{DC_NS}\" xmlns:di=\"{DI_NS}\">{inner}",
        fresh("BPMNDiagram_1".into())
    );
    let _ = write!(di, "{}<bpmndi:BPMNPlane id=\"{}\"", pad(1), fresh("BPMNPlane_1".into()));
    if let Some(process) = &doc.process_id {
        let _ = write!(di, " bpmnElement=\"{}\"", escape_attr(process));
    }
    let _ = write!(di, ">{inner}");
    for node in &doc.nodes {
        let b = layout.shapes[&node.id];
        let _ = write!(
            di,
            "{}<bpmndi:BPMNShape id=\"{}\" bpmnElement=\"{}\"{}>{inner}",
            pad(2),
            escape_attr(&fresh(format!("{}_di", node.id))),
            escape_attr(&node.id),
            if node.kind == "exclusiveGateway" { " isMarkerVisible=\"true\"" } else { "" }
        );
        let _ = write!(
            di,
            "{}<dc:Bounds x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" />{inner}",
            pad(3),
            b.x,
            b.y,
            b.width,
            b.height
        );
        let _ = write!(di, "{}</bpmndi:BPMNShape>{inner}", pad(2));
    }
    for flow in &doc.flows {
        let _ = write!(
            di,
            "{}<bpmndi:BPMNEdge id=\"{}\" bpmnElement=\"{}\">{inner}",
            pad(2),
            escape_attr(&fresh(format!("{}_di", flow.id))),
            escape_attr(&flow.id)
        );
        for p in &layout.edges[&flow.id] {
            let _ = write!(di, "{}<di:waypoint x=\"{}\" y=\"{}\" />{inner}", pad(3), p.x, p.y);
        }
        let _ = write!(di, "{}</bpmndi:BPMNEdge>{inner}", pad(2));
    }
    let _ = write!(di, "{}</bpmndi:BPMNPlane>{inner}", pad(1));
    let _ = write!(di, "{indent}</bpmndi:BPMNDiagram>{nl}");

    let at = if own_line { line_start } else { close };
    let mut result = String::with_capacity(text.len() + di.len());
    result.push_str(&text[..at]);
    result.push_str(&di);
    result.push_str(&text[at..]);
    Ok(result)
}

/// Lays out `xml` and embeds the diagram.
pub fn layout_xml(xml: &str) -> Result<String, LayoutError> {
    let doc = BpmnDocument::parse(xml)?;
    let layout = compute_layout(&doc)?;
    embed_di(xml, &layout)
}
