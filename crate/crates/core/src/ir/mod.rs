//! Block-structured process representation.
//!
//! A [`ProcessModel`] is an ordered list of elements executed in position
//! order. Gateways nest further sequences inside their branches; exclusive
//! branches may additionally jump to any element by id through `next`.

mod lower;
mod parse;
mod random;
mod serialize;
mod validate;

use std::fmt;

pub use lower::{lower, join_id, JOIN_SUFFIX};
pub use parse::{parse_element_value, parse_process, parse_process_with_warnings, ParseError};
pub use random::random_process;
pub use serialize::{element_to_value, serialize_process, to_value};
pub use validate::{validate, IssueCode, Severity, ValidationIssue, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Task,
    UserTask,
    ServiceTask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Start,
    End,
}

/// One entry of a process sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Element {
    Task {
        kind: TaskKind,
        id: String,
        label: String,
    },
    Event {
        kind: EventKind,
        id: String,
        label: Option<String>,
    },
    ExclusiveGateway {
        id: String,
        label: Option<String>,
        has_join: bool,
        branches: Vec<Branch>,
    },
    ParallelGateway {
        id: String,
        branches: Vec<Vec<Element>>,
    },
}

/// A conditional branch of an exclusive gateway.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub condition: String,
    pub path: Vec<Element>,
    pub next: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProcessModel {
    pub process: Vec<Element>,
}

/// The seven element `type` values understood by the IR.
pub const ELEMENT_TYPES: [&str; 7] = [
    "task",
    "userTask",
    "serviceTask",
    "startEvent",
    "endEvent",
    "exclusiveGateway",
    "parallelGateway",
];

impl TaskKind {
    pub fn type_name(self) -> &'static str {
        match self {
            TaskKind::Task => "task",
            TaskKind::UserTask => "userTask",
            TaskKind::ServiceTask => "serviceTask",
        }
    }
}

impl EventKind {
    pub fn type_name(self) -> &'static str {
        match self {
            EventKind::Start => "startEvent",
            EventKind::End => "endEvent",
        }
    }
}

impl Element {
    pub fn task(kind: TaskKind, id: impl Into<String>, label: impl Into<String>) -> Self {
        Element::Task {
            kind,
            id: id.into(),
            label: label.into(),
        }
    }

    pub fn start(id: impl Into<String>) -> Self {
        Element::Event {
            kind: EventKind::Start,
            id: id.into(),
            label: None,
        }
    }

    pub fn end(id: impl Into<String>) -> Self {
        Element::Event {
            kind: EventKind::End,
            id: id.into(),
            label: None,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Element::Task { id, .. }
            | Element::Event { id, .. }
            | Element::ExclusiveGateway { id, .. }
            | Element::ParallelGateway { id, .. } => id,
        }
    }

    /// The IR `type` string of this element.
    pub fn type_name(&self) -> &'static str {
        match self {
            Element::Task { kind, .. } => kind.type_name(),
            Element::Event { kind, .. } => kind.type_name(),
            Element::ExclusiveGateway { .. } => "exclusiveGateway",
            Element::ParallelGateway { .. } => "parallelGateway",
        }
    }

    /// Display label, empty when the element has none.
    pub fn label(&self) -> &str {
        match self {
            Element::Task { label, .. } => label,
            Element::Event { label, .. } | Element::ExclusiveGateway { label, .. } => {
                label.as_deref().unwrap_or("")
            }
            Element::ParallelGateway { .. } => "",
        }
    }

    pub fn is_start(&self) -> bool {
        matches!(self, Element::Event { kind: EventKind::Start, .. })
    }

    pub fn is_end(&self) -> bool {
        matches!(self, Element::Event { kind: EventKind::End, .. })
    }

    pub fn is_gateway(&self) -> bool {
        matches!(
            self,
            Element::ExclusiveGateway { .. } | Element::ParallelGateway { .. }
        )
    }

    /// Sequences nested directly under this element, in declaration order.
    pub fn child_sequences(&self) -> Vec<&Vec<Element>> {
        match self {
            Element::ExclusiveGateway { branches, .. } => branches.iter().map(|b| &b.path).collect(),
            Element::ParallelGateway { branches, .. } => branches.iter().collect(),
            _ => Vec::new(),
        }
    }

    pub fn child_sequences_mut(&mut self) -> Vec<&mut Vec<Element>> {
        match self {
            Element::ExclusiveGateway { branches, .. } => {
                branches.iter_mut().map(|b| &mut b.path).collect()
            }
            Element::ParallelGateway { branches, .. } => branches.iter_mut().collect(),
            _ => Vec::new(),
        }
    }

    /// Number of elements strictly nested inside this one.
    pub fn nested_count(&self) -> usize {
        self.child_sequences()
            .into_iter()
            .flatten()
            .map(|e| 1 + e.nested_count())
            .sum()
    }

    /// Whether `id` names this element or anything nested inside it.
    pub fn contains_id(&self, id: &str) -> bool {
        self.id() == id
            || self
                .child_sequences()
                .into_iter()
                .flatten()
                .any(|e| e.contains_id(id))
    }
}

/// Position of an element: the chain of (element index, branch index) steps
/// leading to its owning sequence, plus its index in that sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ElementAddress {
    pub parents: Vec<(usize, usize)>,
    pub index: usize,
}

impl ElementAddress {
    pub fn top_level(index: usize) -> Self {
        ElementAddress {
            parents: Vec::new(),
            index,
        }
    }

    pub fn is_top_level(&self) -> bool {
        self.parents.is_empty()
    }

    /// Branch index inside the immediately enclosing gateway, if nested.
    pub fn branch(&self) -> Option<usize> {
        self.parents.last().map(|&(_, b)| b)
    }
}

impl fmt::Display for ElementAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("process")?;
        for (elem, branch) in &self.parents {
            write!(f, "[{elem}].branches[{branch}]")?;
        }
        write!(f, "[{}]", self.index)
    }
}

/// Result of [`ProcessModel::find`].
#[derive(Debug, Clone, Copy)]
pub struct Located<'a> {
    pub element: &'a Element,
    pub owner: &'a [Element],
    pub index: usize,
}

impl ProcessModel {
    pub fn new(process: Vec<Element>) -> Self {
        ProcessModel { process }
    }

    pub fn is_empty(&self) -> bool {
        self.process.is_empty()
    }

    /// Depth-first, document-order walk over every element.
    pub fn walk(&self) -> impl Iterator<Item = &Element> {
        let mut stack: Vec<&Element> = self.process.iter().rev().collect();
        std::iter::from_fn(move || {
            let elem = stack.pop()?;
            for seq in elem.child_sequences().into_iter().rev() {
                stack.extend(seq.iter().rev());
            }
            Some(elem)
        })
    }

    pub fn element_count(&self) -> usize {
        self.walk().count()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.walk().map(Element::id).collect()
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.walk().any(|e| e.id() == id)
    }

    /// Finds the first element with `id`, searching nested branches
    /// depth-first in document order.
    pub fn find(&self, id: &str) -> Option<Located<'_>> {
        fn search<'a>(seq: &'a [Element], id: &str) -> Option<Located<'a>> {
            for (index, element) in seq.iter().enumerate() {
                if element.id() == id {
                    return Some(Located {
                        element,
                        owner: seq,
                        index,
                    });
                }
                for child in element.child_sequences() {
                    if let Some(found) = search(child, id) {
                        return Some(found);
                    }
                }
            }
            None
        }
        search(&self.process, id)
    }

    pub fn address_of(&self, id: &str) -> Option<ElementAddress> {
        fn search(seq: &[Element], id: &str, parents: &mut Vec<(usize, usize)>) -> Option<ElementAddress> {
            for (index, element) in seq.iter().enumerate() {
                if element.id() == id {
                    return Some(ElementAddress {
                        parents: parents.clone(),
                        index,
                    });
                }
                for (b, child) in element.child_sequences().into_iter().enumerate() {
                    parents.push((index, b));
                    if let Some(found) = search(child, id, parents) {
                        return Some(found);
                    }
                    parents.pop();
                }
            }
            None
        }
        search(&self.process, id, &mut Vec::new())
    }

    /// Mutable access to the sequence that owns the element at `address`.
    pub fn sequence_mut(&mut self, parents: &[(usize, usize)]) -> Option<&mut Vec<Element>> {
        let mut seq = &mut self.process;
        for &(elem, branch) in parents {
            seq = seq
                .get_mut(elem)?
                .child_sequences_mut()
                .into_iter()
                .nth(branch)?;
        }
        Some(seq)
    }

    pub fn element_mut(&mut self, id: &str) -> Option<&mut Element> {
        let address = self.address_of(id)?;
        self.sequence_mut(&address.parents)?.get_mut(address.index)
    }
}

impl fmt::Display for ProcessModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_process(self))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub const PROCUREMENT: &str = include_str!("../../../../fixtures/models/procurement.json");

    pub fn procurement() -> ProcessModel {
        parse_process(PROCUREMENT).expect("procurement model parses")
    }

    pub fn linear(ids: &[&str]) -> ProcessModel {
        let mut process = vec![Element::start("start")];
        for id in ids {
            process.push(Element::task(TaskKind::Task, *id, format!("Do {id}")));
        }
        process.push(Element::end("end"));
        ProcessModel::new(process)
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;

    #[test]
    fn find_nested_task_reports_branch_position() {
        let model = procurement();
        let found = model.find("task3").unwrap();
        assert_eq!(found.index, 0);
        assert_eq!(found.owner.len(), 2);
        let address = model.address_of("task3").unwrap();
        assert_eq!(address.parents, vec![(1, 1)]);
        assert_eq!(address.branch(), Some(1));
        assert_eq!(address.to_string(), "process[1].branches[1][0]");
    }

    #[test]
    fn find_first_element_is_top_level_zero() {
        let model = procurement();
        let address = model.address_of("start").unwrap();
        assert!(address.is_top_level());
        assert_eq!(address.index, 0);
        assert!(model.find("absent").is_none());
    }

    #[test]
    fn walk_is_document_order() {
        let model = procurement();
        assert_eq!(
            model.ids(),
            ["start", "parallel1", "task1", "task2", "task3", "task4", "end1"]
        );
        assert_eq!(model.process[1].nested_count(), 4);
    }
}
