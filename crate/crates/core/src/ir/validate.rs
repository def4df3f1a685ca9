use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::lower::{lower, JOIN_SUFFIX};
use super::{Element, ProcessModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Severity {
    #[serde(rename = "error")]
    Error,
    #[serde(rename = "warning")]
    Warning,
}

/// Machine-readable reason for a validation issue. Shared by IR and XML checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IssueCode {
    DuplicateId,
    EmptyId,
    InvalidId,
    ReservedId,
    EmptyLabel,
    EmptyCondition,
    TooFewBranches,
    EmptyParallelBranch,
    DanglingNext,
    NextTargetsStart,
    UnterminatedBranch,
    ParallelGatewayAtEnd,
    MissingStart,
    MissingEnd,
    NotStartingWithStart,
    MisplacedStart,
    Unreachable,
    DanglingExit,
    MissingGatewayLabel,
    MalformedXml,
    NoProcess,
    DanglingFlow,
    MissingFlowEndpoint,
    Unstructured,
    UnsupportedElement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub severity: Severity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn from_issues(issues: Vec<ValidationIssue>) -> Self {
        let ok = !issues.iter().any(|i| i.severity == Severity::Error);
        ValidationReport { ok, issues }
    }

    pub fn errors(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }

    pub fn has_for(&self, code: IssueCode, element_id: &str) -> bool {
        self.issues
            .iter()
            .any(|i| i.code == code && i.element_id.as_deref() == Some(element_id))
    }

    /// One line per error, for feeding back to a model or a user.
    pub fn summary(&self) -> String {
        self.errors()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.code)?;
        if let Some(id) = &self.element_id {
            write!(f, "({id})")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl ValidationIssue {
    pub fn error(code: IssueCode, element_id: Option<&str>, message: impl Into<String>) -> Self {
        ValidationIssue {
            code,
            severity: Severity::Error,
            element_id: element_id.map(str::to_string),
            message: message.into(),
        }
    }

    pub fn warning(code: IssueCode, element_id: Option<&str>, message: impl Into<String>) -> Self {
        ValidationIssue {
            severity: Severity::Warning,
            ..ValidationIssue::error(code, element_id, message)
        }
    }
}

/// Checks every structural constraint of the IR. Never fails; violations are
/// report entries.
pub fn validate(model: &ProcessModel) -> ValidationReport {
    let mut v = Validator::default();
    v.ids(model);

    match model.process.first() {
        None => {}
        Some(first) if first.is_start() => {}
        Some(first) => v.error(
            IssueCode::NotStartingWithStart,
            Some(first.id()),
            "the process must begin with a startEvent",
        ),
    }
    if !model.process.iter().any(Element::is_start) {
        v.error(IssueCode::MissingStart, None, "the process has no startEvent");
    }
    if !model.walk().any(Element::is_end) {
        v.error(IssueCode::MissingEnd, None, "the process has no endEvent");
    }

    v.sequence(&model.process, Context::TopLevel);
    if let Some(last) = model.process.last() {
        match last {
            Element::ParallelGateway { id, .. } => v.error(
                IssueCode::ParallelGatewayAtEnd,
                Some(id),
                "a parallel gateway cannot end the process; its join would have no successor",
            ),
            e if falls_through(e) => v.warning(
                IssueCode::DanglingExit,
                Some(e.id()),
                "the process ends without an endEvent after this element",
            ),
            _ => {}
        }
    }

    let starts: HashSet<&str> = model
        .walk()
        .filter(|e| e.is_start())
        .map(Element::id)
        .collect();
    for element in model.walk() {
        if let Element::ExclusiveGateway { id, branches, .. } = element {
            for branch in branches {
                let Some(next) = &branch.next else { continue };
                if !v.seen.contains_key(next.as_str()) {
                    v.error(
                        IssueCode::DanglingNext,
                        Some(next),
                        format!("branch `{}` of `{id}` jumps to unknown element `{next}`", branch.condition),
                    );
                } else if starts.contains(next.as_str()) {
                    v.error(
                        IssueCode::NextTargetsStart,
                        Some(next),
                        format!("branch `{}` of `{id}` jumps back to the start event", branch.condition),
                    );
                }
            }
        }
    }

    if !model.process.is_empty() && model.process[0].is_start() {
        let graph = lower(model);
        let reachable = graph.reachable_from_starts();
        for node in &graph.nodes {
            if !reachable.contains(node.id.as_str()) {
                v.error(
                    IssueCode::Unreachable,
                    Some(&node.id),
                    format!("`{}` cannot be reached from the start event", node.id),
                );
            }
        }
    }

    ValidationReport::from_issues(v.issues)
}

/// Whether control leaves `element` towards the next element of its sequence.
pub(crate) fn falls_through(element: &Element) -> bool {
    match element {
        Element::Event { .. } => !element.is_end(),
        Element::ExclusiveGateway { has_join, .. } => *has_join,
        Element::Task { .. } | Element::ParallelGateway { .. } => true,
    }
}

fn sequence_falls_through(seq: &[Element]) -> bool {
    seq.last().is_none_or(falls_through)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Context {
    TopLevel,
    Nested,
}

#[derive(Default)]
struct Validator<'m> {
    issues: Vec<ValidationIssue>,
    seen: HashMap<&'m str, usize>,
}

impl<'m> Validator<'m> {
    fn error(&mut self, code: IssueCode, id: Option<&str>, message: impl Into<String>) {
        self.issues.push(ValidationIssue::error(code, id, message));
    }

    fn warning(&mut self, code: IssueCode, id: Option<&str>, message: impl Into<String>) {
        self.issues.push(ValidationIssue::warning(code, id, message));
    }

    fn ids(&mut self, model: &'m ProcessModel) {
        for element in model.walk() {
            let id = element.id();
            *self.seen.entry(id).or_default() += 1;
        }
        let mut reported = HashSet::new();
        for element in model.walk() {
            let id = element.id();
            if id.trim().is_empty() {
                if reported.insert(id) {
                    self.error(IssueCode::EmptyId, None, "element ids must be non-empty");
                }
                continue;
            }
            if self.seen[id] > 1 && reported.insert(id) {
                self.error(IssueCode::DuplicateId, Some(id), format!("id `{id}` is used {} times", self.seen[id]));
            }
            if id.chars().any(char::is_whitespace) {
                self.error(IssueCode::InvalidId, Some(id), "ids must not contain whitespace");
            }
            if id.ends_with(JOIN_SUFFIX) {
                self.error(
                    IssueCode::ReservedId,
                    Some(id),
                    format!("the `{JOIN_SUFFIX}` suffix is reserved for synthesized joins"),
                );
            }
        }
    }

    fn sequence(&mut self, seq: &'m [Element], context: Context) {
        for (index, element) in seq.iter().enumerate() {
            if element.is_start() && !(context == Context::TopLevel && index == 0) {
                self.error(
                    IssueCode::MisplacedStart,
                    Some(element.id()),
                    "a startEvent may only open the top-level sequence",
                );
            }
            self.element(element);
        }
    }

    fn element(&mut self, element: &'m Element) {
        match element {
            Element::Task { id, label, .. } => {
                if label.trim().is_empty() {
                    self.error(IssueCode::EmptyLabel, Some(id), "tasks need a short description");
                }
            }
            Element::Event { .. } => {}
            Element::ExclusiveGateway {
                id,
                label,
                has_join,
                branches,
            } => {
                if label.as_deref().is_none_or(|l| l.trim().is_empty()) {
                    self.warning(IssueCode::MissingGatewayLabel, Some(id), "exclusive gateways should be labeled");
                }
                if branches.len() < 2 {
                    self.error(
                        IssueCode::TooFewBranches,
                        Some(id),
                        format!("exclusive gateway has {} branch(es); at least 2 are required", branches.len()),
                    );
                }
                for branch in branches {
                    if branch.condition.trim().is_empty() {
                        self.error(IssueCode::EmptyCondition, Some(id), "branch conditions must be non-empty");
                    }
                    if !has_join && branch.next.is_none() && sequence_falls_through(&branch.path) {
                        self.error(
                            IssueCode::UnterminatedBranch,
                            Some(id),
                            format!(
                                "branch `{}` of a gateway without join must end in an endEvent or declare `next`",
                                branch.condition
                            ),
                        );
                    }
                    self.sequence(&branch.path, Context::Nested);
                }
            }
            Element::ParallelGateway { id, branches } => {
                if branches.len() < 2 {
                    self.error(
                        IssueCode::TooFewBranches,
                        Some(id),
                        format!("parallel gateway has {} branch(es); at least 2 are required", branches.len()),
                    );
                }
                for branch in branches {
                    if branch.is_empty() {
                        self.error(IssueCode::EmptyParallelBranch, Some(id), "parallel branches must not be empty");
                    }
                    self.sequence(branch, Context::Nested);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::fixtures::{procurement, linear};
    use crate::ir::{parse_process, Branch, TaskKind};

    fn codes(report: &ValidationReport) -> Vec<IssueCode> {
        report.errors().map(|i| i.code).collect()
    }

    #[test]
    fn procurement_is_valid() {
        let report = validate(&procurement());
        assert!(report.ok, "{}", report.summary());
        assert!(report.issues.is_empty());
    }

    #[test]
    fn duplicate_ids_are_reported_once() {
        let mut model = linear(&["task1"]);
        model
            .process
            .insert(2, Element::task(TaskKind::Task, "task1", "Again"));
        let report = validate(&model);
        assert!(!report.ok);
        assert!(report.has_for(IssueCode::DuplicateId, "task1"));
        assert_eq!(codes(&report), [IssueCode::DuplicateId]);
    }

    #[test]
    fn dangling_next_is_reported() {
        let model = parse_process(
            r#"{"process": [{"type": "startEvent", "id": "s"},
            {"type": "exclusiveGateway", "id": "g", "label": "?", "has_join": false, "branches": [
                {"condition": "a", "next": "ghost"},
                {"condition": "b", "path": [{"type": "endEvent", "id": "e"}]}]}]}"#,
        )
        .unwrap();
        let report = validate(&model);
        assert!(report.has_for(IssueCode::DanglingNext, "ghost"));
        assert_eq!(codes(&report), [IssueCode::DanglingNext]);
    }

    #[test]
    fn empty_model_lacks_start_and_end() {
        let report = validate(&ProcessModel::default());
        assert_eq!(codes(&report), [IssueCode::MissingStart, IssueCode::MissingEnd]);
    }

    #[test]
    fn gateway_shape_rules() {
        let mut model = linear(&[]);
        model.process.insert(
            1,
            Element::ParallelGateway {
                id: "p".into(),
                branches: vec![vec![]],
            },
        );
        model.process.insert(
            1,
            Element::ExclusiveGateway {
                id: "x".into(),
                label: Some("Choose".into()),
                has_join: true,
                branches: vec![Branch {
                    condition: "  ".into(),
                    path: vec![],
                    next: None,
                }],
            },
        );
        let report = validate(&model);
        let found = codes(&report);
        for code in [
            IssueCode::TooFewBranches,
            IssueCode::EmptyCondition,
            IssueCode::EmptyParallelBranch,
        ] {
            assert!(found.contains(&code), "{code:?} missing from {found:?}");
        }
    }

    #[test]
    fn trailing_parallel_gateway_is_rejected() {
        let mut model = procurement();
        model.process.pop();
        model.process.push(Element::ParallelGateway {
            id: "tail".into(),
            branches: vec![vec![Element::end("e1")], vec![Element::end("e2")]],
        });
        let report = validate(&model);
        assert!(report.has_for(IssueCode::ParallelGatewayAtEnd, "tail"));
    }

    #[test]
    fn process_must_open_with_start() {
        let mut model = linear(&["a"]);
        model.process.swap(0, 1);
        let report = validate(&model);
        assert!(report.has(IssueCode::NotStartingWithStart));
        assert!(report.has_for(IssueCode::MisplacedStart, "start"));
    }

    #[test]
    fn reserved_suffix_and_whitespace_ids() {
        let model = linear(&["approve-join", "two words"]);
        let report = validate(&model);
        assert!(report.has_for(IssueCode::ReservedId, "approve-join"));
        assert!(report.has_for(IssueCode::InvalidId, "two words"));
    }

    #[test]
    fn joinless_branches_must_terminate() {
        let doc = |second: &str| {
            format!(
                r#"{{"process": [{{"type": "startEvent", "id": "s"}},
                {{"type": "exclusiveGateway", "id": "g", "label": "ok?", "has_join": false, "branches": [
                    {{"condition": "yes", "path": [{{"type": "endEvent", "id": "e1"}}]}},
                    {second}]}}]}}"#
            )
        };
        let bad = parse_process(&doc(r#"{"condition": "no", "path": [{"type": "task", "id": "t", "label": "T"}]}"#)).unwrap();
        assert!(validate(&bad).has(IssueCode::UnterminatedBranch));
        let jump = parse_process(&doc(r#"{"condition": "no", "path": [{"type": "task", "id": "t", "label": "T"}], "next": "g"}"#)).unwrap();
        let report = validate(&jump);
        assert!(report.ok, "{}", report.summary());
    }

    #[test]
    fn elements_behind_a_joinless_gateway_are_unreachable() {
        let model = parse_process(
            r#"{"process": [{"type": "startEvent", "id": "s"},
            {"type": "exclusiveGateway", "id": "g", "label": "?", "has_join": false, "branches": [
                {"condition": "a", "path": [{"type": "endEvent", "id": "e1"}]},
                {"condition": "b", "path": [{"type": "endEvent", "id": "e2"}]}]},
            {"type": "task", "id": "orphan", "label": "Never"},
            {"type": "endEvent", "id": "e3"}]}"#,
        )
        .unwrap();
        let report = validate(&model);
        assert!(report.has_for(IssueCode::Unreachable, "orphan"));
        assert!(report.has_for(IssueCode::Unreachable, "e3"));
    }

    #[test]
    fn jump_to_start_is_rejected() {
        let model = parse_process(
            r#"{"process": [{"type": "startEvent", "id": "s"},
            {"type": "exclusiveGateway", "id": "g", "label": "?", "has_join": true, "branches": [
                {"condition": "again", "next": "s"}, {"condition": "done"}]},
            {"type": "endEvent", "id": "e"}]}"#,
        )
        .unwrap();
        assert!(validate(&model).has_for(IssueCode::NextTargetsStart, "s"));
    }
}
