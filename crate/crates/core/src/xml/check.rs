use std::collections::{HashMap, HashSet};

use super::{BpmnDocument, XmlError};
use crate::ir::{IssueCode, ValidationIssue, ValidationReport};

/// Structural validity gate for BPMN XML: well-formedness, unique ids,
/// resolvable flow endpoints, start and end events, reachability.
pub fn validate_xml_structure(xml: &str) -> ValidationReport {
    match BpmnDocument::parse(xml) {
        Ok(doc) => check_document(&doc),
        Err(XmlError::MalformedXml(message)) => ValidationReport::from_issues(vec![ValidationIssue::error(
            IssueCode::MalformedXml,
            None,
            message,
        )]),
        Err(other) => ValidationReport::from_issues(vec![ValidationIssue::error(
            IssueCode::MalformedXml,
            None,
            other.to_string(),
        )]),
    }
}

pub fn check_document(doc: &BpmnDocument) -> ValidationReport {
    let mut issues = Vec::new();
    if !doc.has_process() {
        issues.push(ValidationIssue::error(IssueCode::NoProcess, None, "no process element"));
        return ValidationReport::from_issues(issues);
    }

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for id in &doc.ids {
        *counts.entry(id.as_str()).or_default() += 1;
    }
    let mut reported = HashSet::new();
    for id in &doc.ids {
        if counts[id.as_str()] > 1 && reported.insert(id.as_str()) {
            issues.push(ValidationIssue::error(
                IssueCode::DuplicateId,
                Some(id),
                format!("id `{id}` is used {} times", counts[id.as_str()]),
            ));
        }
    }
    for node in &doc.nodes {
        if node.id.is_empty() {
            issues.push(ValidationIssue::error(IssueCode::EmptyId, None, format!("a {} has no id", node.kind)));
        }
    }

    let nodes: HashSet<&str> = doc.nodes.iter().map(|n| n.id.as_str()).collect();
    for flow in &doc.flows {
        for (end, value) in [("sourceRef", &flow.source), ("targetRef", &flow.target)] {
            match value {
                None => issues.push(ValidationIssue::error(
                    IssueCode::MissingFlowEndpoint,
                    Some(&flow.id),
                    format!("sequence flow `{}` has no {end}", flow.id),
                )),
                Some(target) if !nodes.contains(target.as_str()) => issues.push(ValidationIssue::error(
                    IssueCode::DanglingFlow,
                    Some(&flow.id),
                    format!("sequence flow `{}` references unknown node `{target}` in {end}", flow.id),
                )),
                Some(_) => {}
            }
        }
    }

    if !doc.nodes.iter().any(|n| n.kind == "startEvent") {
        issues.push(ValidationIssue::error(IssueCode::MissingStart, None, "the process has no startEvent"));
    }
    if !doc.nodes.iter().any(|n| n.kind == "endEvent") {
        issues.push(ValidationIssue::error(IssueCode::MissingEnd, None, "the process has no endEvent"));
    }

    let graph = doc.flow_graph();
    let reachable = graph.reachable_from_starts();
    // Boundary events hang off their host activity, not off sequence flows.
    for node in graph.nodes.iter().filter(|n| n.kind != "boundaryEvent") {
        if !reachable.contains(node.id.as_str()) {
            issues.push(ValidationIssue::error(
                IssueCode::Unreachable,
                Some(&node.id),
                format!("`{}` cannot be reached from a start event", node.id),
            ));
        }
    }
    ValidationReport::from_issues(issues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::fixtures::procurement;
    use crate::xml::to_bpmn_xml;

    fn wrap(body: &str) -> String {
        format!(r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"><process id="p">{body}</process></definitions>"#)
    }

    #[test]
    fn emitter_output_passes() {
        let report = validate_xml_structure(&to_bpmn_xml(&procurement()).unwrap());
        assert!(report.ok, "{}", report.summary());
    }

    #[test]
    fn dangling_flow() {
        let xml = wrap(
            r#"<startEvent id="s"/><endEvent id="e"/>
               <sequenceFlow id="f1" sourceRef="s" targetRef="e"/>
               <sequenceFlow id="f2" sourceRef="s" targetRef="ghost"/>"#,
        );
        let report = validate_xml_structure(&xml);
        assert!(!report.ok);
        assert!(report.has_for(IssueCode::DanglingFlow, "f2"));
    }

    #[test]
    fn missing_end_and_unreachable() {
        let xml = wrap(r#"<startEvent id="s"/><task id="t" name="Orphan"/>"#);
        let report = validate_xml_structure(&xml);
        assert!(report.has(IssueCode::MissingEnd));
        assert!(report.has_for(IssueCode::Unreachable, "t"));
    }

    #[test]
    fn duplicates_missing_refs_and_garbage() {
        let xml = wrap(r#"<startEvent id="s"/><endEvent id="s"/><sequenceFlow id="f" sourceRef="s"/>"#);
        let report = validate_xml_structure(&xml);
        assert!(report.has_for(IssueCode::DuplicateId, "s"));
        assert!(report.has_for(IssueCode::MissingFlowEndpoint, "f"));
        assert!(validate_xml_structure("{\"process\": []}").has(IssueCode::MalformedXml));
        assert!(validate_xml_structure("<definitions/>").has(IssueCode::NoProcess));
    }
}
