use serde_json::{Map, Value};
use thiserror::Error;

use super::{Branch, Element, EventKind, ProcessModel, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("unknown element type `{type_name}` at {path}")]
    UnknownElementType { type_name: String, path: String },
    #[error("missing field `{field}` at {path}")]
    MissingField { field: String, path: String },
    #[error("field `{field}` at {path} must be {expected}")]
    InvalidField {
        field: String,
        path: String,
        expected: &'static str,
    },
}

/// Parses a process document. Unknown keys are logged and ignored.
pub fn parse_process(text: &str) -> Result<ProcessModel, ParseError> {
    let (model, warnings) = parse_process_with_warnings(text)?;
    for warning in warnings {
        log::warn!("{warning}");
    }
    Ok(model)
}

/// Like [`parse_process`] but hands back the warnings instead of logging them.
pub fn parse_process_with_warnings(text: &str) -> Result<(ProcessModel, Vec<String>), ParseError> {
    let value = parse_json(text)?;
    let root = value
        .as_object()
        .ok_or_else(|| ParseError::MalformedDocument("top level is not an object".into()))?;
    let mut warnings = Vec::new();
    for key in root.keys().filter(|k| k.as_str() != "process") {
        warnings.push(format!("ignoring unknown top-level key `{key}`"));
    }
    let items = match root.get("process") {
        Some(Value::Array(items)) => items,
        Some(_) => {
            return Err(ParseError::InvalidField {
                field: "process".into(),
                path: "$".into(),
                expected: "an array",
            })
        }
        None => {
            return Err(ParseError::MissingField {
                field: "process".into(),
                path: "$".into(),
            })
        }
    };
    let mut parser = Parser {
        warnings: &mut warnings,
    };
    let process = parser.sequence(items, "process")?;
    Ok((ProcessModel { process }, warnings))
}

/// Parses a single element object, e.g. the `element` argument of an edit call.
pub fn parse_element_value(value: &Value, path: &str) -> Result<Element, ParseError> {
    let mut warnings = Vec::new();
    let element = Parser {
        warnings: &mut warnings,
    }
    .element(value, path)?;
    for warning in warnings {
        log::warn!("{warning}");
    }
    Ok(element)
}

fn parse_json(text: &str) -> Result<Value, ParseError> {
    match serde_json::from_str(text) {
        Ok(value) => Ok(value),
        // Trailing commas and similar relaxations are common in hand-written
        // and model-written documents.
        Err(strict) => json5::from_str(text)
            .map_err(|_| ParseError::MalformedDocument(strict.to_string())),
    }
}

struct Parser<'w> {
    warnings: &'w mut Vec<String>,
}

const TASK_KEYS: &[&str] = &["type", "id", "label"];
const EXCLUSIVE_KEYS: &[&str] = &["type", "id", "label", "has_join", "branches"];
const PARALLEL_KEYS: &[&str] = &["type", "id", "branches"];
const BRANCH_KEYS: &[&str] = &["condition", "path", "next"];

impl Parser<'_> {
    fn sequence(&mut self, items: &[Value], path: &str) -> Result<Vec<Element>, ParseError> {
        items
            .iter()
            .enumerate()
            .map(|(i, item)| self.element(item, &format!("{path}[{i}]")))
            .collect()
    }

    fn element(&mut self, value: &Value, path: &str) -> Result<Element, ParseError> {
        let obj = value.as_object().ok_or_else(|| ParseError::InvalidField {
            field: "element".into(),
            path: path.into(),
            expected: "an object",
        })?;
        let type_name = required_str(obj, "type", path)?;
        let id = required_str(obj, "id", path)?.to_string();
        let element = match type_name {
            "task" | "userTask" | "serviceTask" => {
                self.unknown_keys(obj, TASK_KEYS, path);
                let kind = match type_name {
                    "task" => TaskKind::Task,
                    "userTask" => TaskKind::UserTask,
                    _ => TaskKind::ServiceTask,
                };
                Element::Task {
                    kind,
                    id,
                    label: required_str(obj, "label", path)?.to_string(),
                }
            }
            "startEvent" | "endEvent" => {
                self.unknown_keys(obj, TASK_KEYS, path);
                let kind = if type_name == "startEvent" {
                    EventKind::Start
                } else {
                    EventKind::End
                };
                Element::Event {
                    kind,
                    id,
                    label: optional_str(obj, "label", path)?,
                }
            }
            "exclusiveGateway" => {
                self.unknown_keys(obj, EXCLUSIVE_KEYS, path);
                let has_join = match obj.get("has_join") {
                    Some(Value::Bool(b)) => *b,
                    Some(_) => return Err(invalid("has_join", path, "a boolean")),
                    None => return Err(missing("has_join", path)),
                };
                let raw = required_array(obj, "branches", path)?;
                let mut branches = Vec::with_capacity(raw.len());
                for (i, b) in raw.iter().enumerate() {
                    branches.push(self.branch(b, &format!("{path}.branches[{i}]"))?);
                }
                Element::ExclusiveGateway {
                    id,
                    label: optional_str(obj, "label", path)?,
                    has_join,
                    branches,
                }
            }
            "parallelGateway" => {
                self.unknown_keys(obj, PARALLEL_KEYS, path);
                let raw = required_array(obj, "branches", path)?;
                let mut branches = Vec::with_capacity(raw.len());
                for (i, b) in raw.iter().enumerate() {
                    let branch_path = format!("{path}.branches[{i}]");
                    let items = b
                        .as_array()
                        .ok_or_else(|| invalid("branches", &branch_path, "an array of elements"))?;
                    branches.push(self.sequence(items, &branch_path)?);
                }
                Element::ParallelGateway { id, branches }
            }
            other => {
                return Err(ParseError::UnknownElementType {
                    type_name: other.to_string(),
                    path: path.to_string(),
                })
            }
        };
        Ok(element)
    }

    fn branch(&mut self, value: &Value, path: &str) -> Result<Branch, ParseError> {
        let obj = value
            .as_object()
            .ok_or_else(|| invalid("branches", path, "an object"))?;
        self.unknown_keys(obj, BRANCH_KEYS, path);
        let items = match obj.get("path") {
            None | Some(Value::Null) => &[][..],
            Some(Value::Array(items)) => items.as_slice(),
            Some(_) => return Err(invalid("path", path, "an array")),
        };
        Ok(Branch {
            condition: required_str(obj, "condition", path)?.to_string(),
            path: self.sequence(items, &format!("{path}.path"))?,
            next: optional_str(obj, "next", path)?,
        })
    }

    fn unknown_keys(&mut self, obj: &Map<String, Value>, known: &[&str], path: &str) {
        for key in obj.keys().filter(|k| !known.contains(&k.as_str())) {
            self.warnings
                .push(format!("ignoring unknown key `{key}` at {path}"));
        }
    }
}

fn missing(field: &str, path: &str) -> ParseError {
    ParseError::MissingField {
        field: field.into(),
        path: path.into(),
    }
}

fn invalid(field: &str, path: &str, expected: &'static str) -> ParseError {
    ParseError::InvalidField {
        field: field.into(),
        path: path.into(),
        expected,
    }
}

fn required_str<'a>(obj: &'a Map<String, Value>, field: &str, path: &str) -> Result<&'a str, ParseError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s),
        Some(Value::Null) | None => Err(missing(field, path)),
        Some(_) => Err(invalid(field, path, "a string")),
    }
}

fn optional_str(obj: &Map<String, Value>, field: &str, path: &str) -> Result<Option<String>, ParseError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(Value::Null) | None => Ok(None),
        Some(_) => Err(invalid(field, path, "a string")),
    }
}

fn required_array<'a>(obj: &'a Map<String, Value>, field: &str, path: &str) -> Result<&'a Vec<Value>, ParseError> {
    match obj.get(field) {
        Some(Value::Array(items)) => Ok(items),
        Some(Value::Null) | None => Err(missing(field, path)),
        Some(_) => Err(invalid(field, path, "an array")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::fixtures::PROCUREMENT;

    #[test]
    fn procurement_document_shape() {
        let model = parse_process(PROCUREMENT).unwrap();
        assert_eq!(model.process.len(), 3);
        assert!(model.process[0].is_start());
        assert!(model.process[2].is_end());
        match &model.process[1] {
            Element::ParallelGateway { id, branches } => {
                assert_eq!(id, "parallel1");
                assert_eq!(branches.len(), 2);
                assert!(branches.iter().all(|b| b.len() == 2));
                assert_eq!(
                    branches[0][0],
                    Element::task(TaskKind::ServiceTask, "task1", "Send mail to supplier")
                );
            }
            other => panic!("expected parallel gateway, got {other:?}"),
        }
    }

    #[test]
    fn empty_process_parses() {
        let model = parse_process(r#"{"process": []}"#).unwrap();
        assert!(model.is_empty());
    }

    #[test]
    fn unsupported_type_is_rejected() {
        let err = parse_process(r#"{"process": [{"type": "timerEvent", "id": "t"}]}"#).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownElementType {
                type_name: "timerEvent".into(),
                path: "process[0]".into()
            }
        );
    }

    #[test]
    fn not_json_is_malformed() {
        assert!(matches!(
            parse_process("this is { not json"),
            Err(ParseError::MalformedDocument(_))
        ));
    }

    #[test]
    fn missing_fields_carry_index_path() {
        let err = parse_process(r#"{"process": []
            , "x": 1}"#)
        .map(|_| ());
        assert!(err.is_ok());
        let err = parse_process(r#"{"steps": []}"#).unwrap_err();
        assert_eq!(
            err,
            ParseError::MissingField {
                field: "process".into(),
                path: "$".into()
            }
        );
        let doc = r#"{"process": [{"type": "exclusiveGateway", "id": "g", "has_join": true,
            "branches": [{"condition": "a", "path": [{"type": "task", "id": "t"}]}]}]}"#;
        assert_eq!(
            parse_process(doc).unwrap_err(),
            ParseError::MissingField {
                field: "label".into(),
                path: "process[0].branches[0].path[0]".into()
            }
        );
    }

    #[test]
    fn unknown_keys_warn_but_parse() {
        let doc = r#"{"version": 2, "process": [{"type": "startEvent", "id": "s", "color": "red"}]}"#;
        let (model, warnings) = parse_process_with_warnings(doc).unwrap();
        assert_eq!(model.process.len(), 1);
        assert_eq!(warnings.len(), 2);
        assert!(warnings[0].contains("version"));
    }

    #[test]
    fn branch_path_and_next_are_optional() {
        let doc = r#"{"process": [{"type": "exclusiveGateway", "id": "g", "has_join": false,
            "branches": [{"condition": "yes", "next": "s"}, {"condition": "no", "path": null}]}]}"#;
        let model = parse_process(doc).unwrap();
        let Element::ExclusiveGateway { label, branches, .. } = &model.process[0] else {
            panic!()
        };
        assert!(label.is_none());
        assert_eq!(branches[0].next.as_deref(), Some("s"));
        assert!(branches[1].path.is_empty() && branches[1].next.is_none());
    }
}
