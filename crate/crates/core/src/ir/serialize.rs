use serde_json::{Map, Value};

use super::{Element, ProcessModel};

/// Canonical pretty-printed document: keys in `type`, `id`, `label`, then
/// variant order; absent optionals omitted.
pub fn serialize_process(model: &ProcessModel) -> String {
    let mut text = serde_json::to_string_pretty(&to_value(model)).expect("values always serialize");
    text.push('\n');
    text
}

pub fn to_value(model: &ProcessModel) -> Value {
    let mut root = Map::new();
    root.insert("process".into(), sequence(&model.process));
    Value::Object(root)
}

fn sequence(seq: &[Element]) -> Value {
    Value::Array(seq.iter().map(element_to_value).collect())
}

pub fn element_to_value(element: &Element) -> Value {
    let mut obj = Map::new();
    obj.insert("type".into(), element.type_name().into());
    obj.insert("id".into(), element.id().into());
    match element {
        Element::Task { label, .. } => {
            obj.insert("label".into(), label.as_str().into());
        }
        Element::Event { label, .. } => {
            if let Some(label) = label {
                obj.insert("label".into(), label.as_str().into());
            }
        }
        Element::ExclusiveGateway {
            label,
            has_join,
            branches,
            ..
        } => {
            if let Some(label) = label {
                obj.insert("label".into(), label.as_str().into());
            }
            obj.insert("has_join".into(), (*has_join).into());
            let branches = branches
                .iter()
                .map(|b| {
                    let mut branch = Map::new();
                    branch.insert("condition".into(), b.condition.as_str().into());
                    branch.insert("path".into(), sequence(&b.path));
                    if let Some(next) = &b.next {
                        branch.insert("next".into(), next.as_str().into());
                    }
                    Value::Object(branch)
                })
                .collect();
            obj.insert("branches".into(), Value::Array(branches));
        }
        Element::ParallelGateway { branches, .. } => {
            obj.insert(
                "branches".into(),
                Value::Array(branches.iter().map(|b| sequence(b)).collect()),
            );
        }
    }
    Value::Object(obj)
}
