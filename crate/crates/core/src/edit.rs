//! Atomic editing functions over [`ProcessModel`] and all-or-nothing scripts.
//!
//! Sequences encode adjacency, so removing an element automatically joins its
//! predecessor and successor; inserting splices into the owning sequence.

use std::collections::HashSet;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::ir::{
    element_to_value, parse_element_value, validate, Element, ElementAddress, ParseError,
    ProcessModel, ValidationReport,
};

/// One editing function call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditOp {
    DeleteElement {
        element_id: String,
    },
    RedirectBranch {
        branch_condition: String,
        next_id: String,
    },
    AddElement {
        element: Element,
        before_id: Option<String>,
        after_id: Option<String>,
    },
    MoveElement {
        element_id: String,
        before_id: Option<String>,
        after_id: Option<String>,
    },
    UpdateElement {
        new_element: Element,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditError {
    #[error("element `{0}` not found")]
    NotFound(String),
    #[error("deleting would orphan `next` references to {0:?}")]
    WouldOrphanReference(Vec<String>),
    #[error("deleting `{0}` would leave the process without a start or end event")]
    WouldRemoveLastStartOrEnd(String),
    #[error("id `{0}` is already in use")]
    DuplicateId(String),
    #[error("only one of before_id and after_id may be given")]
    BothAnchorsGiven,
    #[error("one of before_id or after_id is required")]
    NoAnchorGiven,
    #[error("anchor `{anchor}` lies inside the moved element `{element}`")]
    AnchorInsideMoved { element: String, anchor: String },
    #[error("element `{0}` cannot be positioned relative to itself")]
    SelfAnchor(String),
    #[error("no exclusive branch matches condition `{0}`")]
    NoMatchingBranch(String),
    #[error("condition `{condition}` matches {count} branches")]
    AmbiguousCondition { condition: String, count: usize },
    #[error("resulting model is invalid: {}", .0.summary())]
    ResultingModelInvalid(ValidationReport),
    /// `index` equals the script length when the final validation failed.
    #[error("edit script failed at step {index}: {source}")]
    ScriptFailed {
        index: usize,
        source: Box<EditError>,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WireError {
    #[error("function calls are not valid JSON: {0}")]
    Json(String),
    #[error("expected a function call object, got {0}")]
    NotACall(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{function}` is missing argument `{argument}`")]
    MissingArgument { function: String, argument: String },
    #[error("`{function}` argument `{argument}` is invalid: {reason}")]
    InvalidArgument {
        function: String,
        argument: String,
        reason: String,
    },
}

/// Successful script application.
#[derive(Debug, Clone, PartialEq)]
pub struct EditResult {
    pub model: ProcessModel,
    pub applied: Vec<EditOp>,
    pub report: ValidationReport,
}

pub const FUNCTION_NAMES: [&str; 5] = [
    "delete_element",
    "redirect_branch",
    "add_element",
    "move_element",
    "update_element",
];

#[derive(Clone, Copy)]
enum Side {
    Before,
    After,
}

fn anchor<'a>(before: &'a Option<String>, after: &'a Option<String>) -> Result<(&'a str, Side), EditError> {
    match (before, after) {
        (Some(_), Some(_)) => Err(EditError::BothAnchorsGiven),
        (None, None) => Err(EditError::NoAnchorGiven),
        (Some(id), None) => Ok((id, Side::Before)),
        (None, Some(id)) => Ok((id, Side::After)),
    }
}

fn address(model: &ProcessModel, id: &str) -> Result<ElementAddress, EditError> {
    model
        .address_of(id)
        .ok_or_else(|| EditError::NotFound(id.to_string()))
}

fn insert_at(model: &mut ProcessModel, element: Element, anchor_id: &str, side: Side) -> Result<(), EditError> {
    let at = address(model, anchor_id)?;
    let seq = model
        .sequence_mut(&at.parents)
        .expect("address points at an existing sequence");
    let index = match side {
        Side::Before => at.index,
        Side::After => at.index + 1,
    };
    seq.insert(index, element);
    Ok(())
}

fn take(model: &mut ProcessModel, id: &str) -> Result<Element, EditError> {
    let at = address(model, id)?;
    let seq = model
        .sequence_mut(&at.parents)
        .expect("address points at an existing sequence");
    Ok(seq.remove(at.index))
}

fn subtree_ids(element: &Element) -> Vec<String> {
    let single = ProcessModel::new(vec![element.clone()]);
    single.ids().into_iter().map(str::to_string).collect()
}

/// Removes an element; gateways take their whole block with them.
pub fn delete_element(model: &ProcessModel, element_id: &str) -> Result<ProcessModel, EditError> {
    let located = model
        .find(element_id)
        .ok_or_else(|| EditError::NotFound(element_id.to_string()))?;
    let removed: HashSet<String> = subtree_ids(located.element).into_iter().collect();

    let mut orphaned: Vec<String> = Vec::new();
    for element in model.walk() {
        if removed.contains(element.id()) {
            continue;
        }
        if let Element::ExclusiveGateway { branches, .. } = element {
            for next in branches.iter().filter_map(|b| b.next.as_ref()) {
                if removed.contains(next) && !orphaned.contains(next) {
                    orphaned.push(next.clone());
                }
            }
        }
    }
    if !orphaned.is_empty() {
        return Err(EditError::WouldOrphanReference(orphaned));
    }

    let mut out = model.clone();
    take(&mut out, element_id)?;
    let has_start = out.process.iter().any(Element::is_start);
    let has_end = out.walk().any(Element::is_end);
    let had_start = model.process.iter().any(Element::is_start);
    let had_end = model.walk().any(Element::is_end);
    if (had_start && !has_start) || (had_end && !has_end) {
        return Err(EditError::WouldRemoveLastStartOrEnd(element_id.to_string()));
    }
    Ok(out)
}

/// Inserts `element` immediately before or after the anchor, inside the
/// anchor's owning sequence.
pub fn add_element(
    model: &ProcessModel,
    element: Element,
    before_id: Option<&str>,
    after_id: Option<&str>,
) -> Result<ProcessModel, EditError> {
    let (before, after) = (before_id.map(str::to_string), after_id.map(str::to_string));
    let (anchor_id, side) = anchor(&before, &after)?;
    if !model.contains_id(anchor_id) {
        return Err(EditError::NotFound(anchor_id.to_string()));
    }
    if let Some(dup) = subtree_ids(&element).into_iter().find(|id| model.contains_id(id)) {
        return Err(EditError::DuplicateId(dup));
    }
    let mut out = model.clone();
    insert_at(&mut out, element, anchor_id, side)?;
    Ok(out)
}

/// Relocates an element (with its nested block) next to the anchor.
pub fn move_element(
    model: &ProcessModel,
    element_id: &str,
    before_id: Option<&str>,
    after_id: Option<&str>,
) -> Result<ProcessModel, EditError> {
    let (before, after) = (before_id.map(str::to_string), after_id.map(str::to_string));
    let (anchor_id, side) = anchor(&before, &after)?;
    let moving = model
        .find(element_id)
        .ok_or_else(|| EditError::NotFound(element_id.to_string()))?
        .element;
    if !model.contains_id(anchor_id) {
        return Err(EditError::NotFound(anchor_id.to_string()));
    }
    if anchor_id == element_id {
        return Err(EditError::SelfAnchor(element_id.to_string()));
    }
    if moving.contains_id(anchor_id) {
        return Err(EditError::AnchorInsideMoved {
            element: element_id.to_string(),
            anchor: anchor_id.to_string(),
        });
    }
    let mut out = model.clone();
    let element = take(&mut out, element_id)?;
    insert_at(&mut out, element, anchor_id, side)?;
    Ok(out)
}

/// Replaces the element carrying `new_element`'s id wholesale. The result
/// must validate.
pub fn update_element(model: &ProcessModel, new_element: Element) -> Result<ProcessModel, EditError> {
    let mut out = model.clone();
    let slot = out
        .element_mut(new_element.id())
        .ok_or_else(|| EditError::NotFound(new_element.id().to_string()))?;
    *slot = new_element;
    let report = validate(&out);
    if !report.ok {
        return Err(EditError::ResultingModelInvalid(report));
    }
    Ok(out)
}

fn normalize_condition(text: &str) -> String {
    text.trim().to_lowercase()
}

/// Points the unique exclusive branch whose condition matches
/// (case-insensitively, trimmed) at `next_id`.
pub fn redirect_branch(model: &ProcessModel, branch_condition: &str, next_id: &str) -> Result<ProcessModel, EditError> {
    let wanted = normalize_condition(branch_condition);
    let count = model
        .walk()
        .filter_map(|e| match e {
            Element::ExclusiveGateway { branches, .. } => Some(branches),
            _ => None,
        })
        .flatten()
        .filter(|b| normalize_condition(&b.condition) == wanted)
        .count();
    match count {
        0 => return Err(EditError::NoMatchingBranch(branch_condition.to_string())),
        1 => {}
        count => {
            return Err(EditError::AmbiguousCondition {
                condition: branch_condition.to_string(),
                count,
            })
        }
    }
    if !model.contains_id(next_id) {
        return Err(EditError::NotFound(next_id.to_string()));
    }
    let mut out = model.clone();
    fn redirect(seq: &mut [Element], wanted: &str, next_id: &str) -> bool {
        for element in seq {
            if let Element::ExclusiveGateway { branches, .. } = element {
                for branch in branches.iter_mut() {
                    if normalize_condition(&branch.condition) == wanted {
                        branch.next = Some(next_id.to_string());
                        return true;
                    }
                    if redirect(&mut branch.path, wanted, next_id) {
                        return true;
                    }
                }
            } else if let Element::ParallelGateway { branches, .. } = element {
                for branch in branches.iter_mut() {
                    if redirect(branch, wanted, next_id) {
                        return true;
                    }
                }
            }
        }
        false
    }
    redirect(&mut out.process, &wanted, next_id);
    Ok(out)
}

impl EditOp {
    pub fn function_name(&self) -> &'static str {
        match self {
            EditOp::DeleteElement { .. } => "delete_element",
            EditOp::RedirectBranch { .. } => "redirect_branch",
            EditOp::AddElement { .. } => "add_element",
            EditOp::MoveElement { .. } => "move_element",
            EditOp::UpdateElement { .. } => "update_element",
        }
    }

    pub fn apply(&self, model: &ProcessModel) -> Result<ProcessModel, EditError> {
        match self {
            EditOp::DeleteElement { element_id } => delete_element(model, element_id),
            EditOp::RedirectBranch {
                branch_condition,
                next_id,
            } => redirect_branch(model, branch_condition, next_id),
            EditOp::AddElement {
                element,
                before_id,
                after_id,
            } => add_element(model, element.clone(), before_id.as_deref(), after_id.as_deref()),
            EditOp::MoveElement {
                element_id,
                before_id,
                after_id,
            } => move_element(model, element_id, before_id.as_deref(), after_id.as_deref()),
            EditOp::UpdateElement { new_element } => update_element(model, new_element.clone()),
        }
    }

    /// Wire form: `{"function": name, "arguments": {...}}`.
    pub fn to_call(&self) -> Value {
        let mut args = Map::new();
        let anchor = |args: &mut Map<String, Value>, before: &Option<String>, after: &Option<String>| {
            if let Some(b) = before {
                args.insert("before_id".into(), b.as_str().into());
            }
            if let Some(a) = after {
                args.insert("after_id".into(), a.as_str().into());
            }
        };
        match self {
            EditOp::DeleteElement { element_id } => {
                args.insert("element_id".into(), element_id.as_str().into());
            }
            EditOp::RedirectBranch {
                branch_condition,
                next_id,
            } => {
                args.insert("branch_condition".into(), branch_condition.as_str().into());
                args.insert("next_id".into(), next_id.as_str().into());
            }
            EditOp::AddElement {
                element,
                before_id,
                after_id,
            } => {
                args.insert("element".into(), element_to_value(element));
                anchor(&mut args, before_id, after_id);
            }
            EditOp::MoveElement {
                element_id,
                before_id,
                after_id,
            } => {
                args.insert("element_id".into(), element_id.as_str().into());
                anchor(&mut args, before_id, after_id);
            }
            EditOp::UpdateElement { new_element } => {
                args.insert("new_element".into(), element_to_value(new_element));
            }
        }
        json!({ "function": self.function_name(), "arguments": Value::Object(args) })
    }

    pub fn from_call(call: &Value) -> Result<EditOp, WireError> {
        let obj = call
            .as_object()
            .ok_or_else(|| WireError::NotACall(call.to_string()))?;
        let function = obj
            .get("function")
            .or_else(|| obj.get("name"))
            .and_then(Value::as_str)
            .ok_or_else(|| WireError::NotACall(call.to_string()))?;
        let empty = Map::new();
        let args = match obj.get("arguments") {
            Some(Value::Object(args)) => args,
            None | Some(Value::Null) => &empty,
            Some(other) => {
                return Err(WireError::InvalidArgument {
                    function: function.to_string(),
                    argument: "arguments".into(),
                    reason: format!("expected an object, got {other}"),
                })
            }
        };
        let args = Args { function, args };
        let op = match function {
            "delete_element" => EditOp::DeleteElement {
                element_id: args.string("element_id")?,
            },
            "redirect_branch" => EditOp::RedirectBranch {
                branch_condition: args.string("branch_condition")?,
                next_id: args.string("next_id")?,
            },
            "add_element" => EditOp::AddElement {
                element: args.element("element")?,
                before_id: args.optional_string("before_id")?,
                after_id: args.optional_string("after_id")?,
            },
            "move_element" => EditOp::MoveElement {
                element_id: args.string("element_id")?,
                before_id: args.optional_string("before_id")?,
                after_id: args.optional_string("after_id")?,
            },
            "update_element" => EditOp::UpdateElement {
                new_element: args.element("new_element")?,
            },
            other => return Err(WireError::UnknownFunction(other.to_string())),
        };
        Ok(op)
    }
}

struct Args<'a> {
    function: &'a str,
    args: &'a Map<String, Value>,
}

impl Args<'_> {
    fn missing(&self, argument: &str) -> WireError {
        WireError::MissingArgument {
            function: self.function.to_string(),
            argument: argument.to_string(),
        }
    }

    fn optional_string(&self, name: &str) -> Result<Option<String>, WireError> {
        match self.args.get(name) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) if s.is_empty() => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(WireError::InvalidArgument {
                function: self.function.to_string(),
                argument: name.to_string(),
                reason: format!("expected a string, got {other}"),
            }),
        }
    }

    fn string(&self, name: &str) -> Result<String, WireError> {
        self.optional_string(name)?.ok_or_else(|| self.missing(name))
    }

    fn element(&self, name: &str) -> Result<Element, WireError> {
        let value = self.args.get(name).ok_or_else(|| self.missing(name))?;
        // Some models send the element as a JSON-encoded string.
        let decoded;
        let value = match value {
            Value::String(text) => {
                decoded = serde_json::from_str::<Value>(text).map_err(|e| WireError::InvalidArgument {
                    function: self.function.to_string(),
                    argument: name.to_string(),
                    reason: e.to_string(),
                })?;
                &decoded
            }
            other => other,
        };
        parse_element_value(value, name).map_err(|e: ParseError| WireError::InvalidArgument {
            function: self.function.to_string(),
            argument: name.to_string(),
            reason: e.to_string(),
        })
    }
}

/// Parses a list of function calls. Accepts a bare array, a single call
/// object, or an object wrapping the array under `calls`/`function_calls`.
pub fn parse_calls(value: &Value) -> Result<Vec<EditOp>, WireError> {
    let items: Vec<&Value> = match value {
        Value::Array(items) => items.iter().collect(),
        Value::Object(obj) if obj.contains_key("function") || obj.contains_key("name") => vec![value],
        Value::Object(obj) => match obj.get("calls").or_else(|| obj.get("function_calls")) {
            Some(Value::Array(items)) => items.iter().collect(),
            _ => return Err(WireError::NotACall(value.to_string())),
        },
        other => return Err(WireError::NotACall(other.to_string())),
    };
    items.into_iter().map(EditOp::from_call).collect()
}

pub fn parse_calls_text(text: &str) -> Result<Vec<EditOp>, WireError> {
    let value: Value = match serde_json::from_str(text) {
        Ok(value) => value,
        Err(strict) => json5::from_str(text).map_err(|_| WireError::Json(strict.to_string()))?,
    };
    parse_calls(&value)
}

pub fn calls_to_value(ops: &[EditOp]) -> Value {
    Value::Array(ops.iter().map(EditOp::to_call).collect())
}

/// Applies `ops` in order. On any failure the input is left untouched and the
/// failing step is reported.
pub fn apply_edit_script(model: &ProcessModel, ops: &[EditOp]) -> Result<EditResult, EditError> {
    let mut current = model.clone();
    for (index, op) in ops.iter().enumerate() {
        current = op.apply(&current).map_err(|source| EditError::ScriptFailed {
            index,
            source: Box::new(source),
        })?;
    }
    let report = validate(&current);
    if !report.ok {
        return Err(EditError::ScriptFailed {
            index: ops.len(),
            source: Box::new(EditError::ResultingModelInvalid(report)),
        });
    }
    Ok(EditResult {
        model: current,
        applied: ops.to_vec(),
        report,
    })
}
