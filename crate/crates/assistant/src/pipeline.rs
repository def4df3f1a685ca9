//! One chat turn from message to displayable diagram.

use bpmn_core::layout::layout_xml;
use bpmn_core::{EditOp, LayoutError, XmlError};
use serde::Serialize;
use thiserror::Error;

use crate::assistant::{usage, Artifact, Assistant, AssistantError, Attempt, Intent, Modality, Usage};
use crate::provider::Message;
use crate::session::{CurrentModel, Session};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatTurnResult {
    pub intent: Intent,
    pub reply_text: Option<String>,
    /// Present for create and edit turns.
    pub bpmn_xml: Option<String>,
    pub status_events: Vec<String>,
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TurnError {
    #[error(transparent)]
    Assistant(#[from] AssistantError),
    #[error("this diagram cannot be edited with function calls: {0}")]
    ReadOnly(String),
    #[error("could not convert the model to BPMN XML: {0}")]
    Compile(String),
    #[error("could not lay out the diagram: {0}")]
    Layout(String),
}

impl From<XmlError> for TurnError {
    fn from(e: XmlError) -> Self {
        TurnError::Compile(e.to_string())
    }
}

impl From<LayoutError> for TurnError {
    fn from(e: LayoutError) -> Self {
        TurnError::Layout(e.to_string())
    }
}

impl TurnError {
    pub fn code(&self) -> &'static str {
        match self {
            TurnError::Assistant(e) => e.code(),
            TurnError::ReadOnly(_) => "ReadOnly",
            TurnError::Compile(_) => "CompileFailed",
            TurnError::Layout(_) => "LayoutFailed",
        }
    }

    /// Short explanation for the chat window.
    pub fn user_message(&self) -> String {
        match self {
            TurnError::Assistant(AssistantError::GenerationFailed { attempts, .. }) => format!(
                "Sorry, the model did not produce a valid diagram after {} attempts. Please rephrase or try another model.",
                attempts.len()
            ),
            TurnError::Assistant(AssistantError::ProviderUnavailable { source, .. }) => {
                format!("The language model could not be reached ({source}).")
            }
            TurnError::Assistant(AssistantError::ScriptFailed { error, .. }) => {
                format!("The requested change could not be applied: {error}. The diagram is unchanged.")
            }
            TurnError::Assistant(AssistantError::UnparseableFunctionCalls { .. }) => {
                "The model's edit instructions could not be understood. The diagram is unchanged.".into()
            }
            other => other.to_string(),
        }
    }
}

fn describe(op: &EditOp) -> String {
    match op {
        EditOp::DeleteElement { element_id } => format!("deleted {element_id}"),
        EditOp::RedirectBranch { branch_condition, next_id } => {
            format!("redirected branch \"{branch_condition}\" to {next_id}")
        }
        EditOp::AddElement { element, .. } => format!("added {}", element.id()),
        EditOp::MoveElement { element_id, .. } => format!("moved {element_id}"),
        EditOp::UpdateElement { new_element } => format!("updated {}", new_element.id()),
    }
}

/// Runs one turn. The session is only changed when the turn succeeds.
pub fn handle_turn(
    assistant: &Assistant,
    session: &mut Session,
    message: &str,
    on_status: &mut dyn FnMut(&str),
) -> Result<ChatTurnResult, TurnError> {
    let mut events = Vec::new();
    let mut status = |text: &str| {
        events.push(text.to_string());
        on_status(text);
    };
    let mut attempts: Vec<Attempt> = Vec::new();

    status("Understanding your request");
    let (mut intent, classify) =
        assistant.classify_intent(message, &session.history, session.current.is_some())?;
    attempts.extend(classify);
    // Nothing to edit yet: build it instead.
    if intent == Intent::Edit && session.current.is_none() {
        intent = Intent::Create;
    }

    let (reply, current) = match intent {
        Intent::Conversational => {
            status("Writing a reply");
            let context = session.current.as_ref().map(CurrentModel::context_text);
            let reply = assistant.respond_conversational(message, &session.history, context.as_deref())?;
            attempts.extend(reply.attempts);
            (reply.text, None)
        }
        Intent::Create => {
            status(&format!("Generating the process ({})", session.modality));
            let generated = assistant.generate_process(message, session.modality)?;
            attempts.extend(generated.attempts);
            let current = match generated.artifact {
                Artifact::Model(m) => CurrentModel::Model(m),
                Artifact::Document(xml) => CurrentModel::Document { xml, structured: true },
            };
            ("Here is the process diagram.".to_string(), Some(current))
        }
        Intent::Edit => {
            let current = session.current.as_ref().expect("edit requires a model");
            match session.modality {
                Modality::Json => {
                    let model = current.to_ir().map_err(|e| TurnError::ReadOnly(e.to_string()))?;
                    status("Planning edit operations");
                    let proposed = assistant.propose_edits(&model, message)?;
                    attempts.extend(proposed.attempts);
                    status(&format!("Applied {} edit operation(s)", proposed.ops.len()));
                    let summary = proposed.ops.iter().map(describe).collect::<Vec<_>>().join(", ");
                    let text = if summary.is_empty() { "No changes were needed.".to_string() } else { format!("Done: {summary}.") };
                    (text, Some(CurrentModel::Model(proposed.result.model)))
                }
                Modality::Xml => {
                    let xml = current.semantic_xml()?;
                    status("Editing the BPMN XML");
                    let generated = assistant.edit_xml_direct(&xml, message)?;
                    attempts.extend(generated.attempts);
                    let Artifact::Document(xml) = generated.artifact else { unreachable!("xml edits return documents") };
                    ("Done: the diagram was updated.".to_string(), Some(CurrentModel::Document { xml, structured: true }))
                }
            }
        }
    };

    let bpmn_xml = match &current {
        None => None,
        Some(current) => {
            status("Converting to BPMN XML");
            let xml = current.semantic_xml()?;
            status("Computing the layout");
            Some(layout_xml(&xml)?)
        }
    };
    status("Done");

    session.history.push(Message::user(message));
    session.history.push(Message::assistant(reply.clone()));
    if let Some(current) = current {
        session.current = Some(current);
        session.last_xml.clone_from(&bpmn_xml);
    }
    session.status.clone_from(&events);

    Ok(ChatTurnResult {
        intent,
        reply_text: Some(reply),
        bpmn_xml,
        status_events: events,
        usage: usage(&attempts),
    })
}
