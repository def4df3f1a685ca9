//! The LLM loop: classification, generation and editing in both modalities,
//! with validator feedback on retries.

use std::sync::Arc;

use bpmn_core::edit::parse_calls_text;
use bpmn_core::layout::compute_layout;
use bpmn_core::xml::{strip_di, validate_xml_structure, BpmnDocument};
use bpmn_core::{apply_edit_script, parse_process, serialize_process, validate, EditError, EditOp, EditResult};
use bpmn_core::{ProcessModel, ValidationReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ModelInfo;
use crate::extract::{json_payload, xml_payload};
use crate::prompts;
use crate::provider::{Message, Provider, ProviderError, ProviderRequest, ProviderResponse, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intent {
    Conversational,
    Create,
    Edit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    #[default]
    Json,
    Xml,
}

impl std::str::FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Modality::Json),
            "xml" => Ok(Modality::Xml),
            other => Err(format!("unknown modality `{other}` (expected json or xml)")),
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Modality::Json => "json",
            Modality::Xml => "xml",
        })
    }
}

/// One provider round trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_ms: u64,
    /// Why the reply was rejected, if it was.
    pub error: Option<String>,
}

impl Attempt {
    fn from_response(r: &ProviderResponse) -> Self {
        Attempt {
            input_tokens: r.input_tokens,
            output_tokens: r.output_tokens,
            latency_ms: r.latency_ms,
            error: None,
        }
    }
}

/// Totals over a list of attempts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Usage {
    pub attempts: usize,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_ms: u64,
}

pub fn usage(attempts: &[Attempt]) -> Usage {
    attempts.iter().fold(Usage::default(), |u, a| Usage {
        attempts: u.attempts + 1,
        input_tokens: u.input_tokens + a.input_tokens,
        output_tokens: u.output_tokens + a.output_tokens,
        latency_ms: u.latency_ms + a.latency_ms,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssistantError {
    #[error("the message is empty")]
    EmptyInput,
    #[error("{source}")]
    ProviderUnavailable {
        source: ProviderError,
        attempts: Vec<Attempt>,
    },
    #[error("could not understand the intent classification after {} attempts: {last}", .attempts.len())]
    UnparseableClassification { attempts: Vec<Attempt>, last: String },
    #[error("no valid output after {} attempts: {last_error}", .attempts.len())]
    GenerationFailed {
        attempts: Vec<Attempt>,
        last_error: String,
        report: Option<ValidationReport>,
    },
    #[error("could not read the proposed edits after {} attempts: {error}", .attempts.len())]
    UnparseableFunctionCalls { attempts: Vec<Attempt>, error: String },
    #[error("the proposed edits could not be applied after {} attempts: {error}", .attempts.len())]
    ScriptFailed { attempts: Vec<Attempt>, error: EditError },
}

impl AssistantError {
    pub fn attempts(&self) -> &[Attempt] {
        match self {
            AssistantError::EmptyInput => &[],
            AssistantError::ProviderUnavailable { attempts, .. }
            | AssistantError::UnparseableClassification { attempts, .. }
            | AssistantError::GenerationFailed { attempts, .. }
            | AssistantError::UnparseableFunctionCalls { attempts, .. }
            | AssistantError::ScriptFailed { attempts, .. } => attempts,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            AssistantError::EmptyInput => "EmptyInput",
            AssistantError::ProviderUnavailable { .. } => "ProviderUnavailable",
            AssistantError::UnparseableClassification { .. } => "UnparseableClassification",
            AssistantError::GenerationFailed { .. } => "GenerationFailed",
            AssistantError::UnparseableFunctionCalls { .. } => "UnparseableFunctionCalls",
            AssistantError::ScriptFailed { .. } => "ScriptFailed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssistantConfig {
    /// Total provider calls allowed per operation, first try included.
    pub retry_limit: usize,
    pub temperature: f32,
    pub max_output_tokens: u32,
}

impl Default for AssistantConfig {
    fn default() -> Self {
        AssistantConfig { retry_limit: 3, temperature: 0.0, max_output_tokens: 4096 }
    }
}

/// A generated or edited artifact.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Model(ProcessModel),
    /// Semantic BPMN XML without diagram information.
    Document(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub artifact: Artifact,
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposedEdits {
    pub ops: Vec<EditOp>,
    pub result: EditResult,
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub text: String,
    pub attempts: Vec<Attempt>,
}

/// Why a reply was rejected; the message is fed back on the next attempt.
enum Rejection {
    Json(String),
    Invalid(ValidationReport),
    Calls(String),
    Script(EditError),
    Xml(String, Option<ValidationReport>),
}

impl Rejection {
    fn message(&self) -> String {
        match self {
            Rejection::Json(e) | Rejection::Calls(e) => e.clone(),
            Rejection::Invalid(report) => report.summary(),
            Rejection::Script(e) => e.to_string(),
            Rejection::Xml(e, _) => e.clone(),
        }
    }
}

pub struct Assistant {
    provider: Arc<dyn Provider>,
    model: &'static ModelInfo,
    config: AssistantConfig,
}

impl Assistant {
    pub fn new(provider: Arc<dyn Provider>, model: &'static ModelInfo, config: AssistantConfig) -> Self {
        Assistant { provider, model, config }
    }

    pub fn model(&self) -> &'static ModelInfo {
        self.model
    }

    pub fn config(&self) -> &AssistantConfig {
        &self.config
    }

    fn request(&self, purpose: Purpose, system: String, messages: Vec<Message>) -> ProviderRequest {
        ProviderRequest {
            model_name: self.model.api_model.to_string(),
            purpose,
            system: Some(system),
            messages,
            temperature: self.model.supports_temperature.then_some(self.config.temperature),
            max_output_tokens: self.config.max_output_tokens,
        }
    }

    fn call(&self, request: &ProviderRequest, attempts: &mut Vec<Attempt>) -> Result<ProviderResponse, AssistantError> {
        match self.provider.complete(request) {
            Ok(response) => {
                attempts.push(Attempt::from_response(&response));
                Ok(response)
            }
            Err(source) => Err(AssistantError::ProviderUnavailable { source, attempts: std::mem::take(attempts) }),
        }
    }

    /// Calls the provider until `accept` takes a reply or the retry limit is
    /// reached. Rejected replies go back to the model with the reason.
    fn retrying<T>(
        &self,
        purpose: Purpose,
        system: String,
        mut messages: Vec<Message>,
        mut accept: impl FnMut(&str) -> Result<T, Rejection>,
    ) -> Result<(T, Vec<Attempt>), Failure> {
        let mut attempts = Vec::new();
        let mut last = None;
        for round in 0..self.config.retry_limit.max(1) {
            let request = self.request(purpose, system.clone(), messages.clone());
            let response = match self.provider.complete(&request) {
                Ok(r) => {
                    attempts.push(Attempt::from_response(&r));
                    r
                }
                Err(source) => return Err(Failure::Provider(source, attempts)),
            };
            match accept(&response.text) {
                Ok(value) => return Ok((value, attempts)),
                Err(rejection) => {
                    let reason = rejection.message();
                    log::info!("{purpose:?} attempt {} rejected: {reason}", round + 1);
                    if let Some(a) = attempts.last_mut() {
                        a.error = Some(reason.clone());
                    }
                    messages.push(Message::assistant(response.text));
                    messages.push(Message::user(prompts::fill(prompts::FEEDBACK, &[("issues", &reason)])));
                    last = Some(rejection);
                }
            }
        }
        Err(Failure::Rejected(last.expect("at least one attempt"), attempts))
    }

    pub fn classify_intent(&self, message: &str, history: &[Message], has_model: bool) -> Result<(Intent, Vec<Attempt>), AssistantError> {
        if message.trim().is_empty() {
            return Err(AssistantError::EmptyInput);
        }
        let system = prompts::fill(prompts::CLASSIFY, &[("has_model", if has_model { "yes" } else { "no" })]);
        let mut messages = history.to_vec();
        messages.push(Message::user(message));
        let outcome = self.retrying(Purpose::Classify, system, messages, |text| {
            parse_intent(text).ok_or_else(|| Rejection::Json(format!("expected {{\"intent\": \"conversational\" | \"create\" | \"edit\"}}, got `{}`", text.trim())))
        });
        outcome.map_err(|f| {
            f.into_error(|rejection, attempts| AssistantError::UnparseableClassification {
                last: rejection.message(),
                attempts,
            })
        })
    }

    pub fn generate_process(&self, description: &str, modality: Modality) -> Result<Generated, AssistantError> {
        if description.trim().is_empty() {
            return Err(AssistantError::EmptyInput);
        }
        let (system, messages) = match modality {
            Modality::Json => (prompts::GENERATE_JSON.trim_end().to_string(), vec![Message::user(description)]),
            Modality::Xml => (prompts::GENERATE_XML.trim_end().to_string(), vec![Message::user(description)]),
        };
        let outcome = self.retrying(Purpose::Generate, system, messages, |text| match modality {
            Modality::Json => accept_model(text).map(Artifact::Model),
            Modality::Xml => accept_xml(text).map(Artifact::Document),
        });
        generation_result(outcome)
    }

    /// Asks for function calls against `model` and applies them atomically.
    pub fn propose_edits(&self, model: &ProcessModel, instruction: &str) -> Result<ProposedEdits, AssistantError> {
        if instruction.trim().is_empty() {
            return Err(AssistantError::EmptyInput);
        }
        let serialized = serialize_process(model);
        let system = prompts::fill(prompts::EDIT_JSON, &[("model", &serialized)]);
        let outcome = self.retrying(Purpose::Edit, system, vec![Message::user(instruction)], |text| {
            let ops = parse_calls_text(json_payload(text)).map_err(|e| Rejection::Calls(e.to_string()))?;
            let result = apply_edit_script(model, &ops).map_err(Rejection::Script)?;
            Ok((ops, result))
        });
        match outcome {
            Ok(((ops, result), attempts)) => Ok(ProposedEdits { ops, result, attempts }),
            Err(f) => Err(f.into_error(|rejection, attempts| match rejection {
                Rejection::Script(error) => AssistantError::ScriptFailed { attempts, error },
                other => AssistantError::UnparseableFunctionCalls { error: other.message(), attempts },
            })),
        }
    }

    /// Asks for a complete replacement of `xml`.
    pub fn edit_xml_direct(&self, xml: &str, instruction: &str) -> Result<Generated, AssistantError> {
        if instruction.trim().is_empty() {
            return Err(AssistantError::EmptyInput);
        }
        let document = strip_di(xml).unwrap_or_else(|_| xml.to_string());
        let system = prompts::fill(prompts::EDIT_XML, &[("document", document.trim())]);
        let outcome = self.retrying(Purpose::Edit, system, vec![Message::user(instruction)], |text| {
            accept_xml(text).map(Artifact::Document)
        });
        generation_result(outcome)
    }

    /// Free-text answer. `context` is the current diagram, if any, so the
    /// user can ask about it.
    pub fn respond_conversational(&self, message: &str, history: &[Message], context: Option<&str>) -> Result<Reply, AssistantError> {
        let context = match context {
            Some(c) => format!("The user's current diagram:\n\n{c}"),
            None => "No diagram is loaded yet.".to_string(),
        };
        let system = prompts::fill(prompts::CONVERSATIONAL, &[("context", &context)]);
        let mut messages = history.to_vec();
        messages.push(Message::user(message));
        let request = self.request(Purpose::Respond, system, messages);
        let mut attempts = Vec::new();
        let response = self.call(&request, &mut attempts)?;
        Ok(Reply { text: response.text, attempts })
    }
}

enum Failure {
    Provider(ProviderError, Vec<Attempt>),
    Rejected(Rejection, Vec<Attempt>),
}

impl Failure {
    fn into_error(self, rejected: impl FnOnce(Rejection, Vec<Attempt>) -> AssistantError) -> AssistantError {
        match self {
            Failure::Provider(source, attempts) => AssistantError::ProviderUnavailable { source, attempts },
            Failure::Rejected(rejection, attempts) => rejected(rejection, attempts),
        }
    }
}

fn generation_result(outcome: Result<(Artifact, Vec<Attempt>), Failure>) -> Result<Generated, AssistantError> {
    match outcome {
        Ok((artifact, attempts)) => Ok(Generated { artifact, attempts }),
        Err(f) => Err(f.into_error(|rejection, attempts| {
            let report = match &rejection {
                Rejection::Invalid(r) => Some(r.clone()),
                Rejection::Xml(_, r) => r.clone(),
                _ => None,
            };
            AssistantError::GenerationFailed { last_error: rejection.message(), report, attempts }
        })),
    }
}

fn accept_model(text: &str) -> Result<ProcessModel, Rejection> {
    let model = parse_process(json_payload(text)).map_err(|e| Rejection::Json(e.to_string()))?;
    let report = validate(&model);
    if report.ok {
        Ok(model)
    } else {
        Err(Rejection::Invalid(report))
    }
}

/// Structural check plus layout feasibility, since every accepted document
/// is rendered.
fn accept_xml(text: &str) -> Result<String, Rejection> {
    let payload = xml_payload(text);
    let report = validate_xml_structure(payload);
    if !report.ok {
        return Err(Rejection::Xml(report.summary(), Some(report)));
    }
    let semantic = strip_di(payload).map_err(|e| Rejection::Xml(e.to_string(), None))?;
    let doc = BpmnDocument::parse(&semantic).map_err(|e| Rejection::Xml(e.to_string(), None))?;
    compute_layout(&doc).map_err(|e| Rejection::Xml(e.to_string(), None))?;
    // Extraction trims; documents end with exactly one newline.
    Ok(format!("{}\n", semantic.trim_end()))
}

/// Reads `{"intent": ...}` or a bare intent word.
pub fn parse_intent(text: &str) -> Option<Intent> {
    let word = match serde_json::from_str::<serde_json::Value>(json_payload(text)) {
        Ok(serde_json::Value::String(word)) => Some(word),
        Ok(v) => v.get("intent").and_then(|i| i.as_str()).map(str::to_string),
        Err(_) => Some(text.trim().trim_matches(|c: char| !c.is_alphanumeric()).to_string()),
    }?;
    match word.to_ascii_lowercase().as_str() {
        "conversational" => Some(Intent::Conversational),
        "create" => Some(Intent::Create),
        "edit" => Some(Intent::Edit),
        _ => None,
    }
}
