//! A single chat-completion interface shared by every model backend.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

/// What a request is for. Mock scripts can match on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    Classify,
    Generate,
    Edit,
    Respond,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProviderRequest {
    /// Provider-side model identifier.
    pub model_name: String,
    pub purpose: Purpose,
    pub system: Option<String>,
    pub messages: Vec<Message>,
    /// `None` for models that reject the parameter.
    pub temperature: Option<f32>,
    pub max_output_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("no API key: set {0}")]
    MissingApiKey(&'static str),
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected provider response: {0}")]
    BadResponse(String),
}

/// Implementations must be usable from several sessions at once.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;
}

/// Rough token count (four characters per token) for backends that report
/// none.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

pub fn request_input_text(request: &ProviderRequest) -> String {
    let mut text = request.system.clone().unwrap_or_default();
    for m in &request.messages {
        text.push('\n');
        text.push_str(&m.content);
    }
    text
}
