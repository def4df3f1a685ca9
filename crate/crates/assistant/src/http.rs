//! Adapters for the remote chat APIs. Request bodies and response parsing are
//! plain functions so they can be checked without a network.

use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::catalog::{ModelInfo, ProviderKind};
use crate::provider::{Provider, ProviderError, ProviderRequest, ProviderResponse, Role};

pub const OPENAI_BASE_URL: &str = "https://api.openai.com/v1";
pub const FIREWORKS_BASE_URL: &str = "https://api.fireworks.ai/inference/v1";
pub const ANTHROPIC_BASE_URL: &str = "https://api.anthropic.com/v1";
pub const GEMINI_BASE_URL: &str = "https://generativelanguage.googleapis.com/v1beta";
const ANTHROPIC_VERSION: &str = "2023-06-01";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    /// OpenAI chat completions; Fireworks speaks the same protocol.
    OpenAi,
    Anthropic,
    Gemini,
}

pub fn dialect(kind: ProviderKind) -> Option<Dialect> {
    match kind {
        ProviderKind::OpenAi | ProviderKind::Fireworks => Some(Dialect::OpenAi),
        ProviderKind::Anthropic => Some(Dialect::Anthropic),
        ProviderKind::Google => Some(Dialect::Gemini),
        ProviderKind::Mock => None,
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

pub fn build_body(dialect: Dialect, request: &ProviderRequest) -> Value {
    match dialect {
        Dialect::OpenAi => {
            let mut messages = Vec::new();
            if let Some(system) = &request.system {
                messages.push(json!({"role": "system", "content": system}));
            }
            messages.extend(
                request
                    .messages
                    .iter()
                    .map(|m| json!({"role": role_name(m.role), "content": m.content})),
            );
            let mut body = json!({"model": request.model_name, "messages": messages});
            match request.temperature {
                Some(t) => {
                    body["temperature"] = json!(t);
                    body["max_tokens"] = json!(request.max_output_tokens);
                }
                // Reasoning models take neither temperature nor max_tokens.
                None => body["max_completion_tokens"] = json!(request.max_output_tokens),
            }
            body
        }
        Dialect::Anthropic => {
            let messages: Vec<Value> = request
                .messages
                .iter()
                .map(|m| json!({"role": role_name(m.role), "content": m.content}))
                .collect();
            let mut body = json!({
                "model": request.model_name,
                "max_tokens": request.max_output_tokens,
                "messages": messages,
            });
            if let Some(system) = &request.system {
                body["system"] = json!(system);
            }
            if let Some(t) = request.temperature {
                body["temperature"] = json!(t);
            }
            body
        }
        Dialect::Gemini => {
            let contents: Vec<Value> = request
                .messages
                .iter()
                .map(|m| {
                    let role = if m.role == Role::User { "user" } else { "model" };
                    json!({"role": role, "parts": [{"text": m.content}]})
                })
                .collect();
            let mut config = json!({"maxOutputTokens": request.max_output_tokens});
            if let Some(t) = request.temperature {
                config["temperature"] = json!(t);
            }
            let mut body = json!({"contents": contents, "generationConfig": config});
            if let Some(system) = &request.system {
                body["systemInstruction"] = json!({"parts": [{"text": system}]});
            }
            body
        }
    }
}

fn count(value: &Value, pointer: &str) -> u64 {
    value.pointer(pointer).and_then(Value::as_u64).unwrap_or(0)
}

/// Extracts `(text, input_tokens, output_tokens)` from a response body.
pub fn parse_body(dialect: Dialect, body: &Value) -> Result<(String, u64, u64), ProviderError> {
    let bad = || ProviderError::BadResponse(truncate(&body.to_string(), 300));
    match dialect {
        Dialect::OpenAi => {
            let text = body.pointer("/choices/0/message/content").and_then(Value::as_str).ok_or_else(bad)?;
            Ok((text.to_string(), count(body, "/usage/prompt_tokens"), count(body, "/usage/completion_tokens")))
        }
        Dialect::Anthropic => {
            let blocks = body.get("content").and_then(Value::as_array).ok_or_else(bad)?;
            let text: String = blocks
                .iter()
                .filter(|b| b.get("type").and_then(Value::as_str) == Some("text"))
                .filter_map(|b| b.get("text").and_then(Value::as_str))
                .collect();
            Ok((text, count(body, "/usage/input_tokens"), count(body, "/usage/output_tokens")))
        }
        Dialect::Gemini => {
            let parts = body.pointer("/candidates/0/content/parts").and_then(Value::as_array).ok_or_else(bad)?;
            let text: String = parts.iter().filter_map(|p| p.get("text").and_then(Value::as_str)).collect();
            Ok((
                text,
                count(body, "/usageMetadata/promptTokenCount"),
                count(body, "/usageMetadata/candidatesTokenCount"),
            ))
        }
    }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

/// Blocking HTTP adapter for one provider.
pub struct HttpProvider {
    kind: ProviderKind,
    dialect: Dialect,
    base_url: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    /// Reads the provider's API key from its environment variable.
    pub fn from_env(kind: ProviderKind, timeout: Duration) -> Result<Self, ProviderError> {
        let var = kind
            .api_key_var()
            .ok_or_else(|| ProviderError::Unavailable("the mock provider has no HTTP adapter".into()))?;
        let api_key = std::env::var(var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or(ProviderError::MissingApiKey(var))?;
        let base_url = match kind {
            ProviderKind::OpenAi => OPENAI_BASE_URL,
            ProviderKind::Fireworks => FIREWORKS_BASE_URL,
            ProviderKind::Anthropic => ANTHROPIC_BASE_URL,
            _ => GEMINI_BASE_URL,
        };
        Self::new(kind, base_url, api_key, timeout)
    }

    pub fn new(kind: ProviderKind, base_url: &str, api_key: String, timeout: Duration) -> Result<Self, ProviderError> {
        let dialect = dialect(kind).ok_or_else(|| ProviderError::Unavailable("no HTTP dialect for mock".into()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        Ok(HttpProvider {
            kind,
            dialect,
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            client,
        })
    }

    fn endpoint(&self, request: &ProviderRequest) -> String {
        match self.dialect {
            Dialect::OpenAi => format!("{}/chat/completions", self.base_url),
            Dialect::Anthropic => format!("{}/messages", self.base_url),
            Dialect::Gemini => format!("{}/models/{}:generateContent", self.base_url, request.model_name),
        }
    }
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        self.kind.display_name()
    }

    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let body = build_body(self.dialect, request);
        let builder = self.client.post(self.endpoint(request)).json(&body);
        let builder = match self.dialect {
            Dialect::OpenAi => builder.bearer_auth(&self.api_key),
            Dialect::Anthropic => builder
                .header("x-api-key", &self.api_key)
                .header("anthropic-version", ANTHROPIC_VERSION),
            Dialect::Gemini => builder.header("x-goog-api-key", &self.api_key),
        };
        let started = Instant::now();
        let response = builder.send().map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let latency_ms = started.elapsed().as_millis() as u64;
        if !status.is_success() {
            return Err(ProviderError::Http { status: status.as_u16(), body: truncate(&text, 500) });
        }
        let value: Value = serde_json::from_str(&text).map_err(|_| ProviderError::BadResponse(truncate(&text, 300)))?;
        let (text, input_tokens, output_tokens) = parse_body(self.dialect, &value)?;
        log::debug!("{} answered in {latency_ms} ms", self.name());
        Ok(ProviderResponse { text, input_tokens, output_tokens, latency_ms })
    }
}

/// Builds the provider serving `model`, reading credentials from the
/// environment. The mock needs a script and is built elsewhere.
pub fn remote_provider(model: &ModelInfo, timeout: Duration) -> Result<HttpProvider, ProviderError> {
    HttpProvider::from_env(model.provider, timeout)
}
