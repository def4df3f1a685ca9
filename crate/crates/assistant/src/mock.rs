//! Scripted provider for tests, demos and offline benchmarks.
//!
//! A script is a list of entries. An entry matches a request when every
//! matcher it declares holds: `purpose`, `contains` (substrings searched in
//! the system prompt and all messages) and `fingerprint` (see
//! [`fingerprint`]). The first matching entry answers. Its `responses` are
//! handed out in order and the last one repeats.

use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::provider::{
    estimate_tokens, request_input_text, Provider, ProviderError, ProviderRequest, ProviderResponse, Purpose,
};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read mock script {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid mock script: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("mock script entry {0} has no responses")]
    EmptyEntry(usize),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ScriptedResponse {
    Text(String),
    Full(ResponseSpec),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSpec {
    pub text: Option<String>,
    /// Convenience for JSON payloads: serialized compactly as the text.
    pub json: Option<Value>,
    /// Reply with the content of the last user message.
    #[serde(default)]
    pub echo: bool,
    /// Simulated failure: `timeout`/`unavailable`, or an HTTP status code.
    pub error: Option<Value>,
    pub input_tokens: Option<u64>,
    pub output_tokens: Option<u64>,
    pub latency_ms: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    purpose: Option<Purpose>,
    contains: Option<OneOrMany<String>>,
    fingerprint: Option<String>,
    response: Option<ScriptedResponse>,
    responses: Option<Vec<ScriptedResponse>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptEntry {
    pub purpose: Option<Purpose>,
    pub contains: Vec<String>,
    pub fingerprint: Option<String>,
    pub responses: Vec<ScriptedResponse>,
}

impl ScriptEntry {
    fn matches(&self, request: &ProviderRequest, print: &str, haystack: &str) -> bool {
        self.purpose.is_none_or(|p| p == request.purpose)
            && self.fingerprint.as_deref().is_none_or(|f| f.eq_ignore_ascii_case(print))
            && self.contains.iter().all(|needle| haystack.contains(needle.as_str()))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MockScript {
    pub entries: Vec<ScriptEntry>,
}

impl MockScript {
    /// Accepts `{"entries": [...]}` or a bare array of entries.
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Root {
            Wrapped { entries: Vec<RawEntry> },
            Bare(Vec<RawEntry>),
        }
        let raw = match serde_json::from_str::<Root>(text)? {
            Root::Wrapped { entries } | Root::Bare(entries) => entries,
        };
        let mut entries = Vec::with_capacity(raw.len());
        for (i, e) in raw.into_iter().enumerate() {
            let mut responses: Vec<ScriptedResponse> = e.response.into_iter().collect();
            responses.extend(e.responses.unwrap_or_default());
            if responses.is_empty() {
                return Err(ScriptError::EmptyEntry(i));
            }
            entries.push(ScriptEntry {
                purpose: e.purpose,
                contains: e.contains.map(OneOrMany::into_vec).unwrap_or_default(),
                fingerprint: e.fingerprint,
                responses,
            });
        }
        Ok(MockScript { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// A script that echoes every request.
    pub fn echo() -> Self {
        MockScript {
            entries: vec![ScriptEntry {
                purpose: None,
                contains: Vec::new(),
                fingerprint: None,
                responses: vec![ScriptedResponse::Full(ResponseSpec { echo: true, ..Default::default() })],
            }],
        }
    }

    pub fn push(&mut self, purpose: Option<Purpose>, contains: &[&str], responses: Vec<ScriptedResponse>) -> &mut Self {
        self.entries.push(ScriptEntry {
            purpose,
            contains: contains.iter().map(|s| s.to_string()).collect(),
            fingerprint: None,
            responses,
        });
        self
    }
}

/// SHA-256 over the purpose, system prompt and messages. The model name and
/// sampling parameters are left out so a script works for any model.
pub fn fingerprint(request: &ProviderRequest) -> String {
    let canonical = json!({
        "purpose": request.purpose,
        "system": request.system,
        "messages": request.messages,
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

/// Replays a [`MockScript`]. Consumption counters sit behind a mutex so one
/// instance can serve several sessions.
#[derive(Debug)]
pub struct MockProvider {
    script: MockScript,
    used: Mutex<Vec<usize>>,
}

impl MockProvider {
    pub fn new(script: MockScript) -> Self {
        let used = Mutex::new(vec![0; script.entries.len()]);
        MockProvider { script, used }
    }

    /// Same script, counters reset.
    pub fn fresh(&self) -> Self {
        MockProvider::new(self.script.clone())
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let started = Instant::now();
        let print = fingerprint(request);
        let haystack = request_input_text(request);
        let Some(index) = self.script.entries.iter().position(|e| e.matches(request, &print, &haystack)) else {
            return Err(ProviderError::Unavailable(format!(
                "mock script has no response for this {:?} request (fingerprint {print})",
                request.purpose
            )));
        };
        let entry = &self.script.entries[index];
        let turn = {
            let mut used = self.used.lock().unwrap_or_else(|p| p.into_inner());
            let turn = used[index].min(entry.responses.len() - 1);
            used[index] += 1;
            turn
        };
        let spec = match &entry.responses[turn] {
            ScriptedResponse::Text(text) => ResponseSpec { text: Some(text.clone()), ..Default::default() },
            ScriptedResponse::Full(spec) => spec.clone(),
        };
        if let Some(error) = &spec.error {
            return Err(match error {
                Value::Number(n) => ProviderError::Http {
                    status: n.as_u64().unwrap_or(500) as u16,
                    body: "scripted failure".into(),
                },
                Value::String(s) if s == "timeout" => ProviderError::Unavailable("request timed out".into()),
                other => ProviderError::Unavailable(format!("scripted failure: {other}")),
            });
        }
        let text = if spec.echo {
            request
                .messages
                .iter()
                .rev()
                .find(|m| m.role == crate::provider::Role::User)
                .map(|m| m.content.clone())
                .unwrap_or_default()
        } else if let Some(value) = &spec.json {
            value.to_string()
        } else {
            spec.text.clone().unwrap_or_default()
        };
        Ok(ProviderResponse {
            input_tokens: spec.input_tokens.unwrap_or_else(|| estimate_tokens(&haystack)),
            output_tokens: spec.output_tokens.unwrap_or_else(|| estimate_tokens(&text)),
            latency_ms: spec.latency_ms.unwrap_or_else(|| started.elapsed().as_millis() as u64),
            text,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::Message;

    fn request(purpose: Purpose, text: &str) -> ProviderRequest {
        ProviderRequest {
            model_name: "mock".into(),
            purpose,
            system: Some("system".into()),
            messages: vec![Message::user(text)],
            temperature: Some(0.0),
            max_output_tokens: 100,
        }
    }

    #[test]
    fn sequences_advance_and_last_repeats() {
        let script = MockScript::from_json(
            r#"[{"purpose": "generate", "responses": ["one", {"text": "two", "input_tokens": 7}]}]"#,
        )
        .unwrap();
        let mock = MockProvider::new(script);
        let r = request(Purpose::Generate, "x");
        assert_eq!(mock.complete(&r).unwrap().text, "one");
        let second = mock.complete(&r).unwrap();
        assert_eq!((second.text.as_str(), second.input_tokens), ("two", 7));
        assert_eq!(mock.complete(&r).unwrap().text, "two");
        assert_eq!(mock.fresh().complete(&r).unwrap().text, "one");
        assert!(matches!(mock.complete(&request(Purpose::Edit, "x")), Err(ProviderError::Unavailable(_))));
    }

    #[test]
    fn matchers_combine() {
        let r = request(Purpose::Classify, "please model a clerk");
        let print = fingerprint(&r);
        let script = MockScript::from_json(&format!(
            r#"{{"entries": [
                {{"contains": ["clerk", "nurse"], "response": "both"}},
                {{"fingerprint": "{}", "response": "by print"}},
                {{"contains": "clerk", "response": "by text"}}
            ]}}"#,
            print.to_uppercase()
        ))
        .unwrap();
        let mock = MockProvider::new(script);
        assert_eq!(mock.complete(&r).unwrap().text, "by print");
        assert_eq!(mock.complete(&request(Purpose::Respond, "clerk")).unwrap().text, "by text");
    }

    #[test]
    fn fingerprint_ignores_model_and_sampling() {
        let a = request(Purpose::Generate, "x");
        let mut b = a.clone();
        b.model_name = "gpt-4o".into();
        b.temperature = None;
        assert_eq!(fingerprint(&a), fingerprint(&b));
        b.messages.push(Message::assistant("y"));
        assert_ne!(fingerprint(&a), fingerprint(&b));
        assert_eq!(fingerprint(&a).len(), 64);
    }

    #[test]
    fn echo_errors_and_json_payloads() {
        let echo = MockProvider::new(MockScript::echo());
        let reply = echo.complete(&request(Purpose::Respond, "hello there")).unwrap();
        assert_eq!(reply.text, "hello there");
        assert_eq!(reply.output_tokens, estimate_tokens("hello there"));

        let script = MockScript::from_json(
            r#"[{"purpose": "respond", "response": {"error": "timeout"}},
                {"purpose": "edit", "response": {"error": 503}},
                {"response": {"json": {"a": [1, 2]}}}]"#,
        )
        .unwrap();
        let mock = MockProvider::new(script);
        assert!(matches!(mock.complete(&request(Purpose::Respond, "")), Err(ProviderError::Unavailable(_))));
        assert!(matches!(mock.complete(&request(Purpose::Edit, "")), Err(ProviderError::Http { status: 503, .. })));
        assert_eq!(mock.complete(&request(Purpose::Generate, "")).unwrap().text, r#"{"a":[1,2]}"#);
    }

    #[test]
    fn bad_scripts_are_rejected() {
        assert!(matches!(MockScript::from_json(r#"[{"purpose": "edit"}]"#), Err(ScriptError::EmptyEntry(0))));
        assert!(MockScript::from_json(r#"[{"purpose": "dance", "response": "x"}]"#).is_err());
    }
}
