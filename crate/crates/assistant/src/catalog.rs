//! Selectable models.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    OpenAi,
    Anthropic,
    Google,
    Fireworks,
    Mock,
}

impl ProviderKind {
    pub fn display_name(self) -> &'static str {
        match self {
            ProviderKind::OpenAi => "OpenAI",
            ProviderKind::Anthropic => "Anthropic",
            ProviderKind::Google => "Google",
            ProviderKind::Fireworks => "Fireworks AI",
            ProviderKind::Mock => "Mock",
        }
    }

    pub fn api_key_var(self) -> Option<&'static str> {
        match self {
            ProviderKind::OpenAi => Some("OPENAI_API_KEY"),
            ProviderKind::Anthropic => Some("ANTHROPIC_API_KEY"),
            ProviderKind::Google => Some("GOOGLE_API_KEY"),
            ProviderKind::Fireworks => Some("FIREWORKS_API_KEY"),
            ProviderKind::Mock => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelInfo {
    /// Human-facing name, also accepted when selecting.
    pub name: &'static str,
    /// Short slug, also accepted when selecting.
    pub slug: &'static str,
    pub provider: ProviderKind,
    /// Identifier sent to the provider API.
    pub api_model: &'static str,
    pub supports_temperature: bool,
}

const fn model(
    name: &'static str,
    slug: &'static str,
    provider: ProviderKind,
    api_model: &'static str,
    supports_temperature: bool,
) -> ModelInfo {
    ModelInfo { name, slug, provider, api_model, supports_temperature }
}

pub const MODELS: &[ModelInfo] = &[
    model("GPT-4o", "gpt-4o", ProviderKind::OpenAi, "gpt-4o", true),
    model("GPT-4o mini", "gpt-4o-mini", ProviderKind::OpenAi, "gpt-4o-mini", true),
    // Reasoning models reject `temperature`.
    model("o3-mini", "o3-mini", ProviderKind::OpenAi, "o3-mini", false),
    model("Claude 3.5 Sonnet", "claude-3-5-sonnet", ProviderKind::Anthropic, "claude-3-5-sonnet-20241022", true),
    model("Gemini 2.0 Flash", "gemini-2.0-flash", ProviderKind::Google, "gemini-2.0-flash", true),
    model("Llama 3.3 70B", "llama-3.3-70b", ProviderKind::Fireworks, "accounts/fireworks/models/llama-v3p3-70b-instruct", true),
    model("Qwen 2.5 72B", "qwen-2.5-72b", ProviderKind::Fireworks, "accounts/fireworks/models/qwen2p5-72b-instruct", true),
    model("Deepseek V3", "deepseek-v3", ProviderKind::Fireworks, "accounts/fireworks/models/deepseek-v3", true),
    model("mock", "mock", ProviderKind::Mock, "mock", true),
];

pub const DEFAULT_MODEL: &str = "mock";

/// Looks a model up by display name or slug, ignoring case and a trailing
/// "Instruct".
pub fn find_model(name: &str) -> Option<&'static ModelInfo> {
    let name = name.trim();
    let name = match name.len().checked_sub(" instruct".len()) {
        Some(cut) if name.is_char_boundary(cut) && name[cut..].eq_ignore_ascii_case(" instruct") => &name[..cut],
        _ => name,
    };
    MODELS
        .iter()
        .find(|m| m.name.eq_ignore_ascii_case(name) || m.slug.eq_ignore_ascii_case(name))
}

/// Resolves a `--provider` style argument: a model name, or a provider name
/// meaning that provider's first listed model.
pub fn resolve(name: &str) -> Option<&'static ModelInfo> {
    find_model(name).or_else(|| {
        let wanted = name.trim().to_ascii_lowercase().replace([' ', '-', '_'], "");
        MODELS.iter().find(|m| {
            let provider = m.provider.display_name().to_ascii_lowercase().replace([' ', '-', '_'], "");
            provider == wanted || provider.trim_end_matches("ai") == wanted
        })
    })
}
