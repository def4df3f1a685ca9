//! Language-model orchestration for BPMN modelling: intent routing,
//! generation and editing with retries, chat sessions and the modality
//! benchmark.

pub mod assistant;
pub mod benchmark;
pub mod catalog;
pub mod extract;
pub mod http;
pub mod mock;
pub mod pipeline;
pub mod prompts;
pub mod provider;
pub mod registry;
pub mod session;

pub use assistant::{Artifact, Assistant, AssistantConfig, AssistantError, Attempt, Intent, Modality, Usage};
pub use catalog::{find_model, ModelInfo, ProviderKind, DEFAULT_MODEL, MODELS};
pub use mock::{MockProvider, MockScript};
pub use pipeline::{handle_turn, ChatTurnResult, TurnError};
pub use provider::{Message, Provider, ProviderError, ProviderRequest, ProviderResponse, Purpose, Role};
pub use registry::Providers;
pub use session::{CurrentModel, NothingToDownload, Session, UploadError, UploadOutcome};
