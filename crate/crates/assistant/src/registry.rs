//! Maps a selected model to the provider instance that serves it.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::assistant::{Assistant, AssistantConfig};
use crate::catalog::{find_model, ModelInfo, ProviderKind};
use crate::http::HttpProvider;
use crate::mock::{MockProvider, MockScript};
use crate::provider::{Provider, ProviderError};

/// Remote adapters are built on first use and shared afterwards.
pub struct Providers {
    mock: Arc<MockProvider>,
    timeout: Duration,
    remote: Mutex<HashMap<ProviderKind, Arc<dyn Provider>>>,
    pub config: AssistantConfig,
}

impl Providers {
    pub fn new(mock_script: MockScript, timeout: Duration, config: AssistantConfig) -> Self {
        Providers {
            mock: Arc::new(MockProvider::new(mock_script)),
            timeout,
            remote: Mutex::new(HashMap::new()),
            config,
        }
    }

    /// Only the echoing mock; nothing remote is ever contacted unless a
    /// remote model is selected.
    pub fn offline() -> Self {
        Providers::new(MockScript::echo(), Duration::from_secs(60), AssistantConfig::default())
    }

    pub fn mock(&self) -> &Arc<MockProvider> {
        &self.mock
    }

    pub fn provider_for(&self, model: &ModelInfo) -> Result<Arc<dyn Provider>, ProviderError> {
        if model.provider == ProviderKind::Mock {
            return Ok(self.mock.clone());
        }
        let mut remote = self.remote.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(p) = remote.get(&model.provider) {
            return Ok(p.clone());
        }
        let provider: Arc<dyn Provider> = Arc::new(HttpProvider::from_env(model.provider, self.timeout)?);
        remote.insert(model.provider, provider.clone());
        Ok(provider)
    }

    pub fn assistant(&self, model_name: &str) -> Result<Assistant, ProviderError> {
        self.assistant_with(model_name, &self.mock)
    }

    /// Like [`Providers::assistant`] but answers mock requests from `mock`,
    /// typically a per-session [`MockProvider::fresh`] copy so scripted
    /// sequences do not leak between sessions.
    pub fn assistant_with(&self, model_name: &str, mock: &Arc<MockProvider>) -> Result<Assistant, ProviderError> {
        let model = find_model(model_name)
            .ok_or_else(|| ProviderError::Unavailable(format!("unknown model `{model_name}`")))?;
        let provider: Arc<dyn Provider> = if model.provider == ProviderKind::Mock {
            mock.clone()
        } else {
            self.provider_for(model)?
        };
        Ok(Assistant::new(provider, model, self.config))
    }
}
