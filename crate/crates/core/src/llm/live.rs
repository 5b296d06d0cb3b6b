use std::time::Duration;

use serde_json::{json, Value};

use super::{CompletionRequest, LlmError, LlmProvider};

pub const ENV_ENDPOINT: &str = "TEXTFUZZ_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "TEXTFUZZ_LLM_API_KEY";
pub const ENV_MODEL: &str = "TEXTFUZZ_LLM_MODEL";

const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

/// OpenAI-style chat-completions client.
#[derive(Debug)]
pub struct LiveProvider {
    endpoint: String,
    api_key: String,
    model: String,
    agent: ureq::Agent,
}

impl LiveProvider {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            model: model.into(),
            agent: ureq::Agent::new_with_config(config),
        }
    }

    pub fn from_env() -> Result<Self, LlmError> {
        let key = std::env::var(ENV_API_KEY)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| LlmError::ProviderUnavailable(format!("{ENV_API_KEY} is not set")))?;
        let endpoint = std::env::var(ENV_ENDPOINT).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string());
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| DEFAULT_MODEL.to_string());
        Ok(Self::new(endpoint, key, model))
    }
}

impl LlmProvider for LiveProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let unavailable = |e: ureq::Error| LlmError::ProviderUnavailable(e.to_string());
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(unavailable)?;
        let value: Value = resp.body_mut().read_json().map_err(unavailable)?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::ProviderUnavailable("response has no message content".into()))
    }
}
