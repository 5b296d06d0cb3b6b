use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use super::{CompletionRequest, LlmError, LlmProvider};

/// Scripted provider: a JSON object mapping seed tag to a response list.
///
/// A tag with no entry falls back to its prefixes, dropping one trailing
/// `:segment` at a time, so `Shop/Filter:gen:k5` may be answered by
/// `Shop/Filter:gen`. Repeated calls cycle through the resolved list.
#[derive(Debug)]
pub struct MockProvider {
    script: BTreeMap<String, Vec<String>>,
    state: Mutex<MockState>,
}

#[derive(Debug, Default)]
struct MockState {
    cursors: HashMap<String, usize>,
    transcript: Vec<(String, String)>,
}

impl MockProvider {
    pub fn new(script: BTreeMap<String, Vec<String>>) -> Self {
        Self {
            script,
            state: Mutex::new(MockState::default()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let script: BTreeMap<String, Vec<String>> = serde_json::from_str(text)
            .map_err(|e| LlmError::ProviderUnavailable(format!("mock script: {e}")))?;
        if let Some((tag, _)) = script.iter().find(|(_, v)| v.is_empty()) {
            return Err(LlmError::ProviderUnavailable(format!("mock script: tag `{tag}` has no responses")));
        }
        Ok(Self::new(script))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::ProviderUnavailable(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn resolve(&self, tag: &str) -> Option<&str> {
        let mut key = tag;
        loop {
            if let Some((k, _)) = self.script.get_key_value(key) {
                return Some(k);
            }
            key = &key[..key.rfind(':')?];
        }
    }

    /// (seed tag, response) pairs in call order.
    pub fn transcript(&self) -> Vec<(String, String)> {
        self.state.lock().expect("mock state").transcript.clone()
    }
}

impl LlmProvider for MockProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let key = self
            .resolve(&request.seed_tag)
            .ok_or_else(|| LlmError::ProviderUnavailable(format!("no scripted response for `{}`", request.seed_tag)))?;
        let responses = &self.script[key];
        let mut state = self.state.lock().expect("mock state");
        let cursor = state.cursors.entry(key.to_string()).or_insert(0);
        let out = responses[*cursor % responses.len()].clone();
        *cursor += 1;
        state.transcript.push((request.seed_tag.clone(), out.clone()));
        Ok(out)
    }
}
