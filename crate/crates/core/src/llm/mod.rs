//! Chat-completion providers and the keyword-anchored response parsers.

mod live;
mod mock;
mod parse;

use std::sync::atomic::{AtomicUsize, Ordering};

use thiserror::Error;

pub use live::LiveProvider;
pub use mock::MockProvider;
pub use parse::{
    parse_generator_response, parse_valid_input_response, render_generator_response, GeneratorResponse,
    ResponseMarkers, ValidInputResponse,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("LLM call budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("could not parse response: {0}")]
    ParseMiss(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Routing key for scripted providers, e.g. `Wallet/RegisterActivity:valid`.
    pub seed_tag: String,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>, seed_tag: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            temperature: 0.0,
            max_tokens: 1024,
            seed_tag: seed_tag.into(),
        }
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t.clamp(0.0, 2.0);
        self
    }
}

pub trait LlmProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError>;
}

impl<P: LlmProvider + ?Sized> LlmProvider for &P {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

impl<P: LlmProvider + ?Sized> LlmProvider for Box<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

/// Fails with `BudgetExhausted` once `cap` calls have been made.
#[derive(Debug)]
pub struct CappedProvider<P> {
    inner: P,
    cap: usize,
    used: AtomicUsize,
}

impl<P: LlmProvider> CappedProvider<P> {
    pub fn new(inner: P, cap: usize) -> Self {
        Self {
            inner,
            cap,
            used: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.used.load(Ordering::SeqCst).min(self.cap)
    }
}

impl<P: LlmProvider> LlmProvider for CappedProvider<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let slot = self.used.fetch_add(1, Ordering::SeqCst);
        if slot >= self.cap {
            return Err(LlmError::BudgetExhausted(self.cap));
        }
        self.inner.complete(request)
    }
}
