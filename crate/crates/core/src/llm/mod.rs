//! Chat-model gateway.
//!
//! Agents talk to a [`Gateway`], which validates the conversation, counts
//! calls and forwards to a [`ChatBackend`]: either an HTTP chat-completions
//! endpoint ([`HttpBackend`]) or a scripted replay ([`ReplayBackend`]).

mod http;
mod replay;

pub use http::{HttpBackend, HttpSettings, ENV_KEY, ENV_MODEL, ENV_URL};
pub use replay::{ReplayBackend, ReplayItem};

use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub max_response_tokens: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            temperature: 0.0,
            top_p: 1.0,
            max_response_tokens: 1024,
        }
    }
}

impl SamplingConfig {
    /// Stochastic sampling used when runs are repeated and aggregated.
    pub fn repetition() -> Self {
        SamplingConfig {
            temperature: 0.6,
            top_p: 0.9,
            ..SamplingConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(format!("sampling.temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("sampling.top_p must be in (0, 1], got {}", self.top_p));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("invalid conversation: {0}")]
    Precondition(String),
    #[error("context length exceeded: {0}")]
    ContextOverflow(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend rejected the request: {0}")]
    Backend(String),
    #[error("replay script {script} exhausted at turn {turn}")]
    ScriptExhausted { script: String, turn: usize },
}

/// Something that produces the next assistant turn.
pub trait ChatBackend: Send + Sync {
    fn respond(&self, history: &[ChatMessage], sampling: &SamplingConfig) -> Result<String, GatewayError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for Arc<T> {
    fn respond(&self, history: &[ChatMessage], sampling: &SamplingConfig) -> Result<String, GatewayError> {
        (**self).respond(history, sampling)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn respond(&self, history: &[ChatMessage], sampling: &SamplingConfig) -> Result<String, GatewayError> {
        (**self).respond(history, sampling)
    }
}

/// Validating front for a backend.
pub struct Gateway<B> {
    backend: B,
    calls: AtomicUsize,
    context_limit: Option<usize>,
}

impl<B: ChatBackend> Gateway<B> {
    pub fn new(backend: B) -> Self {
        Gateway {
            backend,
            calls: AtomicUsize::new(0),
            context_limit: None,
        }
    }

    /// Reject requests locally when the estimated prompt plus the response
    /// budget exceeds `tokens`.
    pub fn with_context_limit(mut self, tokens: usize) -> Self {
        self.context_limit = Some(tokens);
        self
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    /// Number of backend requests made so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Next assistant turn for `history`. The history is not modified.
    pub fn complete(&self, history: &[ChatMessage], sampling: &SamplingConfig) -> Result<ChatMessage, GatewayError> {
        match history.first() {
            Some(m) if m.role == Role::System => {}
            _ => {
                return Err(GatewayError::Precondition(
                    "conversation must start with a system message".into(),
                ))
            }
        }
        if history[1..].iter().any(|m| m.role == Role::System) {
            return Err(GatewayError::Precondition("only one system message is allowed".into()));
        }
        if let Some(limit) = self.context_limit {
            let need = count_tokens_estimate(history) + sampling.max_response_tokens;
            if need > limit {
                return Err(GatewayError::ContextOverflow(format!(
                    "estimated {need} tokens exceeds the {limit}-token window"
                )));
            }
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = self.backend.respond(history, sampling)?;
        let text = if text.trim().is_empty() {
            "(empty response)".to_string()
        } else {
            text
        };
        Ok(ChatMessage::assistant(text))
    }
}

const MESSAGE_OVERHEAD: usize = 4;

/// Rough token count of a conversation: per message, the larger of 1.3
/// tokens per whitespace-separated word and one token per four characters,
/// plus a small framing overhead.
pub fn count_tokens_estimate(history: &[ChatMessage]) -> usize {
    history
        .iter()
        .map(|m| {
            let words = m.content.split_whitespace().count();
            let chars = m.content.chars().count();
            let by_words = (words * 13).div_ceil(10);
            let by_chars = chars.div_ceil(4);
            MESSAGE_OVERHEAD + by_words.max(by_chars)
        })
        .sum()
}
