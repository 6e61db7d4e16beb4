use super::{ChatBackend, ChatMessage, GatewayError, SamplingConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Mutex;

/// One scripted turn: either the assistant text or a simulated failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReplayItem {
    Text(String),
    /// `{"error": "context_length_exceeded"}` simulates a context overflow,
    /// `{"error": "transport"}` a network failure; anything else is a
    /// generic backend rejection.
    Error {
        error: String,
    },
}

impl ReplayItem {
    pub fn error(kind: impl Into<String>) -> Self {
        ReplayItem::Error { error: kind.into() }
    }
}

/// Deterministic backend that serves a fixed script, one item per request.
#[derive(Debug)]
pub struct ReplayBackend {
    label: String,
    items: Vec<ReplayItem>,
    cursor: Mutex<usize>,
}

impl ReplayBackend {
    pub fn new(label: impl Into<String>, items: Vec<ReplayItem>) -> Self {
        ReplayBackend {
            label: label.into(),
            items,
            cursor: Mutex::new(0),
        }
    }

    pub fn from_texts<S: Into<String>>(label: impl Into<String>, texts: impl IntoIterator<Item = S>) -> Self {
        ReplayBackend::new(label, texts.into_iter().map(|t| ReplayItem::Text(t.into())).collect())
    }

    /// Parse a replay document: a JSON array of strings or error objects.
    pub fn from_json(label: impl Into<String>, text: &str) -> Result<Self, String> {
        let items: Vec<ReplayItem> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Ok(ReplayBackend::new(label, items))
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        ReplayBackend::from_json(path.display().to_string(), &text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn consumed(&self) -> usize {
        *self.cursor.lock().expect("cursor lock")
    }

    pub fn remaining(&self) -> usize {
        self.items.len() - self.consumed()
    }

    /// Error unless every scripted item was consumed.
    pub fn finish(&self) -> Result<(), String> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(format!("replay script {} has {n} unconsumed item(s)", self.label)),
        }
    }
}

impl ChatBackend for ReplayBackend {
    fn respond(&self, _history: &[ChatMessage], _sampling: &SamplingConfig) -> Result<String, GatewayError> {
        let mut cursor = self.cursor.lock().expect("cursor lock");
        let turn = *cursor;
        let item = self.items.get(turn).ok_or_else(|| GatewayError::ScriptExhausted {
            script: self.label.clone(),
            turn,
        })?;
        *cursor += 1;
        match item {
            ReplayItem::Text(t) => Ok(t.clone()),
            ReplayItem::Error { error } if error == "context_length_exceeded" => Err(GatewayError::ContextOverflow(
                format!("scripted overflow at turn {turn}"),
            )),
            ReplayItem::Error { error } if error == "transport" => Err(GatewayError::Transport(format!(
                "scripted transport failure at turn {turn}"
            ))),
            ReplayItem::Error { error } => Err(GatewayError::Backend(error.clone())),
        }
    }
}
