//! Chat-completion gateway with live, replay and scripted sources, plus the
//! JSON sanitizer shared by agents that expect structured output.

mod gateway;
mod http;
mod sanitize;

pub use gateway::{Gateway, Source};
pub use http::ProviderConfig;
pub use sanitize::{sanitize_structured, SanitizeError};

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    SpecParsing,
    CodeGen,
    TbGen,
    Debug,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::SpecParsing, AgentKind::CodeGen, AgentKind::TbGen, AgentKind::Debug];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::SpecParsing => "spec_parsing",
            AgentKind::CodeGen => "code_gen",
            AgentKind::TbGen => "tb_gen",
            AgentKind::Debug => "debug",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub system_prompt: String,
    pub user_payload: String,
    pub temperature: f64,
    pub max_output_chars: usize,
    pub agent_kind: AgentKind,
}

impl LlmRequest {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature.is_finite() && (0.0..=2.0).contains(&self.temperature)) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.user_payload.is_empty() {
            return Err(LlmError::InvalidRequest("empty user payload".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 over a compact JSON array of `[key, value]` pairs for the
    /// prompt, temperature and payload, in key order.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(&(
            ("system_prompt", &self.system_prompt),
            ("temperature", self.temperature),
            ("user_payload", &self.user_payload),
        ))
        .expect("strings and floats serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub provider_id: String,
    pub elapsed_ms: u64,
    /// The provider reported that output was cut off.
    pub truncated: bool,
}

impl LlmResponse {
    pub fn scripted(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            provider_id: "scripted".into(),
            elapsed_ms: 0,
            truncated: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptMode {
    Record,
    Replay,
    Scripted,
}

/// One line of a JSON-lines transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_kind: Option<AgentKind>,
    pub response: LlmResponse,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("transcript line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptEntry>, TranscriptError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| TranscriptError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn render_transcript(entries: &[TranscriptEntry]) -> String {
    entries
        .iter()
        .map(|e| serde_json::to_string(e).expect("entries serialize") + "\n")
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("provider response malformed: {0}")]
    Protocol(String),
    #[error("no recorded response for request digest {digest}")]
    ReplayMiss { digest: String },
    #[error("scripted transcript exhausted after {consumed} response(s)")]
    ScriptExhausted { consumed: usize },
    #[error("live provider calls are disabled for this gateway")]
    Offline,
    #[error("transcript write failed: {0}")]
    Io(String),
}

impl LlmError {
    /// Failures of the environment rather than of the model's output.
    pub fn is_environmental(&self) -> bool {
        matches!(
            self,
            LlmError::Transport { .. }
                | LlmError::Auth { .. }
                | LlmError::Http { .. }
                | LlmError::Protocol(_)
                | LlmError::ReplayMiss { .. }
                | LlmError::ScriptExhausted { .. }
                | LlmError::Offline
                | LlmError::Io(_)
        )
    }
}
