//! Chat-completion providers: an HTTP client for the common
//! `/chat/completions` wire format, plus recording and replay of sessions.

mod http;
mod session;

use std::time::Duration;

use btplan_core::prompt::MessageList;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use http::HttpProvider;
pub use session::{approx_tokens, RecordedRequest, RecordedResponse, RecordingProvider, ReplayProvider, SessionRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    pub model: String,
    pub max_new_tokens: u32,
    pub temperature: f64,
    #[serde(default)]
    pub stop: Vec<String>,
    /// Request timeout; not part of the session key.
    #[serde(default = "default_timeout", skip_serializing)]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    300
}

impl GenParams {
    pub fn new(model: impl Into<String>) -> Self {
        GenParams {
            model: model.into(),
            max_new_tokens: 1000,
            temperature: 0.0,
            stop: Vec::new(),
            timeout_secs: default_timeout(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        if self.max_new_tokens == 0 {
            return Err(ModelError::InvalidParams("max_new_tokens must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(ModelError::InvalidParams("temperature must be a non-negative number".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    /// Generation hit `max_new_tokens`.
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    /// Wall-clock time of the transport call.
    pub latency: Duration,
    pub prompt_tokens: Option<u32>,
    pub completion_tokens: Option<u32>,
    pub finish: FinishReason,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("no recording for request {key} (looked for {path})")]
    MissingRecording { key: String, path: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A chat-completion backend. Handles are shared across worker threads.
pub trait Provider: Send + Sync {
    fn complete(&self, messages: &MessageList, params: &GenParams) -> Result<Completion, ModelError>;

    /// Maximum number of requests the caller should keep in flight.
    fn max_in_flight(&self) -> usize {
        1
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn complete(&self, messages: &MessageList, params: &GenParams) -> Result<Completion, ModelError> {
        (**self).complete(messages, params)
    }

    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

#[derive(Serialize)]
struct KeyMaterial<'a> {
    messages: &'a MessageList,
    params: &'a GenParams,
}

/// Content hash of a request: SHA-256 of its canonical JSON, hex encoded.
pub fn request_key(messages: &MessageList, params: &GenParams) -> String {
    let json = serde_json::to_vec(&KeyMaterial { messages, params }).expect("request serializes");
    hex::encode(Sha256::digest(&json))
}
