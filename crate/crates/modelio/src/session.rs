use std::collections::HashMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use btplan_core::prompt::MessageList;
use serde::{Deserialize, Serialize};

use crate::{request_key, Completion, FinishReason, GenParams, ModelError, Provider};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedRequest {
    pub messages: MessageList,
    pub params: GenParams,
}

/// Stored reply. A record without `finish` is a canned answer: replay
/// applies the token cap of the request to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedResponse {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish: Option<FinishReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u32>,
}

impl RecordedResponse {
    pub fn canned(text: impl Into<String>) -> Self {
        RecordedResponse {
            text: text.into(),
            finish: None,
            latency_ms: None,
            prompt_tokens: None,
            completion_tokens: None,
        }
    }
}

/// One file of a session directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub key: String,
    pub request: RecordedRequest,
    pub response: RecordedResponse,
}

impl SessionRecord {
    pub fn new(messages: &MessageList, params: &GenParams, response: RecordedResponse) -> Self {
        SessionRecord {
            key: request_key(messages, params),
            request: RecordedRequest {
                messages: messages.clone(),
                params: params.clone(),
            },
            response,
        }
    }

    /// File name of the `occurrence`-th (0-based) request with `key`.
    pub fn file_name(key: &str, occurrence: usize) -> String {
        match occurrence {
            0 => format!("{key}.json"),
            n => format!("{key}-{n}.json"),
        }
    }

    pub fn save(&self, dir: &Path, occurrence: usize) -> Result<PathBuf, ModelError> {
        let path = dir.join(Self::file_name(&self.key, occurrence));
        let mut json = serde_json::to_string_pretty(self).expect("record serializes");
        json.push('\n');
        fs::write(&path, json)?;
        Ok(path)
    }
}

/// Spans of approximate tokens: runs of alphanumerics, and every other
/// non-whitespace character on its own.
pub fn approx_tokens(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut run: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            run.get_or_insert(i);
            continue;
        }
        if let Some(s) = run.take() {
            spans.push((s, i));
        }
        if !c.is_whitespace() {
            spans.push((i, i + c.len_utf8()));
        }
    }
    if let Some(s) = run {
        spans.push((s, text.len()));
    }
    spans
}

/// Serves completions from a session directory.
#[derive(Debug)]
pub struct ReplayProvider {
    dir: PathBuf,
    seen: Mutex<HashMap<String, usize>>,
}

impl ReplayProvider {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ModelError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(ModelError::Io(std::io::Error::new(
                ErrorKind::NotFound,
                format!("session directory {} does not exist", dir.display()),
            )));
        }
        Ok(ReplayProvider {
            dir,
            seen: Mutex::new(HashMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

fn apply_cap(response: &RecordedResponse, max_new_tokens: u32) -> (String, u32, FinishReason) {
    let spans = approx_tokens(&response.text);
    let cap = max_new_tokens as usize;
    if spans.len() > cap {
        let end = spans[cap - 1].1;
        (response.text[..end].to_string(), max_new_tokens, FinishReason::Length)
    } else {
        (response.text.clone(), spans.len() as u32, FinishReason::Stop)
    }
}

impl Provider for ReplayProvider {
    fn complete(&self, messages: &MessageList, params: &GenParams) -> Result<Completion, ModelError> {
        params.check()?;
        let key = request_key(messages, params);
        let occurrence = {
            let mut seen = self.seen.lock().expect("replay counter lock");
            let n = seen.entry(key.clone()).or_insert(0);
            *n += 1;
            *n - 1
        };
        let path = self.dir.join(SessionRecord::file_name(&key, occurrence));
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == ErrorKind::NotFound => {
                return Err(ModelError::MissingRecording {
                    key,
                    path: path.display().to_string(),
                })
            }
            Err(e) => return Err(e.into()),
        };
        let record: SessionRecord = serde_json::from_str(&text)
            .map_err(|e| ModelError::Protocol(format!("{}: {e}", path.display())))?;
        let r = &record.response;
        let (text, completion_tokens, finish) = match r.finish {
            Some(finish) => (r.text.clone(), r.completion_tokens, finish),
            None => {
                let (text, n, finish) = apply_cap(r, params.max_new_tokens);
                (text, Some(n), finish)
            }
        };
        Ok(Completion {
            text,
            latency: Duration::from_millis(r.latency_ms.unwrap_or(0)),
            prompt_tokens: r.prompt_tokens,
            completion_tokens,
            finish,
        })
    }

    fn max_in_flight(&self) -> usize {
        8
    }
}

/// Wraps a provider and persists every completed exchange.
#[derive(Debug)]
pub struct RecordingProvider<P> {
    inner: P,
    dir: PathBuf,
    seen: Mutex<HashMap<String, usize>>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P, dir: impl Into<PathBuf>) -> Result<Self, ModelError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(RecordingProvider {
            inner,
            dir,
            seen: Mutex::new(HashMap::new()),
        })
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn complete(&self, messages: &MessageList, params: &GenParams) -> Result<Completion, ModelError> {
        let completion = self.inner.complete(messages, params)?;
        let record = SessionRecord::new(
            messages,
            params,
            RecordedResponse {
                text: completion.text.clone(),
                finish: Some(completion.finish),
                latency_ms: Some(completion.latency.as_millis() as u64),
                prompt_tokens: completion.prompt_tokens,
                completion_tokens: completion.completion_tokens,
            },
        );
        // The lock also serializes the file writes.
        let mut seen = self.seen.lock().expect("recorder lock");
        let n = seen.entry(record.key.clone()).or_insert(0);
        record.save(&self.dir, *n)?;
        *n += 1;
        Ok(completion)
    }

    fn max_in_flight(&self) -> usize {
        self.inner.max_in_flight()
    }
}
