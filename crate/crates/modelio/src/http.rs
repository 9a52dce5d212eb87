use std::time::Instant;

use btplan_core::prompt::MessageList;
use serde::{Deserialize, Serialize};

use crate::{Completion, FinishReason, GenParams, ModelError, Provider};

/// Client for an OpenAI-style `POST {base}/chat/completions` endpoint.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    max_in_flight: usize,
}

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    messages: &'a MessageList,
    max_tokens: u32,
    temperature: f64,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    stop: &'a [String],
}

#[derive(Deserialize)]
struct Response {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: Option<u32>,
    completion_tokens: Option<u32>,
}

impl HttpProvider {
    /// `base` is the API root, e.g. `http://localhost:8000/v1`.
    pub fn new(base: &str) -> Result<Self, ModelError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| ModelError::Transport(e.to_string()))?;
        Ok(HttpProvider {
            url: format!("{}/chat/completions", base.trim_end_matches('/')),
            api_key: None,
            client,
            max_in_flight: 1,
        })
    }

    /// Reads a bearer token from `var` if it is set.
    pub fn with_api_key_env(mut self, var: &str) -> Self {
        self.api_key = std::env::var(var).ok().filter(|k| !k.is_empty());
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

fn finish_reason(raw: Option<&str>) -> FinishReason {
    match raw {
        Some("length") => FinishReason::Length,
        Some("stop") | Some("eos") | None => FinishReason::Stop,
        Some(_) => FinishReason::Error,
    }
}

impl Provider for HttpProvider {
    fn complete(&self, messages: &MessageList, params: &GenParams) -> Result<Completion, ModelError> {
        params.check()?;
        let body = Request {
            model: &params.model,
            messages,
            max_tokens: params.max_new_tokens,
            temperature: params.temperature,
            stop: &params.stop,
        };
        let mut request = self.client.post(&self.url).timeout(params.timeout()).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let transport = |e: reqwest::Error| {
            if e.is_timeout() {
                ModelError::Timeout(params.timeout())
            } else {
                ModelError::Transport(e.to_string())
            }
        };
        let start = Instant::now();
        let response = request.send().map_err(transport)?;
        let status = response.status();
        let text = response.text().map_err(transport)?;
        let latency = start.elapsed();
        if !status.is_success() {
            let snippet: String = text.chars().take(200).collect();
            return Err(ModelError::Transport(format!("HTTP {status}: {snippet}")));
        }
        let parsed: Response = serde_json::from_str(&text).map_err(|e| ModelError::Protocol(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ModelError::Protocol("response has no choices".into()))?;
        let usage = parsed.usage;
        Ok(Completion {
            text: choice.message.content.unwrap_or_default(),
            latency,
            prompt_tokens: usage.as_ref().and_then(|u| u.prompt_tokens),
            completion_tokens: usage.as_ref().and_then(|u| u.completion_tokens),
            finish: finish_reason(choice.finish_reason.as_deref()),
        })
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}
