//! Summarization backends: the abstract completion contract, a
//! deterministic mock for tests, and a JSON-over-HTTP chat-completions
//! adapter, plus the retrying `summarize` entry point.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::SummaryRequest;
use crate::{Error, Result};

/// One completion request; temperature is pinned to 0 for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
}

/// Anything that can turn a prompt into a completion. Implementations map
/// transport failures to [`Error::Service`].
pub trait SummarizationClient {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse>;
}

/// Retry schedule for transient service failures: `attempts` tries total,
/// sleeping `base_delay * 2^k` between consecutive tries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(250) }
    }
}

/// A completion plus how many retries it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub text: String,
    pub retries: u32,
}

/// Runs a summary request against a client with the default retry policy.
pub fn summarize(req: &SummaryRequest, client: &dyn SummarizationClient) -> Result<Summary> {
    summarize_with(req, client, &RetryPolicy::default())
}

/// Runs a summary request, retrying transient service errors with
/// exponential backoff. Validation errors and empty completions fail
/// immediately.
pub fn summarize_with(
    req: &SummaryRequest,
    client: &dyn SummarizationClient,
    policy: &RetryPolicy,
) -> Result<Summary> {
    let completion_req = CompletionRequest {
        prompt: req.prompt.clone(),
        max_tokens: 1024,
        temperature: 0.0,
    };
    let mut last_err = None;
    for attempt in 0..policy.attempts.max(1) {
        if attempt > 0 {
            std::thread::sleep(policy.base_delay * 2u32.pow(attempt - 1));
        }
        match client.complete(&completion_req) {
            Ok(resp) => {
                if resp.text.trim().is_empty() {
                    return Err(Error::validation(format!(
                        "empty completion for request {}",
                        req.record_id
                    )));
                }
                return Ok(Summary { text: resp.text, retries: attempt });
            }
            Err(e @ Error::Service { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    match last_err.expect("at least one attempt") {
        Error::Service { message, .. } => Err(Error::Service {
            request_id: req.record_id.clone(),
            message,
        }),
        e => Err(e),
    }
}

/// Deterministic offline client: echoes the category label and the first
/// caption sentence it finds in the prompt, prefixed with "MOCK-SUMMARY: ".
#[derive(Debug, Default, Clone, Copy)]
pub struct MockClient;

impl SummarizationClient for MockClient {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse> {
        let label = req
            .prompt
            .rfind("abnormal events (")
            .and_then(|i| {
                let rest = &req.prompt[i + "abnormal events (".len()..];
                rest.find(')').map(|j| &rest[..j])
            })
            .unwrap_or("Unknown");
        let body = req
            .prompt
            .find(": ")
            .map(|i| &req.prompt[i + 2..])
            .unwrap_or(req.prompt.as_str());
        let first = body.split_inclusive('.').next().unwrap_or(body).trim();
        Ok(CompletionResponse { text: format!("MOCK-SUMMARY: {label} {first}") })
    }
}

/// Connection settings for the HTTP adapter. Nothing is hardcoded: values
/// come from a config file and/or environment overrides
/// (VAUKIT_LLM_ENDPOINT, VAUKIT_LLM_API_KEY, VAUKIT_LLM_MODEL).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpClientConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    60
}

impl HttpClientConfig {
    /// Applies environment-variable overrides on top of `self`.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(v) = std::env::var("VAUKIT_LLM_ENDPOINT") {
            self.endpoint = v;
        }
        if let Ok(v) = std::env::var("VAUKIT_LLM_MODEL") {
            self.model = v;
        }
        if let Ok(v) = std::env::var("VAUKIT_LLM_API_KEY") {
            self.api_key = Some(v);
        }
        self
    }
}

/// Chat-completions wire format over HTTP.
pub struct HttpClient {
    config: HttpClientConfig,
    http: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    max_tokens: u32,
    temperature: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Deserialize)]
struct WireResponseMessage {
    content: String,
}

impl HttpClient {
    pub fn new(config: HttpClientConfig) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(Error::parameter("summarizer endpoint not configured"));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Service { request_id: String::new(), message: e.to_string() })?;
        Ok(HttpClient { config, http })
    }

    fn service_err(&self, message: impl Into<String>) -> Error {
        Error::Service { request_id: self.config.endpoint.clone(), message: message.into() }
    }
}

impl SummarizationClient for HttpClient {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse> {
        let body = WireRequest {
            model: &self.config.model,
            messages: vec![WireMessage { role: "user", content: &req.prompt }],
            max_tokens: req.max_tokens,
            temperature: req.temperature,
        };
        let mut http_req = self.http.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.config.api_key {
            http_req = http_req.bearer_auth(key);
        }
        let resp = http_req.send().map_err(|e| self.service_err(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(self.service_err(format!("HTTP {status}")));
        }
        let parsed: WireResponse =
            resp.json().map_err(|e| self.service_err(format!("bad response body: {e}")))?;
        let text = parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .ok_or_else(|| self.service_err("response has no choices"))?;
        Ok(CompletionResponse { text })
    }
}
