use std::fmt;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{AgentError, SamplingParams};

/// OpenAI-compatible chat-completions endpoint settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub max_in_flight: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".to_string(),
            model_name: "gpt-4o-mini".to_string(),
            api_key_env: "SEMSTEGO_API_KEY".to_string(),
            timeout_ms: 60_000,
            max_retries: 3,
            backoff_base_ms: 500,
            max_in_flight: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".to_string(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".to_string(),
            content: content.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransportError {
    Timeout,
    Io(String),
}

/// One HTTP POST of a JSON body with a bearer token.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, api_key: &str, body: &serde_json::Value, timeout: Duration) -> Result<TransportResponse, TransportError>;
}

/// Blocking HTTP via `ureq`.
#[derive(Default)]
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post(&self, url: &str, api_key: &str, body: &serde_json::Value, timeout: Duration) -> Result<TransportResponse, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let result = agent
            .post(url)
            .header("Authorization", &format!("Bearer {api_key}"))
            .send_json(body);
        match result {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                let body = resp
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| classify(&e))?;
                Ok(TransportResponse { status, body })
            }
            Err(e) => Err(classify(&e)),
        }
    }
}

fn classify(e: &ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => TransportError::Timeout,
        other => TransportError::Io(other.to_string()),
    }
}

/// Counting semaphore bounding requests in flight.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

/// Chat-completions client with bounded retries and concurrency.
///
/// Retries 429, 5xx, timeouts and connection errors with exponential backoff.
/// 401/403 fail at once. The API key never reaches logs or error messages.
pub struct ChatClient {
    config: EndpointConfig,
    api_key: String,
    transport: Box<dyn Transport>,
    gate: Gate,
}

impl fmt::Debug for ChatClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChatClient")
            .field("config", &self.config)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

impl ChatClient {
    pub fn new(config: EndpointConfig, api_key: String, transport: Box<dyn Transport>) -> Self {
        let gate = Gate::new(config.max_in_flight);
        ChatClient {
            config,
            api_key,
            transport,
            gate,
        }
    }

    /// Reads the key from `config.api_key_env`.
    pub fn from_env(config: EndpointConfig) -> Result<Self, AgentError> {
        let key = std::env::var(&config.api_key_env)
            .map_err(|_| AgentError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        Ok(Self::new(config, key, Box::new(UreqTransport)))
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn redact(&self, text: &str) -> String {
        if self.api_key.is_empty() {
            text.to_string()
        } else {
            text.replace(&self.api_key, "<redacted>")
        }
    }

    /// Sends one conversation and returns the first choice's content.
    pub fn call(&self, messages: &[ChatMessage], sampling: SamplingParams) -> Result<String, AgentError> {
        let body = json!({
            "model": self.config.model_name,
            "messages": messages,
            "temperature": sampling.temperature,
            "top_p": sampling.top_p,
        });
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let _permit = self.gate.acquire();
        let mut last = AgentError::Transport("no attempt made".to_string());
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let wait = self.config.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(16));
                log::debug!("chat retry {attempt} after {wait} ms");
                thread::sleep(Duration::from_millis(wait));
            }
            log::debug!(
                "chat request model={} attempt={attempt} chars={}",
                self.config.model_name,
                messages.iter().map(|m| m.content.len()).sum::<usize>()
            );
            match self.transport.post(&self.config.endpoint_url, &self.api_key, &body, timeout) {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    log::debug!("chat response status={} bytes={}", resp.status, resp.body.len());
                    return parse_content(&resp.body).map_err(|e| AgentError::Malformed(self.redact(&e)));
                }
                Ok(resp) if resp.status == 401 || resp.status == 403 => {
                    log::warn!("chat authentication rejected (HTTP {})", resp.status);
                    return Err(AgentError::Auth { status: resp.status });
                }
                Ok(resp) => {
                    let err = AgentError::Http {
                        status: resp.status,
                        body: self.redact(&truncate(&resp.body, 200)),
                    };
                    log::warn!("chat attempt {attempt} failed: {err}");
                    if resp.status != 429 && resp.status < 500 {
                        return Err(err);
                    }
                    last = err;
                }
                Err(TransportError::Timeout) => {
                    log::warn!("chat attempt {attempt} timed out");
                    last = AgentError::Timeout {
                        after_ms: self.config.timeout_ms,
                    };
                }
                Err(TransportError::Io(msg)) => {
                    let msg = self.redact(&msg);
                    log::warn!("chat attempt {attempt} transport error: {msg}");
                    last = AgentError::Transport(msg);
                }
            }
        }
        Err(last)
    }
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

fn parse_content(body: &str) -> Result<String, String> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| format!("invalid JSON: {e}"))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| "no choices[0].message.content".to_string())
}
