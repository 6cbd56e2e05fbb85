use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::wire::Envelope;
use super::scripted::ScriptedTransport;
use super::{BackendError, BackendKind};

/// Moves one request body to a model server and returns the envelope's
/// `data` payload.
pub trait Transport: Send + Sync {
    fn call(&self, kind: BackendKind, body: &Value) -> Result<Value, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_s: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_s: 0.5,
        }
    }
}

/// Connection settings of one backend endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// `http(s)://host:port[/prefix]`, or `mock:<fixture path>` for in-process
    /// replay.
    pub base_url: String,
    pub timeout_s: f64,
    pub max_attempts: u32,
    pub backoff_s: f64,
    pub max_in_flight: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: String::new(),
            timeout_s: 60.0,
            max_attempts: 3,
            backoff_s: 0.5,
            max_in_flight: 4,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.timeout_s > 0.0) {
            return Err(format!("timeout_s must be positive, got {}", self.timeout_s));
        }
        if self.max_attempts < 1 {
            return Err("max_attempts must be at least 1".into());
        }
        if self.max_in_flight < 1 {
            return Err("max_in_flight must be at least 1".into());
        }
        if self.backoff_s < 0.0 {
            return Err("backoff_s must be non-negative".into());
        }
        Ok(())
    }

    pub fn retry(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.max_attempts,
            backoff_s: self.backoff_s,
        }
    }

    /// `mock:<path>` replays a fixture file in-process; `http(s)://` URLs
    /// get an HTTP transport.
    pub fn connect(&self) -> Result<Endpoint, BackendError> {
        self.validate().map_err(BackendError::Argument)?;
        let url = self.base_url.trim();
        let transport: Arc<dyn Transport> = if let Some(path) = url.strip_prefix("mock:") {
            Arc::new(ScriptedTransport::load(std::path::Path::new(path))?)
        } else if url.starts_with("http://") || url.starts_with("https://") {
            Arc::new(HttpTransport::new(url, self.timeout_s))
        } else {
            return Err(BackendError::Argument(format!("unsupported backend url {url:?}")));
        };
        Ok(Endpoint::new(transport, self.retry(), self.max_in_flight))
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|p| p.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|p| p.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|p| p.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// A transport wrapped with retry and a concurrency limit.
pub struct Endpoint {
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
    limiter: Limiter,
}

impl Endpoint {
    pub fn new(transport: Arc<dyn Transport>, retry: RetryPolicy, max_in_flight: usize) -> Self {
        Self {
            transport,
            retry,
            limiter: Limiter::new(max_in_flight),
        }
    }

    pub fn from_transport(transport: Arc<dyn Transport>) -> Self {
        Self::new(
            transport,
            RetryPolicy {
                max_attempts: 1,
                backoff_s: 0.0,
            },
            4,
        )
    }

    /// Transport failures are retried up to `max_attempts` total tries with
    /// linear backoff; every other error is returned immediately.
    pub fn call(&self, kind: BackendKind, body: &Value) -> Result<Value, BackendError> {
        let _permit = self.limiter.acquire();
        let attempts = self.retry.max_attempts.max(1);
        let mut last = None;
        for attempt in 1..=attempts {
            match self.transport.call(kind, body) {
                Err(e) if e.is_retryable() => {
                    tracing::debug!(%kind, attempt, error = %e, "backend call failed");
                    last = Some(e);
                    if attempt < attempts && self.retry.backoff_s > 0.0 {
                        std::thread::sleep(Duration::from_secs_f64(self.retry.backoff_s * attempt as f64));
                    }
                }
                other => return other,
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

/// JSON over HTTP POST.
pub struct HttpTransport {
    base_url: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(base_url: impl Into<String>, timeout_s: f64) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            agent,
        }
    }
}

impl Transport for HttpTransport {
    fn call(&self, kind: BackendKind, body: &Value) -> Result<Value, BackendError> {
        let url = format!("{}/{}", self.base_url, kind.as_str());
        let mut resp = self
            .agent
            .post(&url)
            .send_json(body)
            .map_err(|e| BackendError::Transport(format!("{url}: {e}")))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(format!("{url}: {e}")))?;
        let envelope: Envelope = match serde_json::from_str(&text) {
            Ok(env) => env,
            Err(_) if status.is_server_error() => {
                return Err(BackendError::Transport(format!("{url}: HTTP {status}")));
            }
            Err(e) => {
                return Err(BackendError::Protocol(format!("{url}: HTTP {status}, bad envelope: {e}")));
            }
        };
        unwrap_envelope(envelope)
    }
}

pub fn unwrap_envelope(envelope: Envelope) -> Result<Value, BackendError> {
    if envelope.ok {
        envelope
            .data
            .ok_or_else(|| BackendError::Protocol("ok envelope without data".into()))
    } else {
        Err(BackendError::Remote(
            envelope.error.unwrap_or_else(|| "unspecified backend error".into()),
        ))
    }
}
