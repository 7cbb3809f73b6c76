//! JSON-over-HTTP client for external generators (and taggers).
//!
//! Wire format for generation:
//!
//! ```text
//! POST <endpoint>
//! {"prompt": "...", "max_length": 500, "num_return": 2, "seed": 7}
//! -> 200 {"outputs": ["...", "..."]}
//! ```
//!
//! Transport failures, timeouts, 429 and 5xx responses are retried with
//! exponential backoff. Other 4xx statuses, undecodable bodies and a wrong
//! number of outputs fail immediately.

use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
    /// Requests in flight at once during orchestration.
    pub concurrency: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: String::new(),
            timeout_ms: 30_000,
            max_retries: 3,
            backoff_ms: 200,
            max_backoff_ms: 5_000,
            concurrency: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub prompt: String,
    pub max_length: usize,
    pub num_return: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RemoteError {
    #[error("{endpoint}: timed out after {attempts} attempt(s)")]
    Timeout { endpoint: String, attempts: u32 },

    #[error("{endpoint}: HTTP status {status} after {attempts} attempt(s)")]
    Status {
        endpoint: String,
        status: u16,
        attempts: u32,
    },

    #[error("{endpoint}: malformed response body: {message}")]
    Malformed { endpoint: String, message: String },

    #[error("{endpoint}: expected {expected} output(s), got {got}")]
    WrongCount {
        endpoint: String,
        expected: usize,
        got: usize,
    },

    #[error("{endpoint}: transport error after {attempts} attempt(s): {message}")]
    Transport {
        endpoint: String,
        attempts: u32,
        message: String,
    },
}

impl RemoteError {
    fn retryable(&self) -> bool {
        match self {
            RemoteError::Timeout { .. } | RemoteError::Transport { .. } => true,
            RemoteError::Status { status, .. } => *status == 429 || *status >= 500,
            RemoteError::Malformed { .. } | RemoteError::WrongCount { .. } => false,
        }
    }

    fn with_attempts(self, n: u32) -> Self {
        match self {
            RemoteError::Timeout { endpoint, .. } => RemoteError::Timeout {
                endpoint,
                attempts: n,
            },
            RemoteError::Status {
                endpoint, status, ..
            } => RemoteError::Status {
                endpoint,
                status,
                attempts: n,
            },
            RemoteError::Transport {
                endpoint, message, ..
            } => RemoteError::Transport {
                endpoint,
                attempts: n,
                message,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JsonClient {
    agent: ureq::Agent,
    config: RemoteConfig,
}

impl JsonClient {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        JsonClient { agent, config }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn attempt<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        body: &Req,
    ) -> Result<Resp, RemoteError> {
        let endpoint = &self.config.endpoint;
        let mut resp = self
            .agent
            .post(endpoint)
            .send_json(body)
            .map_err(|e| classify_transport(endpoint, e))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(RemoteError::Status {
                endpoint: endpoint.clone(),
                status,
                attempts: 1,
            });
        }
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| classify_transport(endpoint, e))?;
        serde_json::from_str(&text).map_err(|e| RemoteError::Malformed {
            endpoint: endpoint.clone(),
            message: e.to_string(),
        })
    }

    /// POSTs `body` and decodes the JSON reply, retrying transient failures.
    pub fn post_json<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        body: &Req,
    ) -> Result<Resp, RemoteError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(body) {
                Ok(r) => return Ok(r),
                Err(e) if e.retryable() && attempts <= self.config.max_retries => {
                    let delay = self
                        .config
                        .backoff_ms
                        .saturating_mul(1 << (attempts - 1).min(16))
                        .min(self.config.max_backoff_ms);
                    log::warn!("{e}; retrying in {delay} ms");
                    thread::sleep(Duration::from_millis(delay));
                }
                Err(e) => return Err(e.with_attempts(attempts)),
            }
        }
    }
}

fn classify_transport(endpoint: &str, e: ureq::Error) -> RemoteError {
    match e {
        ureq::Error::Timeout(_) => RemoteError::Timeout {
            endpoint: endpoint.to_string(),
            attempts: 1,
        },
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => RemoteError::Timeout {
            endpoint: endpoint.to_string(),
            attempts: 1,
        },
        other => RemoteError::Transport {
            endpoint: endpoint.to_string(),
            attempts: 1,
            message: other.to_string(),
        },
    }
}

/// Asks the remote generator for `num_return` texts.
pub fn remote_generate(
    client: &JsonClient,
    request: &GenerateRequest,
) -> Result<Vec<String>, RemoteError> {
    let resp: GenerateResponse = client.post_json(request)?;
    if resp.outputs.len() != request.num_return {
        return Err(RemoteError::WrongCount {
            endpoint: client.config.endpoint.clone(),
            expected: request.num_return,
            got: resp.outputs.len(),
        });
    }
    Ok(resp.outputs)
}
