//! OpenAI-compatible chat-completion client.

use std::time::Duration;

use serde_json::{json, Value};

use super::{GatewayError, Provider};
use crate::bundle::BugBundle;
use crate::prompt::PromptBundle;

/// The only place the bearer token is read from.
pub const API_KEY_ENV: &str = "APR_LLM_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub request_timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            initial_backoff: Duration::from_millis(500),
            request_timeout: Duration::from_secs(300),
        }
    }
}

pub struct LiveHttpProvider {
    endpoint: String,
    model: String,
    api_key: String,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl std::fmt::Debug for LiveHttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveHttpProvider")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(String),
}

impl LiveHttpProvider {
    pub fn from_env(endpoint: &str, model: &str) -> Result<Self, GatewayError> {
        Self::with_key(endpoint, model, std::env::var(API_KEY_ENV).ok(), RetryPolicy::default())
    }

    pub(crate) fn with_key(
        endpoint: &str,
        model: &str,
        api_key: Option<String>,
        retry: RetryPolicy,
    ) -> Result<Self, GatewayError> {
        let api_key = api_key
            .filter(|k| !k.trim().is_empty())
            .ok_or(GatewayError::AuthMissing)?;
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(retry.request_timeout))
            .build()
            .into();
        Ok(Self {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
            retry,
            agent,
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", format!("Bearer {}", self.api_key))
            .send_json(body);
        let mut response = match response {
            Ok(r) => r,
            Err(
                e @ (ureq::Error::Io(_)
                | ureq::Error::Timeout(_)
                | ureq::Error::ConnectionFailed
                | ureq::Error::HostNotFound
                | ureq::Error::Protocol(_)),
            ) => return Attempt::Retry(e.to_string()),
            Err(e) => return Attempt::Fatal(e.to_string()),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading response body: {e}")),
        };
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("HTTP {status}: {}", snippet(&text)));
        }
        if status != 200 {
            return Attempt::Fatal(format!("HTTP {status}: {}", snippet(&text)));
        }
        let parsed: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Fatal(format!("response is not JSON: {e}")),
        };
        match parsed.pointer("/choices/0/message/content").and_then(Value::as_str) {
            Some(content) => Attempt::Done(content.to_string()),
            None => Attempt::Fatal("response has no choices[0].message.content".into()),
        }
    }
}

fn snippet(text: &str) -> String {
    text.chars().take(200).collect()
}

impl Provider for LiveHttpProvider {
    fn fingerprint(&self) -> String {
        format!("live_http:{}@{}", self.model, self.endpoint)
    }

    fn complete(
        &self,
        prompt: &PromptBundle,
        _bundle: &BugBundle,
        _sample_index: usize,
    ) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": prompt.system_prompt},
                {"role": "user", "content": prompt.user_prompt},
            ],
        });
        let mut backoff = self.retry.initial_backoff;
        let mut last = String::new();
        for attempt in 0..self.retry.max_attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff = backoff.saturating_mul(2);
            }
            match self.attempt(&body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(msg) => return Err(GatewayError::ProviderUnavailable(msg)),
                Attempt::Retry(msg) => last = msg,
            }
        }
        Err(GatewayError::ProviderUnavailable(format!(
            "giving up after {} attempts: {last}",
            self.retry.max_attempts.max(1)
        )))
    }
}
