//! Generation against OpenAI-compatible chat-completions endpoints.

mod client;
pub mod mock;

pub use client::{aggregate_inference_time, generate_batch_blocking, GenClient};

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub const DEFAULT_MAX_NEW_TOKENS: u32 = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff: Duration,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_backoff: Duration::from_millis(500),
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Wait before retry number `retry` (1-based): `base * multiplier^(retry-1)`.
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = self.multiplier.powi(retry.saturating_sub(1) as i32);
        Duration::from_secs_f64(self.base_backoff.as_secs_f64() * factor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    /// Environment variable holding the bearer token, if any.
    pub api_key_env: Option<String>,
    pub model_id: String,
    pub timeout: Duration,
    pub max_concurrent: usize,
    pub retry: RetryPolicy,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            api_key_env: None,
            model_id: model_id.into(),
            timeout: Duration::from_secs(60),
            max_concurrent: 4,
            retry: RetryPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidConfig(m.to_string()));
        if self.max_concurrent < 1 {
            return bad("max_concurrent must be at least 1");
        }
        if self.retry.max_attempts < 1 {
            return bad("max_attempts must be at least 1");
        }
        if !(self.retry.multiplier >= 1.0 && self.retry.multiplier.is_finite()) {
            return bad("backoff multiplier must be a finite number >= 1");
        }
        if self.timeout.is_zero() {
            return bad("timeout must be positive");
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(GenError::InvalidConfig(format!(
                "base_url {:?} must start with http:// or https://",
                self.base_url
            )));
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub record_id: u64,
    pub input_text: String,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub stop_sequences: Vec<String>,
}

impl GenerationRequest {
    pub fn new(record_id: u64, input_text: impl Into<String>) -> Self {
        GenerationRequest {
            record_id,
            input_text: input_text.into(),
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            temperature: 0.0,
            stop_sequences: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_new_tokens < 1 {
            return Err("max_new_tokens must be at least 1".into());
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(format!("temperature {} must be finite and non-negative", self.temperature));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// 401 or 403.
    Auth,
    /// Any other 4xx except 429.
    Rejected,
    /// 429 or 5xx on the last attempt.
    Http,
    Timeout,
    Connect,
    /// Response body was not a chat completion.
    Protocol,
    /// The request itself was invalid.
    Request,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum GenerationStatus {
    Ok,
    Failed { reason: FailureKind, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub record_id: u64,
    pub output_text: String,
    /// Wall clock from the first attempt to the final response, retries
    /// and backoff included.
    #[serde(with = "secs")]
    pub latency: Duration,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    #[serde(flatten)]
    pub status: GenerationStatus,
    pub attempts: u32,
    /// Backoff slept before each retry, in order.
    #[serde(with = "secs_list")]
    pub backoff: Vec<Duration>,
}

impl GenerationResult {
    pub fn is_ok(&self) -> bool {
        self.status == GenerationStatus::Ok
    }

    /// Generated text when the call succeeded.
    pub fn output(&self) -> Option<&str> {
        self.is_ok().then_some(self.output_text.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("invalid endpoint config: {0}")]
    InvalidConfig(String),
    #[error("http client: {0}")]
    Client(#[from] reqwest::Error),
    #[error("runtime: {0}")]
    Runtime(#[from] std::io::Error),
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

mod secs_list {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &[Duration], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(d.iter().map(Duration::as_secs_f64))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Duration>, D::Error> {
        Vec::<f64>::deserialize(d)?
            .into_iter()
            .map(|v| Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_grows_geometrically() {
        let p = RetryPolicy::default();
        let delays: Vec<_> = (1..=4).map(|i| p.delay(i).as_millis()).collect();
        assert_eq!(delays, [500, 1000, 2000, 4000]);
    }

    #[test]
    fn config_validation() {
        let ok = EndpointConfig::new("http://localhost:1", "m");
        assert!(ok.validate().is_ok());
        assert_eq!(ok.completions_url(), "http://localhost:1/v1/chat/completions");
        let mut c = ok.clone();
        c.max_concurrent = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.retry.max_attempts = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.retry.multiplier = 0.5;
        assert!(c.validate().is_err());
        let mut c = ok;
        c.base_url = "localhost".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn result_serialization() {
        let r = GenerationResult {
            record_id: 1,
            output_text: String::new(),
            latency: Duration::from_millis(1500),
            prompt_tokens: None,
            completion_tokens: None,
            status: GenerationStatus::Failed {
                reason: FailureKind::Auth,
                detail: "401".into(),
            },
            attempts: 1,
            backoff: vec![Duration::from_millis(250)],
        };
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains(r#""status":"failed","reason":"auth""#), "{json}");
        assert!(json.contains(r#""latency":1.5"#));
        assert_eq!(serde_json::from_str::<GenerationResult>(&json).unwrap(), r);
    }
}
