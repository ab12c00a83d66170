//! Completion backends: an HTTP client for llama.cpp-style servers and a
//! deterministic offline mock.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::BenchmarkItem;
use crate::formats::{ChoiceFormat, FormatSpec};

/// Environment variable holding a bearer token for the endpoint.
pub const TOKEN_ENV: &str = "GCD_AUDIT_TOKEN";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("request to {endpoint} failed after {attempts} attempts: {message}")]
    Transport {
        endpoint: String,
        attempts: u32,
        message: String,
    },
    #[error("{endpoint} answered HTTP {status}: {body}")]
    Status {
        endpoint: String,
        status: u16,
        body: String,
    },
    #[error("response from {endpoint} has no string `content` field")]
    MissingContent { endpoint: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeParams {
    /// Left to the server default when absent.
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub n_predict: u32,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            temperature: None,
            top_p: None,
            n_predict: 8,
        }
    }
}

/// What the completion is scored against.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Scale(&'a FormatSpec),
    Choice(&'a ChoiceFormat),
}

impl Target<'_> {
    pub fn id(&self) -> String {
        match self {
            Target::Scale(s) => s.id(),
            Target::Choice(c) => c.id(),
        }
    }

    pub fn gbnf(&self) -> &str {
        match self {
            Target::Scale(s) => s.gbnf(),
            Target::Choice(c) => c.gbnf(),
        }
    }
}

pub struct CompletionRequest<'a> {
    pub item: &'a BenchmarkItem,
    pub target: Target<'a>,
    pub prompt: &'a str,
    pub grammar: &'a str,
    pub params: &'a DecodeParams,
    pub repeat: u32,
}

pub trait Backend: Send + Sync {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String, BackendError>;

    /// Whether latency and wall-clock time are meaningful. The mock reports
    /// zeros so its runs are byte-reproducible.
    fn is_live(&self) -> bool {
        true
    }
}

/// The request body. Field names are the server's wire names.
#[derive(Debug, Serialize)]
pub struct WireRequest<'a> {
    pub prompt: &'a str,
    pub grammar: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    pub n_predict: u32,
}

pub struct HttpBackend {
    endpoint: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
    attempts: u32,
    backoff: Duration,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, BackendError> {
        let endpoint = endpoint.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport {
                endpoint: endpoint.clone(),
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(HttpBackend {
            endpoint,
            token: std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()),
            client,
            attempts: 3,
            backoff: Duration::from_millis(250),
        })
    }

    /// Initial retry delay; doubled after each failed attempt.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn post_once(&self, body: &WireRequest<'_>) -> Result<String, Attempt> {
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Attempt::Retry(e.to_string()))?;
        if status.is_server_error() {
            return Err(Attempt::Retry(format!("HTTP {}: {}", status.as_u16(), text)));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(BackendError::Status {
                endpoint: self.endpoint.clone(),
                status: status.as_u16(),
                body: text,
            }));
        }
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|_| {
            Attempt::Fatal(BackendError::MissingContent {
                endpoint: self.endpoint.clone(),
            })
        })?;
        match v.get("content").and_then(|c| c.as_str()) {
            Some(c) => Ok(c.to_string()),
            None => Err(Attempt::Fatal(BackendError::MissingContent {
                endpoint: self.endpoint.clone(),
            })),
        }
    }
}

enum Attempt {
    Retry(String),
    Fatal(BackendError),
}

impl Backend for HttpBackend {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String, BackendError> {
        let body = WireRequest {
            prompt: req.prompt,
            grammar: req.grammar,
            temperature: req.params.temperature,
            top_p: req.params.top_p,
            n_predict: req.params.n_predict,
        };
        let mut delay = self.backoff;
        let mut last = String::new();
        for attempt in 1..=self.attempts {
            match self.post_once(&body) {
                Ok(content) => return Ok(content),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    last = msg;
                    if attempt < self.attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(BackendError::Transport {
            endpoint: self.endpoint.clone(),
            attempts: self.attempts,
            message: last,
        })
    }
}

/// Offline backend whose outputs are a pure function of item id, format
/// id, repeat index and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockBackend {
    /// Target rank correlation between labels and outputs.
    pub target_rho: f64,
    pub seed: u64,
    /// Probability of answering a multiple-choice item correctly.
    pub choice_accuracy: f64,
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend {
            target_rho: 1.0,
            seed: 0,
            choice_accuracy: 0.5,
        }
    }
}

/// Standard deviation of a uniform label on [0, 1].
const LABEL_SD: f64 = 0.288_675_134_594_812_9;

impl MockBackend {
    fn rng(&self, item_id: &str, format_id: &str, repeat: u32) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(item_id.as_bytes());
        h.update([0]);
        h.update(format_id.as_bytes());
        h.update(repeat.to_le_bytes());
        let digest: [u8; 32] = h.finalize().into();
        ChaCha8Rng::from_seed(digest)
    }

    /// Latent score on [0, 1]: the label mixed with noise of matching
    /// spread, weighted so the linear correlation is about `target_rho`.
    fn latent(&self, label: f64, rng: &mut ChaCha8Rng) -> f64 {
        let rho = self.target_rho.clamp(-1.0, 1.0);
        if rho.abs() >= 1.0 {
            return if rho > 0.0 { label } else { 1.0 - label };
        }
        let noise: f64 = rng.sample(StandardNormal);
        let z = 0.5 + rho * (label - 0.5) + (1.0 - rho * rho).sqrt() * LABEL_SD * noise;
        z.clamp(0.0, 1.0)
    }

    pub fn output_for(&self, item: &BenchmarkItem, target: Target<'_>, repeat: u32) -> String {
        let mut rng = self.rng(&item.id, &target.id(), repeat);
        match target {
            Target::Scale(spec) => {
                let t = self.latent(item.label, &mut rng);
                let (lo, hi) = spec.value_range();
                let want = lo + t * (hi - lo);
                let mut best = &spec.value_map()[0];
                for entry in spec.value_map() {
                    if (entry.1 - want).abs() < (best.1 - want).abs() {
                        best = entry;
                    }
                }
                format!("{}{}", spec.treatments.prefix(), best.0)
            }
            Target::Choice(format) => {
                let n = format.arity();
                let gold = item.gold.unwrap_or(0).min(n - 1);
                let pick = if rng.gen_bool(self.choice_accuracy.clamp(0.0, 1.0)) {
                    gold
                } else {
                    let k = rng.gen_range(0..n - 1);
                    if k >= gold {
                        k + 1
                    } else {
                        k
                    }
                };
                format!("{}{}", format.treatments.prefix(), format.surfaces()[pick])
            }
        }
    }
}

impl Backend for MockBackend {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String, BackendError> {
        Ok(self.output_for(req.item, req.target, req.repeat))
    }

    fn is_live(&self) -> bool {
        false
    }
}
