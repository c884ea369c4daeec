use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use futures::stream::{self, StreamExt};
use rand::Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use super::{
    extract_label_probabilities, render_prompt, AnnotationRecord, AnnotatorEndpoint, EndpointFailure, GatewayConfig,
    ModelAnnotation, QuarantineRecord, TextItem,
};
use crate::error::Result;

#[derive(Debug, Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: u32,
    logprobs: usize,
}

#[derive(Debug, Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    #[serde(default)]
    logprobs: Option<Logprobs>,
}

#[derive(Debug, Deserialize)]
struct Logprobs {
    #[serde(default)]
    top_logprobs: Option<Vec<Option<BTreeMap<String, f64>>>>,
}

#[derive(Debug)]
enum AttemptError {
    /// Worth another try: transport failure, timeout, 429 or 5xx.
    Transient(String),
    Fatal(String),
}

/// Client state shared by every request of a batch.
#[derive(Debug, Clone)]
pub struct Gateway {
    config: Arc<GatewayConfig>,
    client: reqwest::Client,
    permits: Vec<Arc<Semaphore>>,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct BatchOutcome {
    /// One record per successfully annotated text, in input order.
    pub annotations: Vec<AnnotationRecord>,
    /// Texts that failed on at least one endpoint, in input order.
    pub quarantined: Vec<QuarantineRecord>,
}

impl BatchOutcome {
    pub fn is_partial(&self) -> bool {
        !self.quarantined.is_empty()
    }
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self> {
        let config = config.validated()?;
        let permits = config
            .endpoints
            .iter()
            .map(|e| Arc::new(Semaphore::new(e.max_in_flight)))
            .collect();
        let client = reqwest::Client::builder()
            .build()
            .map_err(|e| crate::Error::Config(format!("http client: {e}")))?;
        Ok(Self {
            config: Arc::new(config),
            client,
            permits,
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    async fn attempt(&self, endpoint: &AnnotatorEndpoint, prompt: &str) -> Result<BTreeMap<String, f64>, AttemptError> {
        let body = CompletionRequest {
            model: &endpoint.model_id,
            prompt,
            max_tokens: 1,
            logprobs: self.config.top_k,
        };
        let mut req = self
            .client
            .post(endpoint.completions_url())
            .timeout(endpoint.timeout())
            .json(&body);
        if let Some(token) = endpoint.resolved_token() {
            req = req.bearer_auth(token);
        }
        let resp = req.send().await.map_err(|e| AttemptError::Transient(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(AttemptError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(format!("HTTP {status}")));
        }
        let bytes = resp.bytes().await.map_err(|e| AttemptError::Transient(e.to_string()))?;
        let parsed: CompletionResponse = serde_json::from_slice(&bytes)
            .map_err(|e| AttemptError::Fatal(format!("malformed response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.logprobs)
            .and_then(|l| l.top_logprobs)
            .and_then(|t| t.into_iter().next().flatten())
            .ok_or_else(|| AttemptError::Fatal("response has no top log-probabilities".into()))
    }

    /// Query one endpoint, retrying transient failures with jittered
    /// exponential backoff. Returns the attempt count alongside the error.
    async fn query(&self, slot: usize, prompt: &str) -> Result<BTreeMap<String, f64>, (String, u32)> {
        let endpoint = &self.config.endpoints[slot];
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            let outcome = {
                let _permit = self.permits[slot].acquire().await.expect("semaphore never closed");
                self.attempt(endpoint, prompt).await
            };
            match outcome {
                Ok(table) => return Ok(table),
                Err(AttemptError::Fatal(msg)) => return Err((msg, attempts)),
                Err(AttemptError::Transient(msg)) if attempts > endpoint.retry_limit => {
                    return Err((msg, attempts));
                }
                Err(AttemptError::Transient(msg)) => {
                    let base = endpoint.backoff_ms.saturating_mul(1 << (attempts - 1).min(10));
                    let jitter: f64 = rand::rng().random_range(0.5..1.5);
                    tracing::debug!(model = %endpoint.model_id, attempts, error = %msg, "retrying");
                    tokio::time::sleep(Duration::from_millis((base as f64 * jitter) as u64)).await;
                }
            }
        }
    }

    async fn annotate_one(&self, item: &TextItem) -> std::result::Result<AnnotationRecord, QuarantineRecord> {
        let quarantine = |failures| QuarantineRecord {
            id: item.id.clone(),
            lang: item.lang,
            failures,
        };
        let prompt = match render_prompt(&self.config.template, &item.text) {
            Ok(p) => p,
            Err(e) => {
                return Err(quarantine(
                    self.config
                        .endpoints
                        .iter()
                        .map(|ep| EndpointFailure {
                            model: ep.model_id.clone(),
                            error: e.to_string(),
                            attempts: 0,
                        })
                        .collect(),
                ))
            }
        };
        let results =
            futures::future::join_all((0..self.config.endpoints.len()).map(|slot| self.query(slot, &prompt))).await;

        let mut models = BTreeMap::new();
        let mut failures = Vec::new();
        for (endpoint, result) in self.config.endpoints.iter().zip(results) {
            let model = endpoint.model_id.clone();
            match result {
                Ok(logprobs) => {
                    let raw: BTreeMap<String, f64> = logprobs.into_iter().map(|(t, lp)| (t, lp.exp())).collect();
                    match extract_label_probabilities(&raw, &self.config.template, &item.id, &model) {
                        Ok(p) => {
                            models.insert(
                                model,
                                ModelAnnotation {
                                    hate: p.p_hate,
                                    neutral: p.p_neutral,
                                    raw,
                                },
                            );
                        }
                        Err(e) => failures.push(EndpointFailure {
                            model,
                            error: e.to_string(),
                            attempts: 1,
                        }),
                    }
                }
                Err((error, attempts)) => failures.push(EndpointFailure { model, error, attempts }),
            }
        }
        if failures.is_empty() {
            Ok(AnnotationRecord {
                id: item.id.clone(),
                lang: item.lang,
                models,
                raw_label: item.raw_label.clone(),
            })
        } else {
            Err(quarantine(failures))
        }
    }

    /// Annotate `texts` against all four endpoints.
    ///
    /// Requests run concurrently up to each endpoint's `max_in_flight`.
    /// Results come back in input order whatever order responses arrive in.
    pub async fn annotate(&self, texts: &[TextItem]) -> BatchOutcome {
        let window = self
            .config
            .endpoints
            .iter()
            .map(|e| e.max_in_flight)
            .sum::<usize>()
            .max(1);
        let results: Vec<_> = stream::iter(texts)
            .map(|item| self.annotate_one(item))
            .buffered(window)
            .collect()
            .await;
        let mut out = BatchOutcome::default();
        for r in results {
            match r {
                Ok(a) => out.annotations.push(a),
                Err(q) => out.quarantined.push(q),
            }
        }
        out
    }
}

pub async fn annotate_batch(texts: &[TextItem], config: GatewayConfig) -> Result<BatchOutcome> {
    Ok(Gateway::new(config)?.annotate(texts).await)
}
