//! Scriptable stand-in for a completion endpoint.
//!
//! Serves `POST /v1/completions` (and `/completions`) for any model name.
//! Responses come from a per-model script; unscripted models answer with a
//! deterministic distribution derived from a hash of model and prompt.
//! `GET /probe` reports request counts and the highest number of requests
//! that were in flight at once per model.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockRule {
    /// Applies when the prompt contains this substring.
    pub contains: String,
    pub top_logprobs: Option<BTreeMap<String, f64>>,
    pub status: Option<u16>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockModel {
    /// Table returned when no rule matches. `None` means hashed.
    pub default_logprobs: Option<BTreeMap<String, f64>>,
    pub rules: Vec<MockRule>,
    /// The first `fail_first` requests get `fail_status` (503 if unset).
    pub fail_first: u32,
    pub fail_status: Option<u16>,
    pub delay_ms: u64,
    /// Answer 200 with a body that has no log-probabilities.
    pub omit_logprobs: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockScript {
    pub models: BTreeMap<String, MockModel>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelProbe {
    pub requests: u64,
    pub in_flight: u64,
    pub max_in_flight: u64,
}

#[derive(Debug, Default)]
struct Shared {
    script: MockScript,
    probes: Mutex<BTreeMap<String, ModelProbe>>,
}

#[derive(Debug, Deserialize)]
struct Request {
    model: String,
    prompt: String,
    #[serde(default)]
    logprobs: Option<usize>,
}

/// Deterministic hashed distribution over the label tokens and one filler.
pub fn hashed_logprobs(model: &str, prompt: &str) -> BTreeMap<String, f64> {
    // FNV-1a, stable across platforms and releases
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in model.bytes().chain([0u8]).chain(prompt.bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
    let p = 0.02 + 0.96 * u;
    BTreeMap::from([
        ("1".to_string(), (0.9 * p).ln()),
        ("2".to_string(), (0.9 * (1.0 - p)).ln()),
        ("The".to_string(), 0.1f64.ln()),
    ])
}

struct InFlight<'a> {
    shared: &'a Shared,
    model: String,
}

impl<'a> InFlight<'a> {
    fn enter(shared: &'a Shared, model: &str) -> (Self, u64) {
        let mut probes = shared.probes.lock().unwrap();
        let p = probes.entry(model.to_string()).or_default();
        p.requests += 1;
        p.in_flight += 1;
        p.max_in_flight = p.max_in_flight.max(p.in_flight);
        let nth = p.requests;
        (
            Self {
                shared,
                model: model.to_string(),
            },
            nth,
        )
    }
}

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        if let Some(p) = self.shared.probes.lock().unwrap().get_mut(&self.model) {
            p.in_flight -= 1;
        }
    }
}

fn status_response(code: u16) -> Response {
    let status = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(serde_json::json!({"error": {"message": "scripted failure"}}))).into_response()
}

async fn completions(State(shared): State<Arc<Shared>>, Json(req): Json<Request>) -> Response {
    let (_guard, nth) = InFlight::enter(&shared, &req.model);
    let default_model = MockModel::default();
    let model = shared.script.models.get(&req.model).unwrap_or(&default_model);
    if model.delay_ms > 0 {
        tokio::time::sleep(Duration::from_millis(model.delay_ms)).await;
    }
    if nth <= u64::from(model.fail_first) {
        return status_response(model.fail_status.unwrap_or(503));
    }
    let rule = model.rules.iter().find(|r| req.prompt.contains(&r.contains));
    if let Some(code) = rule.and_then(|r| r.status) {
        return status_response(code);
    }
    if model.omit_logprobs {
        return Json(serde_json::json!({"choices": [{"text": "1"}]})).into_response();
    }
    let mut table = rule
        .and_then(|r| r.top_logprobs.clone())
        .or_else(|| model.default_logprobs.clone())
        .unwrap_or_else(|| hashed_logprobs(&req.model, &req.prompt));
    if let Some(k) = req.logprobs {
        let mut ranked: Vec<_> = table.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        table = ranked.into_iter().collect();
    }
    let top = table
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(t, _)| t.clone())
        .unwrap_or_default();
    Json(serde_json::json!({
        "object": "text_completion",
        "model": req.model,
        "choices": [{
            "index": 0,
            "text": top,
            "logprobs": {"tokens": [top], "top_logprobs": [table]},
            "finish_reason": "length"
        }]
    }))
    .into_response()
}

async fn probe(State(shared): State<Arc<Shared>>) -> Json<BTreeMap<String, ModelProbe>> {
    Json(shared.probes.lock().unwrap().clone())
}

fn router(shared: Arc<Shared>) -> Router {
    Router::new()
        .route("/v1/completions", post(completions))
        .route("/completions", post(completions))
        .route("/probe", get(probe))
        .with_state(shared)
}

/// A running mock bound to a local port.
#[derive(Debug)]
pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<std::io::Result<()>>>,
}

impl MockServer {
    /// Bind an ephemeral port on 127.0.0.1 and start serving.
    pub async fn start(script: MockScript) -> std::io::Result<Self> {
        Self::bind(SocketAddr::from(([127, 0, 0, 1], 0)), script).await
    }

    pub async fn bind(addr: SocketAddr, script: MockScript) -> std::io::Result<Self> {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            script,
            probes: Mutex::default(),
        });
        let (tx, rx) = oneshot::channel::<()>();
        let app = router(shared.clone());
        let task = tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        });
        Ok(Self {
            addr,
            shared,
            shutdown: Some(tx),
            task: Some(task),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// API root to use as an endpoint `base_url`.
    pub fn url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn probe(&self) -> BTreeMap<String, ModelProbe> {
        self.shared.probes.lock().unwrap().clone()
    }

    /// Serve until the process is stopped.
    pub async fn wait(mut self) -> std::io::Result<()> {
        match self.task.take() {
            Some(t) => t.await.unwrap_or_else(|e| Err(std::io::Error::other(e))),
            None => Ok(()),
        }
    }

    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.task.take() {
            let _ = t.await;
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{AnnotatorEndpoint, Gateway, GatewayConfig, TextItem};
    use super::*;
    use crate::types::Language;

    const MODELS: [&str; 4] = ["gemma", "llama", "mistral", "qwen"];

    fn config(url: &str, tweak: impl Fn(&mut AnnotatorEndpoint)) -> GatewayConfig {
        GatewayConfig::new(
            MODELS
                .iter()
                .map(|m| {
                    let mut e = AnnotatorEndpoint::new(*m, url);
                    e.backoff_ms = 1;
                    tweak(&mut e);
                    e
                })
                .collect(),
        )
    }

    fn texts(n: usize) -> Vec<TextItem> {
        (0..n)
            .map(|i| TextItem {
                id: format!("t{i}"),
                text: format!("comment number {i}"),
                lang: Language::Eng,
                raw_label: None,
            })
            .collect()
    }

    fn lp(h: f64, n: f64) -> BTreeMap<String, f64> {
        BTreeMap::from([("1".to_string(), h.ln()), ("2".to_string(), n.ln())])
    }

    #[test]
    fn hashed_is_stable() {
        let a = hashed_logprobs("m", "p");
        assert_eq!(a, hashed_logprobs("m", "p"));
        assert_ne!(a, hashed_logprobs("m", "q"));
        let total: f64 = a.values().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[tokio::test(flavor = "multi_thread", worker_threads = 4)]
    async fn end_to_end_order_and_cap() {
        let mut script = MockScript::default();
        for m in MODELS {
            script.models.insert(
                m.into(),
                MockModel {
                    delay_ms: 15,
                    rules: vec![MockRule {
                        contains: "number 3".into(),
                        top_logprobs: Some(lp(0.3, 0.1)),
                        status: None,
                    }],
                    ..MockModel::default()
                },
            );
        }
        let server = MockServer::start(script).await.unwrap();
        let gw = Gateway::new(config(&server.url(), |e| e.max_in_flight = 2)).unwrap();
        let items = texts(24);
        let out = gw.annotate(&items).await;
        assert!(out.quarantined.is_empty());
        let ids: Vec<_> = out.annotations.iter().map(|a| a.id.as_str()).collect();
        let want: Vec<_> = items.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, want);
        let r3 = &out.annotations[3].models["qwen"];
        assert!((r3.hate - 0.75).abs() < 1e-12);
        for (m, p) in server.probe() {
            assert_eq!(p.requests, 24, "{m}");
            assert!(p.max_in_flight <= 2, "{m}: {}", p.max_in_flight);
        }
        server.shutdown().await;
    }

    #[tokio::test]
    async fn retries_then_quarantines() {
        let mut script = MockScript::default();
        script.models.insert(
            "llama".into(),
            MockModel {
                fail_first: 2,
                ..MockModel::default()
            },
        );
        script.models.insert(
            "qwen".into(),
            MockModel {
                rules: vec![MockRule {
                    contains: "number 1".into(),
                    top_logprobs: Some(BTreeMap::from([("the".to_string(), 0.0)])),
                    status: None,
                }],
                ..MockModel::default()
            },
        );
        let server = MockServer::start(script).await.unwrap();
        let gw = Gateway::new(config(&server.url(), |e| e.max_in_flight = 1)).unwrap();
        let out = gw.annotate(&texts(3)).await;
        assert_eq!(out.annotations.len(), 2);
        assert_eq!(out.quarantined.len(), 1);
        let q = &out.quarantined[0];
        assert_eq!(q.id, "t1");
        assert_eq!(q.failures.len(), 1);
        assert_eq!(q.failures[0].model, "qwen");
        server.shutdown().await;
    }

    #[tokio::test]
    async fn retry_limit_and_fatal_errors() {
        let mut script = MockScript::default();
        script.models.insert(
            "gemma".into(),
            MockModel {
                fail_first: 100,
                ..MockModel::default()
            },
        );
        script.models.insert(
            "mistral".into(),
            MockModel {
                omit_logprobs: true,
                ..MockModel::default()
            },
        );
        let server = MockServer::start(script).await.unwrap();
        let gw = Gateway::new(config(&server.url(), |e| e.retry_limit = 2)).unwrap();
        let out = gw.annotate(&texts(1)).await;
        let f = &out.quarantined[0].failures;
        assert_eq!(f.len(), 2);
        assert_eq!((f[0].model.as_str(), f[0].attempts), ("gemma", 3));
        assert_eq!((f[1].model.as_str(), f[1].attempts), ("mistral", 1));
        server.shutdown().await;
    }
}
