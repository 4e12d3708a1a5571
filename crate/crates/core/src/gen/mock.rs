//! Instrumented stand-in for a chat-completions endpoint.
//!
//! Replies echo the last user message or come from a fixed text or a table
//! keyed by input. Failures and delays can be injected, and the server
//! counts requests and concurrent arrivals.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::oneshot;

use crate::prompt::FormattedExample;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    /// Return the last user message.
    Echo,
    /// Look the input up in `table`, else return `default`. With neither,
    /// the request fails with 500.
    Fixed {
        default: Option<String>,
        table: HashMap<String, String>,
    },
}

impl Reply {
    pub fn constant(text: impl Into<String>) -> Self {
        Reply::Fixed {
            default: Some(text.into()),
            table: HashMap::new(),
        }
    }

    /// Answer each formatted input with its target text.
    pub fn references(examples: &[FormattedExample]) -> Self {
        Reply::Fixed {
            default: None,
            table: examples
                .iter()
                .map(|e| (e.input_text.clone(), e.target_text.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockConfig {
    pub reply: Reply,
    /// The first `fail_first` requests, counted server-wide, get `fail_status`.
    pub fail_first: u32,
    pub fail_status: u16,
    /// Sleep before answering every request.
    pub delay: Duration,
    /// Requests whose input contains this string get 500.
    pub fail_when_contains: Option<String>,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig {
            reply: Reply::Echo,
            fail_first: 0,
            fail_status: 429,
            delay: Duration::ZERO,
            fail_when_contains: None,
        }
    }
}

impl MockConfig {
    pub fn echo() -> Self {
        Self::default()
    }

    pub fn with_reply(reply: Reply) -> Self {
        MockConfig {
            reply,
            ..Self::default()
        }
    }
}

#[derive(Debug)]
struct Stats {
    started: Instant,
    requests: AtomicU32,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    arrivals: Mutex<Vec<Duration>>,
}

struct AppState {
    config: MockConfig,
    stats: Stats,
}

struct InFlight<'a>(&'a Stats);

impl<'a> InFlight<'a> {
    fn enter(stats: &'a Stats) -> Self {
        let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
        stats.arrivals.lock().unwrap().push(stats.started.elapsed());
        InFlight(stats)
    }
}

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

fn error(status: StatusCode, message: &str) -> Response {
    (status, Json(json!({ "error": { "message": message } }))).into_response()
}

fn last_user_message(body: &Value) -> Option<&str> {
    body.get("messages")?
        .as_array()?
        .iter()
        .rev()
        .find(|m| m.get("role").and_then(Value::as_str) == Some("user"))?
        .get("content")?
        .as_str()
}

async fn completions(State(state): State<Arc<AppState>>, body: Json<Value>) -> Response {
    let stats = &state.stats;
    let config = &state.config;
    let _guard = InFlight::enter(stats);
    let n = stats.requests.fetch_add(1, Ordering::SeqCst);
    if !config.delay.is_zero() {
        tokio::time::sleep(config.delay).await;
    }
    if n < config.fail_first {
        let status = StatusCode::from_u16(config.fail_status).unwrap_or(StatusCode::TOO_MANY_REQUESTS);
        return error(status, "scripted failure");
    }
    let Some(input) = last_user_message(&body) else {
        return error(StatusCode::BAD_REQUEST, "no user message");
    };
    if config.fail_when_contains.as_deref().is_some_and(|needle| input.contains(needle)) {
        return error(StatusCode::INTERNAL_SERVER_ERROR, "scripted failure for this input");
    }
    let text = match &config.reply {
        Reply::Echo => input.to_string(),
        Reply::Fixed { default, table } => match table.get(input).or(default.as_ref()) {
            Some(t) => t.clone(),
            None => return error(StatusCode::INTERNAL_SERVER_ERROR, "no scripted reply for this input"),
        },
    };
    let model = body.get("model").cloned().unwrap_or(Value::Null);
    Json(json!({
        "id": format!("mock-{n}"),
        "object": "chat.completion",
        "model": model,
        "choices": [{
            "index": 0,
            "message": { "role": "assistant", "content": text },
            "finish_reason": "stop"
        }],
        "usage": {
            "prompt_tokens": input.split_whitespace().count(),
            "completion_tokens": text.split_whitespace().count()
        }
    }))
    .into_response()
}

pub fn router(config: MockConfig) -> (Router, MockHandle) {
    let state = Arc::new(AppState {
        config,
        stats: Stats {
            started: Instant::now(),
            requests: AtomicU32::new(0),
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            arrivals: Mutex::new(Vec::new()),
        },
    });
    let router = Router::new()
        .route("/v1/chat/completions", post(completions))
        .with_state(state.clone());
    (router, MockHandle { state })
}

/// Read access to a running mock's counters.
#[derive(Clone)]
pub struct MockHandle {
    state: Arc<AppState>,
}

impl MockHandle {
    pub fn requests(&self) -> u32 {
        self.state.stats.requests.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.state.stats.max_in_flight.load(Ordering::SeqCst)
    }

    /// Arrival times relative to server start.
    pub fn arrivals(&self) -> Vec<Duration> {
        self.state.stats.arrivals.lock().unwrap().clone()
    }
}

/// A mock bound to a local port, serving until dropped.
pub struct MockServer {
    addr: SocketAddr,
    handle: MockHandle,
    shutdown: Option<oneshot::Sender<()>>,
}

impl MockServer {
    /// Bind `127.0.0.1` on a free port and serve on the current runtime.
    pub async fn start(config: MockConfig) -> std::io::Result<Self> {
        Self::bind(config, "127.0.0.1:0".parse().unwrap()).await
    }

    pub async fn bind(config: MockConfig, addr: SocketAddr) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let (router, handle) = router(config);
        let (tx, rx) = oneshot::channel::<()>();
        tokio::spawn(async move {
            let serve = axum::serve(listener, router).with_graceful_shutdown(async {
                let _ = rx.await;
            });
            if let Err(e) = serve.await {
                tracing::error!("mock server stopped: {e}");
            }
        });
        Ok(MockServer {
            addr,
            handle,
            shutdown: Some(tx),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn handle(&self) -> &MockHandle {
        &self.handle
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

impl std::ops::Deref for MockServer {
    type Target = MockHandle;

    fn deref(&self) -> &MockHandle {
        &self.handle
    }
}
