//! In-process completion endpoint for tests.
//!
//! The stub answers with whatever follows `[[answer:` in the prompt (up to
//! `]]`), so a benchmark fixture controls its own predictions.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

#[derive(Clone, Debug, Default)]
pub struct Behavior {
    /// Fail the first N requests with 503.
    pub fail_first: usize,
    /// After N successful responses, answer every request with 503.
    pub fail_after: Option<usize>,
    /// Always answer with this status.
    pub fixed_status: Option<u16>,
    /// Require `Authorization: Bearer <token>`.
    pub require_token: Option<String>,
    /// Per-request delay derived from the prompt, up to this many ms.
    pub jitter_ms: u64,
    /// Echo the prompt in front of the answer.
    pub echo_prompt: bool,
}

#[derive(Default)]
pub struct Stats {
    pub requests: AtomicUsize,
    pub successes: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    pub bodies: Mutex<Vec<Value>>,
}

struct Shared {
    behavior: Behavior,
    stats: Arc<Stats>,
}

pub struct StubServer {
    pub addr: SocketAddr,
    pub stats: Arc<Stats>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl StubServer {
    /// Serve on an ephemeral port from a dedicated thread and runtime.
    pub fn start(behavior: Behavior) -> StubServer {
        let stats = Arc::new(Stats::default());
        let shared = Arc::new(Shared {
            behavior,
            stats: stats.clone(),
        });
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                let app = Router::new()
                    .route("/v1/completions", post(handle))
                    .with_state(shared);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = shutdown_rx.await;
                    })
                    .await
                    .unwrap();
            });
        });
        StubServer {
            addr: addr_rx.recv().unwrap(),
            stats,
            shutdown: Some(shutdown_tx),
            thread: Some(thread),
        }
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> usize {
        self.stats.requests.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn answer_in(prompt: &str) -> String {
    prompt
        .split_once("[[answer:")
        .and_then(|(_, rest)| rest.split_once("]]"))
        .map(|(a, _)| a.to_string())
        .unwrap_or_default()
}

async fn handle(
    State(shared): State<Arc<Shared>>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> (StatusCode, Json<Value>) {
    let stats = &shared.stats;
    let b = &shared.behavior;
    let n = stats.requests.fetch_add(1, Ordering::SeqCst);
    let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
    stats.bodies.lock().unwrap().push(body.clone());

    let prompt = body["prompt"].as_str().unwrap_or_default().to_string();
    if b.jitter_ms > 0 {
        let h = prompt
            .bytes()
            .fold(0u64, |h, c| h.wrapping_mul(31).wrapping_add(c as u64));
        tokio::time::sleep(Duration::from_millis(h % (b.jitter_ms + 1))).await;
    }

    let reply = if let Some(token) = &b.require_token {
        let expected = format!("Bearer {token}");
        if headers.get("authorization").and_then(|v| v.to_str().ok()) != Some(expected.as_str()) {
            Some(StatusCode::UNAUTHORIZED)
        } else {
            None
        }
    } else {
        None
    };
    let reply = reply
        .or(b.fixed_status.map(|s| StatusCode::from_u16(s).unwrap()))
        .or((n < b.fail_first).then_some(StatusCode::SERVICE_UNAVAILABLE))
        .or(b
            .fail_after
            .filter(|&limit| stats.successes.load(Ordering::SeqCst) >= limit)
            .map(|_| StatusCode::SERVICE_UNAVAILABLE));

    let out = match reply {
        Some(status) => (status, Json(json!({"error": status.as_u16()}))),
        None => {
            stats.successes.fetch_add(1, Ordering::SeqCst);
            let answer = answer_in(&prompt);
            let text = if b.echo_prompt {
                format!("{prompt}{answer}\nextra")
            } else {
                format!(" {answer}\n")
            };
            (StatusCode::OK, Json(json!({"choices": [{"text": text}]})))
        }
    };
    stats.in_flight.fetch_sub(1, Ordering::SeqCst);
    out
}
