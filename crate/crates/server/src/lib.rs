// SPDX-License-Identifier: Apache-2.0

//! HTTP recommendation service.
//!
//! `POST /v1/recommend` runs a weighted multi-pin walk on the currently served graph;
//! `GET /v1/health` reports which graph that is. A background task polls the graph
//! directory and swaps in newer graph files once they have loaded completely. Requests
//! pin the graph handle they started with, so a swap never affects a query in flight.

pub mod actions;
pub mod api;
pub mod graph;

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime};

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pixie_core::{WalkConfig, WalkError};
use serde::Serialize;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

use actions::ActionWeights;
use api::{handle_recommend, RecommendRequest};
use graph::{latest_graph, version_cmp, ServedGraph};

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("config error: {0}")]
    Config(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("no known pins in query (unknown: {unknown:?})")]
    EmptyQuery { unknown: Vec<String> },
    #[error("walk failed: {0}")]
    Walk(WalkError),
    #[error("graph load failed: {0}")]
    Load(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    unknown_pins: Vec<String>,
}

impl IntoResponse for ServerError {
    fn into_response(self) -> Response {
        let status = match self {
            ServerError::BadRequest(_) | ServerError::EmptyQuery { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let unknown_pins = match &self {
            ServerError::EmptyQuery { unknown } => unknown.clone(),
            _ => Vec::new(),
        };
        let body = ErrorBody {
            error: self.to_string(),
            unknown_pins,
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub graph_dir: PathBuf,
    pub port: u16,
    /// Walks running at once; further requests wait for a free worker.
    pub workers: usize,
    /// Defaults for every request; `total_steps` is also the per-request maximum.
    pub walk: WalkConfig,
    pub half_life_seconds: f64,
    pub action_weights: ActionWeights,
    pub seed: u64,
    pub poll_interval: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            graph_dir: PathBuf::from("."),
            port: 8080,
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            walk: WalkConfig::default(),
            half_life_seconds: 86_400.0,
            action_weights: ActionWeights::default(),
            seed: 0,
            poll_interval: Duration::from_secs(1),
        }
    }
}

impl ServerConfig {
    pub fn validate(&self) -> Result<(), ServerError> {
        if self.workers == 0 {
            return Err(ServerError::Config("workers must be at least 1".into()));
        }
        if !(self.half_life_seconds > 0.0 && self.half_life_seconds.is_finite()) {
            return Err(ServerError::Config("half-life must be positive".into()));
        }
        self.walk.validate().map_err(|e| ServerError::Config(e.to_string()))
    }
}

/// Per-request seed from the server seed and the request's sequence number.
pub fn request_seed(server_seed: u64, counter: u64) -> u64 {
    let mut h = server_seed ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^ (h >> 31)
}

struct Inner {
    cfg: ServerConfig,
    graph: RwLock<Arc<ServedGraph>>,
    requests: AtomicU64,
    workers: Arc<Semaphore>,
}

/// Shared server state; cheap to clone.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

type Fingerprint = [Option<(SystemTime, u64)>; 2];

fn fingerprint(path: &Path) -> Fingerprint {
    let stat = |p: &Path| {
        std::fs::metadata(p)
            .ok()
            .and_then(|m| Some((m.modified().ok()?, m.len())))
    };
    [stat(path), stat(&pixie_core::compiler::id_map_path(path))]
}

/// Directory poller state: versions that failed to load, keyed by file fingerprint so a
/// rewritten file is retried.
#[derive(Default)]
pub struct Watcher {
    failed: HashMap<PathBuf, Fingerprint>,
}

impl AppState {
    pub fn new(cfg: ServerConfig, served: ServedGraph) -> Result<Self, ServerError> {
        cfg.validate()?;
        let workers = Arc::new(Semaphore::new(cfg.workers));
        Ok(AppState(Arc::new(Inner {
            cfg,
            graph: RwLock::new(Arc::new(served)),
            requests: AtomicU64::new(0),
            workers,
        })))
    }

    /// Loads the newest graph in `cfg.graph_dir`.
    pub fn from_dir(cfg: ServerConfig) -> Result<Self, ServerError> {
        let (_, path) = latest_graph(&cfg.graph_dir)?.ok_or_else(|| {
            ServerError::Load(format!(
                "no *.pixg graph with an .ids file in {}",
                cfg.graph_dir.display()
            ))
        })?;
        let served = ServedGraph::load(&path)?;
        Self::new(cfg, served)
    }

    pub fn config(&self) -> &ServerConfig {
        &self.0.cfg
    }

    /// The graph new requests will use.
    pub fn current(&self) -> Arc<ServedGraph> {
        self.0.graph.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn swap(&self, served: ServedGraph) {
        *self.0.graph.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(served);
    }

    /// One poll of the graph directory. Returns the version swapped in, if any.
    pub fn poll(&self, watcher: &mut Watcher) -> Option<String> {
        let dir = &self.0.cfg.graph_dir;
        let (version, path) = match latest_graph(dir) {
            Ok(Some(found)) => found,
            Ok(None) => return None,
            Err(e) => {
                eprintln!("pixie-server: cannot scan {}: {e}", dir.display());
                return None;
            }
        };
        if !version_cmp(&version, &self.current().version).is_gt() {
            return None;
        }
        let fp = fingerprint(&path);
        if watcher.failed.get(&path) == Some(&fp) {
            return None;
        }
        match ServedGraph::load(&path) {
            Ok(served) => {
                eprintln!(
                    "pixie-server: serving graph {version} ({} nodes, {} edges)",
                    served.graph.node_count(),
                    served.graph.edge_count()
                );
                self.swap(served);
                watcher.failed.remove(&path);
                Some(version)
            }
            Err(e) => {
                eprintln!("pixie-server: keeping graph {}: {e}", self.current().version);
                watcher.failed.insert(path, fp);
                None
            }
        }
    }

    async fn recommend(&self, req: RecommendRequest) -> Result<api::RecommendResponse, ServerError> {
        let permit = self
            .0
            .workers
            .clone()
            .acquire_owned()
            .await
            .map_err(|_| ServerError::Config("worker pool closed".into()))?;
        let served = self.current();
        let n = self.0.requests.fetch_add(1, Ordering::Relaxed);
        let seed = request_seed(self.0.cfg.seed, n);
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            let _permit = permit;
            handle_recommend(&served, &state.0.cfg, req, seed)
        })
        .await
        .map_err(|e| ServerError::Config(format!("worker failed: {e}")))?
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Health {
    pub status: String,
    pub graph_version: String,
    pub nodes: u64,
    pub edges: u64,
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    let g = state.current();
    Json(Health {
        status: "ok".into(),
        graph_version: g.version.clone(),
        nodes: g.graph.node_count(),
        edges: g.graph.edge_count(),
    })
}

async fn recommend(State(state): State<AppState>, body: Result<Json<RecommendRequest>, JsonRejection>) -> Response {
    let req = match body {
        Ok(Json(req)) => req,
        Err(rejection) => return ServerError::BadRequest(rejection.body_text()).into_response(),
    };
    let started = std::time::Instant::now();
    match state.recommend(req).await {
        Ok(resp) => {
            let micros = started.elapsed().as_micros().to_string();
            ([("x-latency-micros", micros)], Json(resp)).into_response()
        }
        Err(e) => e.into_response(),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/recommend", post(recommend))
        .with_state(state)
}

/// Polls the graph directory every `cfg.poll_interval` until the runtime shuts down.
pub fn spawn_watcher(state: AppState) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut watcher = Watcher::default();
        let mut tick = tokio::time::interval(state.config().poll_interval);
        tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            tick.tick().await;
            let s = state.clone();
            let w = std::mem::take(&mut watcher);
            watcher = tokio::task::spawn_blocking(move || {
                let mut w = w;
                s.poll(&mut w);
                w
            })
            .await
            .unwrap_or_default();
        }
    })
}

/// Serves on `listener` with hot swapping until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let watcher = spawn_watcher(state.clone());
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await;
    watcher.abort();
    result
}

/// Loads the newest graph, binds `0.0.0.0:port` and serves until Ctrl-C.
pub async fn run(cfg: ServerConfig) -> Result<(), ServerError> {
    let port = cfg.port;
    let state = AppState::from_dir(cfg)?;
    let listener = TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], port))).await?;
    eprintln!(
        "pixie-server: graph {} on http://{}",
        state.current().version,
        listener.local_addr()?
    );
    serve(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}
