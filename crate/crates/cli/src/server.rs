//! HTTP service: `GET /search` and `GET /health` over one shared, immutable
//! engine. The engine can be swapped as a whole; requests in flight keep the
//! one they started with.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use scisearch_core::eval::MAX_RUN_DEPTH;
use scisearch_core::pipeline::Engine;
use scisearch_core::Error;

pub const DEFAULT_RESULTS: usize = 10;

#[derive(Clone, Default)]
pub struct AppState {
    engine: Arc<RwLock<Option<Arc<Engine>>>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_engine(engine: Engine) -> Self {
        let state = Self::new();
        state.replace(engine);
        state
    }

    pub fn replace(&self, engine: Engine) {
        let engine = Arc::new(engine);
        *self.engine.write().unwrap_or_else(|e| e.into_inner()) = Some(engine);
    }

    pub fn current(&self) -> Option<Arc<Engine>> {
        self.engine.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    q: Option<String>,
    n: Option<usize>,
    mu: Option<f64>,
    rrf_k: Option<f64>,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn health(State(state): State<AppState>) -> Response {
    match state.current() {
        Some(engine) => {
            let manifest = engine.index().manifest();
            Json(json!({
                "status": "ok",
                "documents": manifest.document_count,
                "paragraphs": manifest.paragraph_count,
                "checksum": manifest.checksum,
            }))
            .into_response()
        }
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "status": "loading" }))).into_response(),
    }
}

async fn search(State(state): State<AppState>, Query(params): Query<SearchParams>) -> Response {
    let Some(engine) = state.current() else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "index not loaded");
    };
    let query = params.q.unwrap_or_default();
    if query.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "empty query");
    }
    let mut fusion = engine.config().fusion;
    if let Some(mu) = params.mu {
        fusion.mu = mu;
    }
    if let Some(k) = params.rrf_k {
        fusion.rrf_k = k;
    }
    let n = params.n.unwrap_or(DEFAULT_RESULTS).min(MAX_RUN_DEPTH);
    let result = tokio::task::spawn_blocking(move || engine.search_with(&query, n, &fusion)).await;
    match result {
        Ok(Ok(response)) => Json(response).into_response(),
        Ok(Err(e @ (Error::EmptyQuery | Error::InvalidConfig(_)))) => error(StatusCode::BAD_REQUEST, e.to_string()),
        Ok(Err(e)) => {
            log::error!("search failed: {e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/search", get(search))
        .route("/health", get(health))
        .with_state(state)
}

/// Serves until Ctrl-C. `load` runs on a blocking thread after the socket is
/// bound; until it finishes every search answers 503.
pub async fn serve<F>(addr: SocketAddr, state: AppState, load: F) -> anyhow::Result<()>
where
    F: FnOnce() -> scisearch_core::Result<Engine> + Send + 'static,
{
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let loader = state.clone();
    tokio::task::spawn_blocking(move || match load() {
        Ok(engine) => {
            log::info!("snapshot loaded: {} documents", engine.index().documents().len());
            loader.replace(engine);
        }
        Err(e) => log::error!("cannot load snapshot: {e}"),
    });
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
