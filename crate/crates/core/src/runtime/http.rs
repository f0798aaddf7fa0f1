//! HTTP service: JSON API plus static console assets.

use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{Engine, InteractRequest, RuntimeError};

pub const DEFAULT_HISTORY: usize = 10;

/// Served at `/` when no console build is installed.
const FALLBACK_INDEX: &str = include_str!("../../resources/index.html");

#[derive(Clone)]
struct AppState {
    engine: Arc<Engine>,
    ui_dir: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

fn error_response(err: RuntimeError) -> Response {
    let status = StatusCode::from_u16(err.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    if status.is_server_error() && status != StatusCode::SERVICE_UNAVAILABLE {
        log::error!("request failed: {err}");
    }
    let body = ErrorBody {
        error: err.code().into(),
        message: err.to_string(),
    };
    (status, Json(body)).into_response()
}

async fn interact(State(state): State<AppState>, Json(req): Json<InteractRequest>) -> Response {
    let engine = state.engine.clone();
    match tokio::task::spawn_blocking(move || engine.handle_interact(&req.text)).await {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e)) => error_response(e),
        Err(e) => {
            log::error!("interaction task failed: {e}");
            StatusCode::INTERNAL_SERVER_ERROR.into_response()
        }
    }
}

#[derive(Debug, Deserialize)]
struct HistoryQuery {
    n: Option<usize>,
}

async fn history(State(state): State<AppState>, Query(q): Query<HistoryQuery>) -> Response {
    Json(state.engine.handle_history(q.n.unwrap_or(DEFAULT_HISTORY))).into_response()
}

async fn model_info(State(state): State<AppState>) -> Response {
    let engine = state.engine.clone();
    match tokio::task::spawn_blocking(move || engine.model_info()).await {
        Ok(Ok(info)) => Json(info).into_response(),
        Ok(Err(e)) => error_response(e),
        Err(_) => StatusCode::INTERNAL_SERVER_ERROR.into_response(),
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("xml") => "application/xml",
        _ => "application/octet-stream",
    }
}

/// Resolves a request path inside `root`, rejecting anything that could
/// escape it.
fn resolve_asset(root: &Path, request: &str) -> Option<PathBuf> {
    let rel = Path::new(request.trim_start_matches('/'));
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    let path = if request.trim_matches('/').is_empty() {
        root.join("index.html")
    } else {
        root.join(rel)
    };
    path.is_file().then_some(path)
}

async fn asset(State(state): State<AppState>, uri: axum::http::Uri) -> Response {
    let request = uri.path();
    if let Some(path) = state.ui_dir.as_deref().and_then(|root| resolve_asset(root, request)) {
        return match tokio::fs::read(&path).await {
            Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
            Err(_) => StatusCode::NOT_FOUND.into_response(),
        };
    }
    if request == "/" || request == "/index.html" {
        return ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], FALLBACK_INDEX).into_response();
    }
    StatusCode::NOT_FOUND.into_response()
}

pub fn router(engine: Arc<Engine>, ui_dir: Option<PathBuf>) -> Router {
    Router::new()
        .route("/api/interact", post(interact))
        .route("/api/history", get(history))
        .route("/api/model/info", get(model_info))
        .fallback(get(asset))
        .with_state(AppState { engine, ui_dir })
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, engine: Arc<Engine>, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    log::info!("listening on http://{addr}");
    axum::serve(listener, router(engine, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
