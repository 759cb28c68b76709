//! HTTP scoring service.

use std::net::SocketAddr;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use op_reward::api::{self, MatchRequest, ScoreRequest};
use op_reward::embedding::EmbeddingProvider;
use op_reward::reward::RewardConfig;
use op_reward::{Error, ENGINE_VERSION};
use serde::de::DeserializeOwned;
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

#[derive(Clone)]
pub struct AppState {
    pub provider: Arc<dyn EmbeddingProvider>,
    pub config: Arc<RewardConfig>,
    pub permits: Arc<Semaphore>,
}

impl AppState {
    pub fn new(provider: Arc<dyn EmbeddingProvider>, config: RewardConfig, workers: usize) -> Self {
        Self {
            provider,
            config: Arc::new(config),
            permits: Arc::new(Semaphore::new(workers.max(1))),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/score", post(score))
        .route("/match", post(match_handler))
        .route("/healthz", get(|| async { json_response(StatusCode::OK, json!({"status": "ok"}).to_string()) }))
        .route(
            "/version",
            get(|| async { json_response(StatusCode::OK, json!({"engine_version": ENGINE_VERSION}).to_string()) }),
        )
        .with_state(state)
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(status: StatusCode, message: String, path: Option<String>) -> Response {
    let body = match path {
        Some(p) => json!({"error": message, "path": p}),
        None => json!({"error": message}),
    };
    json_response(status, body.to_string())
}

pub fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::EmptyInput("references") => StatusCode::UNPROCESSABLE_ENTITY,
        e if e.is_provider_failure() => StatusCode::BAD_GATEWAY,
        Error::InvalidArgument(_)
        | Error::EmptyInput(_)
        | Error::NonFinite(_)
        | Error::LengthMismatch(_)
        | Error::UnknownStrategy { .. } => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, Response> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        error_response(StatusCode::BAD_REQUEST, e.inner().to_string(), Some(path))
    })
}

/// Runs `work` on the blocking pool under a worker permit.
async fn run_blocking<T, F>(state: &AppState, work: F) -> Response
where
    T: serde::Serialize + Send + 'static,
    F: FnOnce() -> op_reward::Result<T> + Send + 'static,
{
    let Ok(_permit) = state.permits.acquire().await else {
        return error_response(StatusCode::SERVICE_UNAVAILABLE, "shutting down".into(), None);
    };
    match tokio::task::spawn_blocking(work).await {
        Ok(Ok(value)) => match api::to_wire(&value) {
            Ok(body) => json_response(StatusCode::OK, body),
            Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), None),
        },
        Ok(Err(e)) => {
            let status = status_for(&e);
            if status.is_server_error() {
                log::error!("request failed: {e}");
            }
            error_response(status, e.to_string(), None)
        }
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), None),
    }
}

async fn score(State(state): State<AppState>, body: Bytes) -> Response {
    let req: ScoreRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let provider = state.provider.clone();
    let config = state.config.clone();
    run_blocking(&state, move || api::score(&req, &config, provider.as_ref())).await
}

async fn match_handler(State(state): State<AppState>, body: Bytes) -> Response {
    let req: MatchRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let config = state.config.clone();
    run_blocking(&state, move || api::match_scores(&req, &config)).await
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutdown requested; draining in-flight requests");
}

/// Serves on `listener` until `shutdown` resolves, then drains in-flight requests.
pub async fn serve_on(
    listener: TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .context("server error")
}

/// Builds a runtime and serves until SIGINT or SIGTERM.
pub fn serve_blocking(bind: &str, provider: Arc<dyn EmbeddingProvider>, config: RewardConfig, workers: usize) -> Result<()> {
    let addr: SocketAddr = bind.parse().map_err(|e| crate::UsageError(format!("invalid --bind {bind:?}: {e}")))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(workers)
        .enable_all()
        .build()?;
    // Keep one handle out here so a blocking HTTP client is never dropped on a runtime thread.
    let _outer = provider.clone();
    let state = AppState::new(provider, config, workers);
    runtime.block_on(async move {
        let listener = TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        log::info!("listening on {}", listener.local_addr()?);
        serve_on(listener, state, shutdown_signal()).await
    })
}
