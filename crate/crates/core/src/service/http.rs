//! HTTP binding of [`StudyService`].

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::json;

use super::{AudioCheckAnswer, CreateSession, ServiceError, StudyService, SubmitResponses};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!("{self}");
        }
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type Svc = State<Arc<StudyService>>;
type HttpResult = std::result::Result<Response, ServiceError>;

/// Malformed bodies are schema violations, reported as 422.
fn body<T: DeserializeOwned>(b: std::result::Result<Json<T>, JsonRejection>) -> std::result::Result<T, ServiceError> {
    b.map(|Json(v)| v).map_err(|e| ServiceError::Unprocessable(e.body_text()))
}

async fn blocking<T, F>(f: F) -> std::result::Result<T, ServiceError>
where
    F: FnOnce() -> std::result::Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn create_session(State(svc): Svc, b: std::result::Result<Json<CreateSession>, JsonRejection>) -> HttpResult {
    let req = body(b)?;
    let view = blocking(move || svc.create_session(&req)).await?;
    let status = if view.resumed { StatusCode::OK } else { StatusCode::CREATED };
    Ok((status, Json(view)).into_response())
}

async fn get_page(State(svc): Svc, Path(id): Path<String>) -> HttpResult {
    Ok(Json(svc.current_view(&id)?).into_response())
}

async fn advance(State(svc): Svc, Path(id): Path<String>) -> HttpResult {
    Ok(Json(blocking(move || svc.advance(&id)).await?).into_response())
}

async fn audio_check(
    State(svc): Svc,
    Path(id): Path<String>,
    b: std::result::Result<Json<AudioCheckAnswer>, JsonRejection>,
) -> HttpResult {
    let req = body(b)?;
    Ok(Json(blocking(move || svc.audio_check(&id, &req)).await?).into_response())
}

async fn responses(
    State(svc): Svc,
    Path(id): Path<String>,
    b: std::result::Result<Json<SubmitResponses>, JsonRejection>,
) -> HttpResult {
    let req = body(b)?;
    Ok(Json(blocking(move || svc.submit(&id, &req)).await?).into_response())
}

async fn demographics(
    State(svc): Svc,
    Path(id): Path<String>,
    b: std::result::Result<Json<BTreeMap<String, String>>, JsonRejection>,
) -> HttpResult {
    let req = body(b)?;
    Ok(Json(blocking(move || svc.submit_demographics(&id, req)).await?).into_response())
}

async fn media(State(svc): Svc, Path(key): Path<String>) -> HttpResult {
    let url = svc.media_url(&key)?;
    Ok((StatusCode::TEMPORARY_REDIRECT, [(header::LOCATION, url)]).into_response())
}

async fn health() -> &'static str {
    "ok"
}

pub fn router(service: Arc<StudyService>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/page", get(get_page))
        .route("/sessions/{id}/advance", post(advance))
        .route("/sessions/{id}/audio-check", post(audio_check))
        .route("/sessions/{id}/responses", post(responses))
        .route("/sessions/{id}/demographics", post(demographics))
        .route("/media/{key}", get(media))
        .with_state(service)
}

/// Binds and serves until the process is stopped, snapshotting periodically.
pub async fn serve(service: Arc<StudyService>) -> crate::Result<()> {
    let cfg = service.config().clone();
    if cfg.snapshot_interval_s > 0 {
        let svc = service.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(std::time::Duration::from_secs(cfg.snapshot_interval_s));
            tick.tick().await;
            loop {
                tick.tick().await;
                let s = svc.clone();
                match tokio::task::spawn_blocking(move || s.snapshot()).await {
                    Ok(Err(e)) => tracing::warn!("snapshot failed: {e}"),
                    Err(e) => tracing::warn!("snapshot task failed: {e}"),
                    Ok(Ok(())) => {}
                }
            }
        });
    }
    let listener = tokio::net::TcpListener::bind((cfg.bind.as_str(), cfg.port)).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service)).await?;
    Ok(())
}
