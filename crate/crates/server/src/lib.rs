//! HTTP front end for [`ucpnet::service::SessionStore`].
//!
//! | method | path | body | success |
//! |---|---|---|---|
//! | POST | `/sessions` | create request | 201, status view |
//! | GET | `/sessions/{id}` | | 200, status view |
//! | GET | `/sessions/{id}/query` | | 200, pending query |
//! | POST | `/sessions/{id}/responses` | `{query_id, response_index}` | 200, status view |
//! | GET | `/sessions/{id}/transcript` | | 200, transcript |
//!
//! Failures answer with `{"error": {"code", "message"}}` and 404 (unknown
//! session), 409 (stale query), 422 (contradiction or empty weight space)
//! or 400 (malformed request).

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::Value;

use ucpnet::io::parse_json;
use ucpnet::service::{ResponseRequest, ServiceError, ServiceResult, SessionStore};

struct ApiError(ServiceError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0.body())).into_response()
    }
}

type Store = Arc<SessionStore>;

/// Runs a store call on the blocking pool; regret recomputation is CPU
/// bound.
async fn blocking<F>(store: Store, f: F) -> Result<Json<Value>, ApiError>
where
    F: FnOnce(&SessionStore) -> ServiceResult<Value> + Send + 'static,
{
    match tokio::task::spawn_blocking(move || f(&store)).await {
        Ok(r) => r.map(Json).map_err(ApiError),
        Err(e) => Err(ApiError(ServiceError::Model(ucpnet::Error::Io(std::io::Error::other(
            e.to_string(),
        ))))),
    }
}

async fn create(State(store): State<Store>, body: String) -> Result<(StatusCode, Json<Value>), ApiError> {
    let view = blocking(store, move |s| s.create_from_json(&body)).await?;
    Ok((StatusCode::CREATED, view))
}

async fn status(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    blocking(store, move |s| s.status(&id)).await
}

async fn query(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    blocking(store, move |s| s.next_query(&id)).await
}

async fn transcript(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    blocking(store, move |s| s.transcript(&id)).await
}

async fn respond(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<Value>, ApiError> {
    blocking(store, move |s| {
        let req: ResponseRequest = parse_json(&body)?;
        s.submit(&id, &req)
    })
    .await
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(status))
        .route("/sessions/{id}/query", get(query))
        .route("/sessions/{id}/responses", post(respond))
        .route("/sessions/{id}/transcript", get(transcript))
        .with_state(store)
}
