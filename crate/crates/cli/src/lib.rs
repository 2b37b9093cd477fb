//! HTTP/JSON front end for the moderation service.
//!
//! All writes go through one lock, so events are applied and logged in a
//! single total order. Reads share the lock and see the state between events.

use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use modhub_core::{Error, MessageId, MessageStatus, Service, UserRef, Verdict};

pub type Shared = Arc<RwLock<Service>>;

pub fn shared(service: Service) -> Shared {
    Arc::new(RwLock::new(service))
}

/// Build the API router. When `console_dir` is given, its files are served
/// under `/console`.
pub fn router(state: Shared, console_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/messages", post(post_message))
        .route("/api/messages/{id}", get(get_message))
        .route("/api/messages/{id}/flags", post(post_flag))
        .route("/api/messages/{id}/editorial", post(post_editorial))
        .route("/api/review-queue", get(review_queue))
        .route("/api/users/{anon_id}/reputation", get(reputation))
        .route("/api/metrics", get(metrics))
        .with_state(state);
    match console_dir {
        Some(dir) => api.nest_service(
            "/console",
            ServeDir::new(dir).append_index_html_on_directories(true),
        ),
        None => api,
    }
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    detail: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, detail: impl Into<Option<String>>) -> Self {
        Self {
            status,
            code,
            detail: detail.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let detail = Some(e.to_string());
        match e {
            Error::UnknownMessage(_) => Self::new(StatusCode::NOT_FOUND, "unknown_message", None),
            Error::DuplicateEditorialLabel(_) => {
                Self::new(StatusCode::CONFLICT, "duplicate_editorial_label", detail)
            }
            Error::InvalidIdentity => {
                Self::new(StatusCode::BAD_REQUEST, "invalid_identity", detail)
            }
            Error::ContractViolation(_) => {
                Self::new(StatusCode::BAD_REQUEST, "contract_violation", detail)
            }
            Error::WriteRefused | Error::Storage(_) => {
                Self::new(StatusCode::SERVICE_UNAVAILABLE, "write_refused", detail)
            }
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = match self.detail {
            Some(detail) => json!({ "error": self.code, "detail": detail }),
            None => json!({ "error": self.code }),
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

// Parsed by hand so every malformed body is a 400, whatever the content type.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(bytes)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", e.to_string()))
}

fn write(state: &Shared) -> std::sync::RwLockWriteGuard<'_, Service> {
    state.write().unwrap_or_else(|p| p.into_inner())
}

fn read(state: &Shared) -> std::sync::RwLockReadGuard<'_, Service> {
    state.read().unwrap_or_else(|p| p.into_inner())
}

#[derive(Deserialize)]
struct NewMessage {
    author_raw_id: String,
    text: String,
}

#[derive(Deserialize)]
struct NewFlag {
    user_raw_id: String,
    verdict: Verdict,
}

#[derive(Deserialize)]
struct NewLabel {
    moderator_raw_id: String,
    verdict: Verdict,
}

#[derive(Serialize)]
struct FlagResponse {
    status: MessageStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    probability: Option<f64>,
}

#[derive(Serialize)]
struct MessageView {
    message_id: MessageId,
    status: MessageStatus,
    toxic_flags: usize,
    acceptable_flags: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    latest_probability: Option<f64>,
}

#[derive(Deserialize)]
struct QueueParams {
    limit: Option<usize>,
}

async fn post_message(State(state): State<Shared>, bytes: Bytes) -> ApiResult<impl IntoResponse> {
    let req: NewMessage = body(&bytes)?;
    let applied = write(&state).post_message(&req.author_raw_id, &req.text)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "message_id": applied.message_id })),
    ))
}

async fn post_flag(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<MessageId>,
    bytes: Bytes,
) -> ApiResult<impl IntoResponse> {
    let req: NewFlag = body(&bytes)?;
    let applied = write(&state).flag(id, &req.user_raw_id, req.verdict)?;
    Ok(Json(FlagResponse {
        status: applied.status,
        probability: applied.prediction.map(|p| p.probability),
    }))
}

async fn post_editorial(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<MessageId>,
    bytes: Bytes,
) -> ApiResult<impl IntoResponse> {
    let req: NewLabel = body(&bytes)?;
    let applied = write(&state).label(id, &req.moderator_raw_id, req.verdict)?;
    Ok(Json(
        json!({ "status": applied.status, "model_version": applied.model_version }),
    ))
}

async fn get_message(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<MessageId>,
) -> ApiResult<impl IntoResponse> {
    let service = read(&state);
    let m = service
        .state()
        .message_state(id)
        .ok_or(Error::UnknownMessage(id))?;
    Ok(Json(MessageView {
        message_id: id,
        status: m.record.status,
        toxic_flags: m.count(Verdict::Toxic),
        acceptable_flags: m.count(Verdict::Acceptable),
        latest_probability: m.latest_prediction.map(|p| p.probability),
    }))
}

async fn review_queue(
    State(state): State<Shared>,
    Query(q): Query<QueueParams>,
) -> impl IntoResponse {
    let mut queue = read(&state).state().review_queue();
    if let Some(limit) = q.limit {
        queue.truncate(limit);
    }
    Json(queue)
}

async fn reputation(
    State(state): State<Shared>,
    UrlPath(anon_id): UrlPath<String>,
) -> ApiResult<impl IntoResponse> {
    let user: UserRef = anon_id.parse().map_err(|_| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid_user",
            "expected 16 hex digits".to_string(),
        )
    })?;
    let service = read(&state);
    // Users without adjudicated flags sit at the prior.
    let (agree, disagree, reliability) =
        service.state().reputation(user).map_or((0, 0, 0.5), |r| {
            (r.agree_count, r.disagree_count, r.reliability())
        });
    Ok(Json(
        json!({ "user": user, "agree": agree, "disagree": disagree, "reliability": reliability }),
    ))
}

async fn metrics(State(state): State<Shared>) -> impl IntoResponse {
    Json(read(&state).metrics())
}
