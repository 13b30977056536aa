use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::error::ServiceError;
use crate::model::{ImportRequest, ReviewRequest, SubmissionRequest};
use crate::service::Service;

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    detail: String,
}

impl ApiError {
    fn bad_request(detail: String) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            detail,
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) | ServiceError::DuplicateIds(_) => StatusCode::CONFLICT,
            ServiceError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Log { .. } | ServiceError::Replay { .. } => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        ApiError {
            status,
            code: e.code(),
            detail: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({"error": self.code, "detail": self.detail})),
        )
            .into_response()
    }
}

type Shared = State<Arc<Service>>;
type ApiResult<T> = Result<T, ApiError>;

async fn import_tasks(
    State(svc): Shared,
    body: Result<Json<ImportRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    Ok((StatusCode::CREATED, Json(svc.import_tasks(&req)?)))
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: String,
}

async fn next_task(
    State(svc): Shared,
    q: Result<Query<NextQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = q?;
    Ok(Json(json!({ "task": svc.next_task(&q.annotator)? })))
}

async fn submit(
    State(svc): Shared,
    body: Result<Json<SubmissionRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    Ok((StatusCode::CREATED, Json(svc.submit(&req)?)))
}

async fn review_queue(State(svc): Shared) -> impl IntoResponse {
    Json(svc.review_queue())
}

async fn review(
    State(svc): Shared,
    body: Result<Json<ReviewRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    Ok((StatusCode::CREATED, Json(svc.review(&req)?)))
}

#[derive(Deserialize)]
struct ExportQuery {
    domain: Option<String>,
}

async fn export(
    State(svc): Shared,
    q: Result<Query<ExportQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = q?;
    Ok((
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        svc.export_jsonl(q.domain.as_deref()),
    ))
}

async fn annotator_stats(State(svc): Shared) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.annotator_report()?))
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: "not_found",
        detail: "no such endpoint".into(),
    }
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/tasks", post(import_tasks))
        .route("/tasks/next", get(next_task))
        .route("/submissions", post(submit))
        .route("/review/queue", get(review_queue))
        .route("/reviews", post(review))
        .route("/export", get(export))
        .route("/stats/annotators", get(annotator_stats))
        .fallback(not_found)
        .with_state(service)
}

/// Binds `addr` and serves until ctrl-c. `on_bound` receives the actual
/// address, which differs from `addr` when binding port 0.
pub async fn serve(
    addr: SocketAddr,
    service: Arc<Service>,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
