use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::Value;

use crate::error::{ApiError, ErrorCode};
use crate::store::{preview, CreateTask, ResolveRequest, Store, SubmitRequest};
use crate::task::Status;

type Shared = Arc<Store>;
type ApiResult<T> = Result<T, ApiError>;

fn bad_json(r: JsonRejection) -> ApiError {
    ApiError::new(ErrorCode::InvalidRequest, r.body_text())
}

fn bad_query(r: QueryRejection) -> ApiError {
    ApiError::new(ErrorCode::InvalidRequest, r.body_text())
}

/// Routes of the `/v1` API.
pub fn router(store: Shared) -> Router {
    let v1 = Router::new()
        .route("/tasks", post(create_task).get(list_tasks))
        .route("/tasks/next", get(next_task))
        .route("/tasks/:id", get(get_task))
        .route("/tasks/:id/submissions", post(submit))
        .route("/tasks/:id/diff", get(diff))
        .route("/tasks/:id/resolution", post(resolve))
        .route("/export", get(export))
        .route("/preview", get(preview_handler));
    Router::new()
        .nest("/v1", v1)
        .fallback(|| async { ApiError::new(ErrorCode::InvalidRequest, "no such endpoint").into_response_with(StatusCode::NOT_FOUND) })
        .with_state(store)
}

impl ApiError {
    fn into_response_with(self, status: StatusCode) -> Response {
        (status, Json(self)).into_response()
    }
}

async fn create_task(State(store): State<Shared>, body: Result<Json<CreateTask>, JsonRejection>) -> ApiResult<Response> {
    let Json(req) = body.map_err(bad_json)?;
    let task = store.create_task(req)?;
    Ok((StatusCode::CREATED, Json(task)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ListQuery {
    status: Option<Status>,
}

async fn list_tasks(State(store): State<Shared>, q: Result<Query<ListQuery>, QueryRejection>) -> ApiResult<Response> {
    let Query(q) = q.map_err(bad_query)?;
    Ok(Json(store.list(q.status)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NextQuery {
    annotator: String,
}

async fn next_task(State(store): State<Shared>, q: Result<Query<NextQuery>, QueryRejection>) -> ApiResult<Response> {
    let Query(q) = q.map_err(bad_query)?;
    Ok(Json(store.next_task(&q.annotator)?).into_response())
}

async fn get_task(State(store): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(store.task(&id)?).into_response())
}

async fn submit(
    State(store): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<SubmitRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body.map_err(bad_json)?;
    Ok(Json(store.submit(&id, req)?).into_response())
}

async fn diff(State(store): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(store.diff(&id)?).into_response())
}

async fn resolve(
    State(store): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<ResolveRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body.map_err(bad_json)?;
    Ok(Json(store.resolve(&id, req)?).into_response())
}

#[derive(Deserialize, Default, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum ExportFilter {
    #[default]
    Resolved,
    All,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExportQuery {
    #[serde(default)]
    status: ExportFilter,
}

async fn export(State(store): State<Shared>, q: Result<Query<ExportQuery>, QueryRejection>) -> ApiResult<Response> {
    let Query(q) = q.map_err(bad_query)?;
    let body = store.export(q.status == ExportFilter::All);
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PreviewQuery {
    src: String,
    ops: String,
}

async fn preview_handler(q: Result<Query<PreviewQuery>, QueryRejection>) -> ApiResult<Response> {
    let Query(q) = q.map_err(bad_query)?;
    let ops: Value = serde_json::from_str(&q.ops)
        .map_err(|e| ApiError::new(ErrorCode::InvalidRequest, format!("ops is not JSON: {e}")).at("ops"))?;
    Ok(Json(preview(&q.src, &ops)?).into_response())
}
