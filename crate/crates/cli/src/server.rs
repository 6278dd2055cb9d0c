//! HTTP front end for the share store.
//!
//! ```text
//! POST /projects                    multipart: bundle (file), metadata (JSON)
//! GET  /projects?tag=&page=&page_size=
//! GET  /projects/{id}
//! GET  /projects/{id}/bundle
//! POST /jams
//! GET  /jams/{id}
//! POST /jams/{id}/submissions       {"submission_id": ...}
//! GET  /jams/{id}/stats
//! ```
//!
//! Errors are `{code, message}` JSON with an HTTP status chosen per code.

use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use brickjam_core::analytics::report;
use brickjam_core::project::Diagnostic;
use brickjam_core::share::{JamSpec, ShareError, ShareStore, SubmissionMetadata};
use chrono::Utc;
use serde::{Deserialize, Serialize};

pub const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;
const DEFAULT_PAGE_SIZE: usize = 20;

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl From<ShareError> for ApiError {
    fn from(e: ShareError) -> Self {
        let status = match &e {
            ShareError::InvalidBundle { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ShareError::InvalidMetadata(_) | ShareError::InvalidJam(_) | ShareError::InvalidPage => {
                StatusCode::BAD_REQUEST
            }
            ShareError::DuplicateJam(_) => StatusCode::CONFLICT,
            ShareError::UnknownSubmission(_) | ShareError::UnknownJam(_) => StatusCode::NOT_FOUND,
            ShareError::Corrupt { .. } | ShareError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let diagnostics = match &e {
            ShareError::InvalidBundle { diagnostics, .. } => diagnostics.clone(),
            _ => Vec::new(),
        };
        ApiError {
            diagnostics,
            ..ApiError::new(status, e.code(), e.to_string())
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

type Shared = Arc<RwLock<ShareStore>>;
type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ShareError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

/// Store reads run off the async workers and share the lock.
async fn read<T, F>(store: &Shared, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&ShareStore) -> Result<T, ShareError> + Send + 'static,
{
    let store = store.clone();
    blocking(move || f(&store.read().unwrap_or_else(|p| p.into_inner()))).await
}

/// Writers are serialized by the lock.
async fn write<T, F>(store: &Shared, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&mut ShareStore) -> Result<T, ShareError> + Send + 'static,
{
    let store = store.clone();
    blocking(move || f(&mut store.write().unwrap_or_else(|p| p.into_inner()))).await
}

pub fn router(store: ShareStore) -> Router {
    let shared: Shared = Arc::new(RwLock::new(store));
    Router::new()
        .route("/projects", post(upload).get(search))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/bundle", get(get_bundle))
        .route("/jams", post(create_jam))
        .route("/jams/{id}", get(get_jam))
        .route("/jams/{id}/submissions", post(submit))
        .route("/jams/{id}/stats", get(jam_stats))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(shared)
}

async fn upload(State(store): State<Shared>, mut form: Multipart) -> ApiResult<Response> {
    let mut bundle = None;
    let mut metadata = None;
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request("malformed_multipart", e.body_text()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request("malformed_multipart", e.body_text()))?;
        match name.as_str() {
            "bundle" => bundle = Some(bytes),
            "metadata" => metadata = Some(bytes),
            other => {
                return Err(ApiError::bad_request(
                    "unexpected_field",
                    format!("unexpected form field '{other}'"),
                ))
            }
        }
    }
    let bundle = bundle.ok_or_else(|| ApiError::bad_request("missing_field", "form field 'bundle' is required"))?;
    let metadata = metadata.ok_or_else(|| ApiError::bad_request("missing_field", "form field 'metadata' is required"))?;
    let meta: SubmissionMetadata = parse_json(&metadata)?;
    let receipt = write(&store, move |s| s.upload(&bundle, meta, Utc::now())).await?;
    Ok((StatusCode::CREATED, Json(receipt)).into_response())
}

fn parse_json<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request("malformed_json", e.to_string()))
}

#[derive(Deserialize)]
struct SearchQuery {
    tag: Option<String>,
    #[serde(default)]
    page: usize,
    page_size: Option<usize>,
}

async fn search(State(store): State<Shared>, Query(q): Query<SearchQuery>) -> ApiResult<Response> {
    let tag = q
        .tag
        .filter(|t| !t.is_empty())
        .ok_or_else(|| ApiError::bad_request("missing_tag", "query parameter 'tag' is required"))?;
    let size = q.page_size.unwrap_or(DEFAULT_PAGE_SIZE);
    let page = read(&store, move |s| s.search(&tag, q.page, size)).await?;
    Ok(Json(page).into_response())
}

async fn get_project(State(store): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let record = read(&store, move |s| {
        s.get(&id).cloned().ok_or(ShareError::UnknownSubmission(id))
    })
    .await?;
    Ok(Json(record).into_response())
}

async fn get_bundle(State(store): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let bytes = read(&store, move |s| s.download(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/zip")], bytes).into_response())
}

async fn create_jam(State(store): State<Shared>, body: Bytes) -> ApiResult<Response> {
    let spec: JamSpec = parse_json(&body)?;
    let jam = write(&store, move |s| s.create_jam(spec)).await?;
    Ok((StatusCode::CREATED, Json(jam)).into_response())
}

async fn get_jam(State(store): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let jam = read(&store, move |s| s.jam(&id).cloned().ok_or(ShareError::UnknownJam(id))).await?;
    Ok(Json(jam).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitBody {
    submission_id: String,
}

async fn submit(State(store): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let SubmitBody { submission_id } = parse_json(&body)?;
    let outcome = write(&store, move |s| s.submit_to_jam(&id, &submission_id)).await?;
    Ok(Json(outcome).into_response())
}

async fn jam_stats(State(store): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let records = read(&store, move |s| s.jam_records(&id)).await?;
    Ok(Json(report(&records)).into_response())
}
