//! REST endpoints over [`Service`]. Each mutating route maps to exactly one
//! service operation; errors are problem-details JSON `{status, code, detail}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tomigo_core::graph::{graph_value, GraphPatch};
use tomigo_core::provider::{media_type_for_extension, ImageData};

use crate::error::ServiceError;
use crate::http_provider::sniff_media_type;
use crate::service::Service;

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = json!({ "status": status.as_u16(), "code": self.0.code(), "detail": self.0.to_string() });
        (status, [(header::CONTENT_TYPE, "application/problem+json")], body.to_string()).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs a blocking service call off the async executor; providers may do
/// synchronous network IO.
async fn blocking<T, F>(service: &Arc<Service>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
{
    let service = service.clone();
    match tokio::task::spawn_blocking(move || f(&service)).await {
        Ok(r) => r.map_err(ApiError),
        Err(e) => Err(ApiError(ServiceError::BadRequest(format!("operation aborted: {e}")))),
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError(ServiceError::BadRequest(format!("invalid request body: {e}"))))
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/projects", post(create_project))
        .route("/projects/:id", get(snapshot))
        .route("/projects/:id/images", post(add_image))
        .route("/projects/:id/synthesize", post(synthesize))
        .route("/projects/:id/graph", get(graph))
        .route("/projects/:id/graph/patch", post(patch_graph))
        .route("/projects/:id/messages", post(message))
        .route("/projects/:id/questions/next", get(next_question))
        .route("/projects/:id/designs/generate", post(generate))
        .route("/projects/:id/designs/:d/update", post(update_design))
        .route("/projects/:id/designs/:d/apply-node/:node", post(apply_node))
        .route("/projects/:id/designs/:d/image", get(design_image))
        .with_state(service)
}

#[derive(Deserialize)]
struct CreateProject {
    design_type: String,
    brief: String,
}

async fn create_project(State(s): State<Arc<Service>>, body: Bytes) -> ApiResult<Response> {
    let req: CreateProject = parse_body(&body)?;
    let id = blocking(&s, move |s| s.create_project(None, &req.design_type, &req.brief, &[])).await?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))).into_response())
}

async fn snapshot(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let project = s.snapshot(&id)?;
    Ok(Json(project.snapshot_value()))
}

async fn graph(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let project = s.snapshot(&id)?;
    Ok(Json(graph_value(project.graph())))
}

async fn add_image(State(s): State<Arc<Service>>, Path(id): Path<String>, mut form: Multipart) -> ApiResult<Response> {
    let bad = |m: String| ApiError(ServiceError::BadRequest(m));
    let field = form
        .next_field()
        .await
        .map_err(|e| bad(e.to_string()))?
        .ok_or_else(|| bad("multipart body has no image part".into()))?;
    let declared = field
        .content_type()
        .filter(|t| t.starts_with("image/"))
        .map(str::to_string)
        .or_else(|| {
            let name = field.file_name()?;
            let ext = name.rsplit_once('.')?.1;
            media_type_for_extension(ext).map(str::to_string)
        });
    let bytes = field.bytes().await.map_err(|e| bad(e.to_string()))?;
    if bytes.is_empty() {
        return Err(bad("image part is empty".into()));
    }
    let media_type = declared.unwrap_or_else(|| sniff_media_type(&bytes).to_string());
    let image = ImageData::new(media_type, bytes.to_vec());
    let index = blocking(&s, move |s| s.add_image(&id, image)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "index": index }))).into_response())
}

async fn synthesize(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let r = blocking(&s, move |s| s.synthesize(&id)).await?;
    Ok(Json(json!({
        "graph": graph_value(&r.graph),
        "constraint_report": r.constraint_report,
        "warnings": r.warnings,
    })))
}

async fn patch_graph(State(s): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let patch: GraphPatch = parse_body(&body)?;
    let r = blocking(&s, move |s| s.patch_graph(&id, patch)).await?;
    Ok(Json(json!({ "graph": graph_value(&r.graph), "conflicts": r.conflicts })))
}

#[derive(Deserialize)]
struct PostMessage {
    text: String,
}

async fn message(State(s): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: PostMessage = parse_body(&body)?;
    let r = blocking(&s, move |s| s.handle_user_message(&id, &req.text)).await?;
    Ok(Json(serde_json::to_value(r).expect("result serializes")))
}

async fn next_question(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let q = blocking(&s, move |s| s.next_question(&id)).await?;
    Ok(Json(json!({ "text": q.text, "target_types": q.target_type_keys })))
}

async fn generate(State(s): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Response> {
    let r = blocking(&s, move |s| s.generate(&id, false)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "design_id": r.design_id }))).into_response())
}

async fn update_design(State(s): State<Arc<Service>>, Path((id, d)): Path<(String, String)>) -> ApiResult<Response> {
    let r = blocking(&s, move |s| s.update_design(&id, &d)).await?;
    Ok((StatusCode::CREATED, Json(serde_json::to_value(r).expect("result serializes"))).into_response())
}

async fn apply_node(
    State(s): State<Arc<Service>>,
    Path((id, d, node)): Path<(String, String, String)>,
) -> ApiResult<Response> {
    let r = blocking(&s, move |s| s.apply_node(&id, &d, &node)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "design_id": r.design_id }))).into_response())
}

async fn design_image(State(s): State<Arc<Service>>, Path((id, d)): Path<(String, String)>) -> ApiResult<Response> {
    let image = blocking(&s, move |s| s.design_image(&id, &d)).await?;
    Ok(([(header::CONTENT_TYPE, image.media_type)], image.bytes).into_response())
}
