use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;

use super::pipeline::{ListingPipeline, ListingRequest, ListingResponse, PipelineTrace};
use super::ServiceError;
use crate::catalog::DraftError;
use crate::gateway::StreamStatus;

/// Final SSE event of a generation stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamTrailer {
    pub status: StreamStatus,
    pub draft_id: String,
    pub manual_edit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub trace: PipelineTrace,
}

impl From<ListingResponse> for StreamTrailer {
    fn from(r: ListingResponse) -> Self {
        Self {
            status: r.status,
            draft_id: r.draft_id,
            manual_edit: r.manual_edit,
            detail: r.detail,
            trace: r.trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkEvent {
    pub text: String,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            ServiceError::InvalidRequest(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            ServiceError::UnsafeImage(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unsafe_image"),
            ServiceError::DraftNotFound(_) | ServiceError::Draft(DraftError::NotFound(_)) => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            ServiceError::Draft(DraftError::IllegalTransition { .. }) => (StatusCode::CONFLICT, "illegal_transition"),
            ServiceError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        (
            status,
            Json(ErrorBody {
                error: code,
                message: self.to_string(),
            }),
        )
            .into_response()
    }
}

#[derive(Debug, Deserialize)]
struct GenerateQuery {
    #[serde(default)]
    stream: Option<bool>,
}

#[derive(Debug, Deserialize)]
struct PublishBody {
    final_text: String,
}

/// Routes under `/v1` plus `/healthz`. Action verbs follow a colon in the
/// last path segment, as in `/v1/listings:generate`.
pub fn router(pipeline: Arc<ListingPipeline>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/{action}", post(collection_action))
        .route("/v1/drafts/{id}", get(get_draft).post(draft_action))
        .with_state(pipeline)
}

/// [`router`] plus static files under `/ui/`.
pub fn router_with_ui(pipeline: Arc<ListingPipeline>, ui_dir: Option<&std::path::Path>) -> Router {
    let app = router(pipeline);
    match ui_dir {
        Some(dir) => app.nest_service("/ui", tower_http::services::ServeDir::new(dir)),
        None => app,
    }
}

async fn healthz(State(p): State<Arc<ListingPipeline>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "status": "ok",
        "products": p.catalog.len(),
        "indexed": p.index.load().len(),
        "drafts": p.drafts.len(),
    }))
}

async fn collection_action(
    State(p): State<Arc<ListingPipeline>>,
    Path(action): Path<String>,
    Query(q): Query<GenerateQuery>,
    Json(req): Json<ListingRequest>,
) -> Result<Response, ServiceError> {
    if action != "listings:generate" {
        return Err(ServiceError::NotFound(format!("/v1/{action}")));
    }
    let prepared = p.prepare(&req)?;
    if q.stream == Some(false) {
        let response = p.generate(prepared, &mut |_| true).await?;
        return Ok(Json(response).into_response());
    }
    Ok(sse_response(p, prepared).into_response())
}

enum Frame {
    Chunk(String),
    Trailer(Result<ListingResponse, ServiceError>),
}

fn sse_response(
    pipeline: Arc<ListingPipeline>,
    prepared: super::pipeline::PreparedListing,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let (tx, rx) = mpsc::unbounded_channel::<Frame>();
    tokio::spawn(async move {
        let chunk_tx = tx.clone();
        // A failed send means the client went away; the gateway then
        // stops the backend and records the draft as cancelled.
        let mut on_chunk = move |c: &str| chunk_tx.send(Frame::Chunk(c.to_string())).is_ok();
        let result = pipeline.generate(prepared, &mut on_chunk).await;
        let _ = tx.send(Frame::Trailer(result));
    });
    let events = stream::unfold(rx, |mut rx| async move {
        let frame = rx.recv().await?;
        let event = match frame {
            Frame::Chunk(text) => Event::default()
                .event("chunk")
                .json_data(ChunkEvent { text })
                .expect("serializable"),
            Frame::Trailer(Ok(r)) => Event::default()
                .event("trailer")
                .json_data(StreamTrailer::from(r))
                .expect("serializable"),
            Frame::Trailer(Err(e)) => Event::default()
                .event("error")
                .json_data(serde_json::json!({"message": e.to_string()}))
                .expect("serializable"),
        };
        Some((Ok(event), rx))
    });
    Sse::new(events.boxed()).keep_alive(KeepAlive::default())
}

async fn get_draft(State(p): State<Arc<ListingPipeline>>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    Ok(Json(p.get_draft(&id)?).into_response())
}

async fn draft_action(
    State(p): State<Arc<ListingPipeline>>,
    Path(segment): Path<String>,
    Json(body): Json<PublishBody>,
) -> Result<Response, ServiceError> {
    match segment.rsplit_once(':') {
        Some((id, "publish")) => Ok(Json(p.publish_draft(id, &body.final_text)?).into_response()),
        _ => Err(ServiceError::NotFound(format!("/v1/drafts/{segment}"))),
    }
}

/// Parses an SSE body into chunk texts and the trailer.
pub fn parse_sse(body: &str) -> (Vec<String>, Option<StreamTrailer>) {
    let mut chunks = Vec::new();
    let mut trailer = None;
    for block in body.split("\n\n") {
        let mut event = "message";
        let mut data = String::new();
        for line in block.lines() {
            if let Some(e) = line.strip_prefix("event:") {
                event = e.trim();
            } else if let Some(d) = line.strip_prefix("data:") {
                if !data.is_empty() {
                    data.push('\n');
                }
                data.push_str(d.strip_prefix(' ').unwrap_or(d));
            }
        }
        match event {
            "chunk" => {
                if let Ok(c) = serde_json::from_str::<ChunkEvent>(&data) {
                    chunks.push(c.text);
                }
            }
            "trailer" => trailer = serde_json::from_str(&data).ok(),
            _ => {}
        }
    }
    (chunks, trailer)
}
