//! HTTP+JSON routes. All paths live under `/api`; see the README for the table.

use std::convert::Infallible;
use std::sync::Arc;
use std::time::Instant;

use adscribe_core::announce::{announce_playback, PlaybackEvent};
use adscribe_core::script::ScriptEdit;
use axum::body::Body;
use axum::extract::{Path, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures::Stream;
use serde::Deserialize;
use tokio::sync::broadcast::error::RecvError;

use crate::error::ServiceError;
use crate::service::{Announcement, SessionService};

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<SessionService>,
    pub token: Option<String>,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body())).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ServiceError>;

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateProject {
    video_ref: String,
    video_duration_ms: u64,
}

#[derive(Debug, Deserialize)]
struct PutScript {
    script: String,
}

#[derive(Debug, Deserialize)]
struct PostCommand {
    command: String,
}

#[derive(Debug, Deserialize)]
struct AdTrack {
    enabled: bool,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Cursor {
    current_line: Option<usize>,
    ask_only: Option<bool>,
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/announce", post(announce))
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/session", get(get_session))
        .route("/projects/{id}/script", get(get_script).put(put_script))
        .route("/projects/{id}/revisions", get(revisions))
        .route("/projects/{id}/edits", post(edit_script))
        .route("/projects/{id}/commands", post(post_command))
        .route("/projects/{id}/suggestion/accept", post(accept_suggestion))
        .route("/projects/{id}/suggestion/reject", post(reject_suggestion))
        .route("/projects/{id}/playback", post(playback))
        .route("/projects/{id}/ad-track", put(set_ad_track))
        .route("/projects/{id}/cursor", put(set_cursor))
        .route("/projects/{id}/preview/{cue}", get(preview))
        .route("/projects/{id}/preview/{cue}/audio", get(preview_audio))
        .route("/projects/{id}/logs", get(export_logs))
        .route("/projects/{id}/export", post(export_media).get(download_export))
        .route("/projects/{id}/events", get(events))
        .route("/projects/{id}/replay", post(replay))
        .layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .nest("/api", api)
        .layer(middleware::from_fn(log_request))
        .with_state(state)
}

async fn require_token(State(state): State<AppState>, headers: HeaderMap, request: Request, next: Next) -> Response {
    if let Some(expected) = &state.token {
        let given =
            headers.get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()).and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(expected.as_str()) {
            return ServiceError::Unauthorized.into_response();
        }
    }
    next.run(request).await
}

async fn log_request(request: Request, next: Next) -> Response {
    let started = Instant::now();
    let method = request.method().clone();
    let path = request.uri().path().to_string();
    let response = next.run(request).await;
    tracing::info!(
        method = %method,
        path = %path,
        status = response.status().as_u16(),
        elapsed_ms = started.elapsed().as_millis() as u64,
        "request"
    );
    response
}

async fn announce(Json(event): Json<PlaybackEvent>) -> Json<Announcement> {
    Json(Announcement { announcement: announce_playback(&event) })
}

async fn create_project(State(s): State<AppState>, Json(body): Json<CreateProject>) -> Result<Response, ServiceError> {
    let summary = s.service.create_project(&body.video_ref, body.video_duration_ms).await?;
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn list_projects(State(s): State<AppState>) -> ApiResult<Vec<crate::project::ProjectSummary>> {
    Ok(Json(s.service.list_projects()?))
}

async fn get_project(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<crate::project::ProjectSummary> {
    Ok(Json(s.service.summary(&id)?))
}

async fn get_session(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<adscribe_core::session::SessionState> {
    Ok(Json(s.service.session(&id)?))
}

async fn get_script(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<crate::service::ScriptView> {
    Ok(Json(s.service.get_script(&id)?))
}

async fn put_script(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<PutScript>,
) -> ApiResult<crate::service::MutationReply> {
    Ok(Json(s.service.put_script(&id, &body.script).await?))
}

async fn revisions(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Vec<crate::project::Revision>> {
    Ok(Json(s.service.revisions(&id)?))
}

async fn edit_script(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(edit): Json<ScriptEdit>,
) -> ApiResult<crate::service::MutationReply> {
    Ok(Json(s.service.edit_script(&id, &edit).await?))
}

async fn post_command(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<PostCommand>,
) -> ApiResult<crate::service::CommandReply> {
    Ok(Json(s.service.post_command(&id, &body.command).await?))
}

async fn accept_suggestion(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<crate::service::MutationReply> {
    Ok(Json(s.service.accept_suggestion(&id).await?))
}

async fn reject_suggestion(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<crate::service::MutationReply> {
    Ok(Json(s.service.reject_suggestion(&id).await?))
}

async fn playback(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(event): Json<PlaybackEvent>,
) -> ApiResult<Announcement> {
    Ok(Json(s.service.playback(&id, event).await?))
}

async fn set_ad_track(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<AdTrack>,
) -> ApiResult<Announcement> {
    Ok(Json(s.service.set_ad_track(&id, body.enabled).await?))
}

async fn set_cursor(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<Cursor>,
) -> ApiResult<Announcement> {
    Ok(Json(s.service.set_cursor(&id, body.current_line, body.ask_only).await?))
}

async fn preview(
    State(s): State<AppState>,
    Path((id, cue)): Path<(String, usize)>,
) -> ApiResult<adscribe_core::narration::PlaybackDirective> {
    Ok(Json(s.service.preview(&id, cue)?))
}

async fn preview_audio(
    State(s): State<AppState>,
    Path((id, cue)): Path<(String, usize)>,
) -> Result<Response, ServiceError> {
    let wav = s.service.preview_audio(&id, cue)?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], wav).into_response())
}

async fn export_logs(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let body = s.service.export_logs(&id)?;
    let disposition = format!("attachment; filename=\"{id}-log.jsonl\"");
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson".to_string()), (header::CONTENT_DISPOSITION, disposition)], body)
        .into_response())
}

async fn export_media(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<adscribe_core::narration::ExportReport> {
    Ok(Json(s.service.export_media(&id).await?))
}

async fn download_export(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let path =
        s.service.exported_file(&id)?.ok_or_else(|| ServiceError::NotFound(format!("{id} has no export yet")))?;
    let bytes = tokio::fs::read(&path).await.map_err(|e| ServiceError::Internal(e.to_string()))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((
        [
            (header::CONTENT_TYPE, "application/octet-stream".to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{name}\"")),
        ],
        Body::from(bytes),
    )
        .into_response())
}

async fn replay(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<crate::replay::ProjectReplay> {
    Ok(Json(s.service.verify(&id)?))
}

/// Server-sent events: one `command`/`response`/`edit`/`playback`/`export`
/// event per log entry, with the entry as JSON data and its seq as the id.
async fn events(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ServiceError> {
    s.service.summary(&id)?;
    let rx = s.service.subscribe(&id);
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        let event = match rx.recv().await {
            Ok(entry) => {
                let kind = serde_json::to_value(entry.event.kind()).ok()?.as_str()?.to_string();
                Event::default().event(kind).id(entry.seq.to_string()).json_data(&entry).ok()?
            }
            Err(RecvError::Lagged(n)) => Event::default().event("lagged").data(n.to_string()),
            Err(RecvError::Closed) => return None,
        };
        Some((Ok(event), rx))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}
