use std::collections::BTreeMap;
use std::path::Path;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::{ServeDir, ServeFile};
use vidhumor::corpus::{corpus_stats, PipelineEvent, PipelineState, SafetyCriterion, StatsReport, StoreError, Transcript, VideoRecord};
use vidhumor::evalkit::latest_report;
use vidhumor::filterpipe::{SafetyDecision, SafetyVerdict};

use crate::state::AppState;

const PREVIEW_UTTERANCES: usize = 3;

struct ApiError {
    status: StatusCode,
    category: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, category: &'static str, message: impl Into<String>) -> Self {
        Self { status, category, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "category": self.category, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::UnknownId(_) => StatusCode::NOT_FOUND,
            StoreError::State(_) => StatusCode::CONFLICT,
            StoreError::Corpus(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.category(), e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaUrls {
    pub frames: Option<String>,
    pub audio: Option<String>,
    /// A playable video file, when the bundle lists one under `video`.
    pub video: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageItem {
    pub video_id: String,
    pub duration_s: f64,
    pub source_url: String,
    pub media: MediaUrls,
    pub transcript_preview: Option<String>,
    pub filter_detail: Option<String>,
}

/// `pending + reviewed` equals the number of records that passed filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageQueueView {
    pub pending: usize,
    pub reviewed: usize,
    pub next: Option<TriageItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRequest {
    pub decision: String,
    #[serde(default)]
    pub criterion: Option<String>,
    pub reviewer: String,
    #[serde(default)]
    pub watch_complete: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictResponse {
    pub video_id: String,
    /// Display form, e.g. `triage_rejected(shocking)`.
    pub state: String,
    pub detail: PipelineState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionView {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsView {
    #[serde(flatten)]
    pub corpus: StatsReport,
    pub states: BTreeMap<String, usize>,
}

/// API routes, the `/media` mount and, when configured, the review UI.
pub fn router(state: AppState) -> Router {
    let cfg = state.config().clone();
    let mut app = Router::new()
        .route("/api/triage/next", get(triage_next))
        .route("/api/triage/criteria", get(criteria))
        .route("/api/triage/{id}/verdict", post(post_verdict))
        .route("/api/reports/latest", get(reports_latest))
        .route("/api/stats", get(stats))
        .nest_service("/media", ServeDir::new(&cfg.media_root))
        .with_state(state);
    if let Some(ui) = cfg.ui_dir {
        let index = ui.join("index.html");
        app = app.fallback_service(ServeDir::new(&ui).fallback(ServeFile::new(index)));
    }
    app
}

fn media_url(root: &Path, path: &Path) -> Option<String> {
    let rel = if path.is_absolute() { path.strip_prefix(root).ok()? } else { path };
    let parts: Vec<String> = rel
        .components()
        .map(|c| c.as_os_str().to_str().map(str::to_string))
        .collect::<Option<_>>()?;
    if parts.iter().any(|p| p == ".." || p.is_empty()) {
        return None;
    }
    Some(format!("/media/{}", parts.join("/")))
}

fn transcript_preview(root: &Path, record: &VideoRecord) -> Option<String> {
    let path = record.media.resolved(root).transcript?;
    let t: Transcript = serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()?;
    let lines: Vec<&str> = t.utterances.iter().take(PREVIEW_UTTERANCES).map(|u| u.text.trim()).collect();
    (!lines.is_empty()).then(|| lines.join("\n"))
}

async fn triage_next(State(state): State<AppState>) -> Json<TriageQueueView> {
    let root = state.config().media_root.clone();
    let corpus = state.read();
    let next = corpus.pending().next().and_then(|id| corpus.record(id)).map(|r| TriageItem {
        video_id: r.id.clone(),
        duration_s: r.duration_s,
        source_url: r.source_url.clone(),
        media: MediaUrls {
            frames: media_url(&root, &r.media.frames_dir),
            audio: media_url(&root, &r.media.audio),
            video: r.media.extra.get("video").and_then(|v| v.as_str()).and_then(|p| media_url(&root, Path::new(p))),
        },
        transcript_preview: transcript_preview(&root, r),
        filter_detail: corpus.filter_verdict(&r.id).map(|v| v.detail.clone()),
    });
    Json(TriageQueueView {
        pending: corpus.pending_count(),
        reviewed: corpus.reviewed_count(),
        next,
    })
}

async fn criteria() -> Json<Vec<CriterionView>> {
    Json(
        SafetyCriterion::ALL
            .iter()
            .map(|c| CriterionView { name: c.as_str().into(), description: c.description().into() })
            .collect(),
    )
}

fn unprocessable(message: impl Into<String>) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
}

async fn post_verdict(State(state): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Json<VerdictResponse>, ApiError> {
    let req: VerdictRequest = serde_json::from_slice(&body).map_err(|e| unprocessable(format!("invalid verdict body: {e}")))?;
    let decision: SafetyDecision = req.decision.parse().map_err(unprocessable)?;
    let criterion = req
        .criterion
        .as_deref()
        .filter(|c| !c.is_empty())
        .map(str::parse::<SafetyCriterion>)
        .transpose()
        .map_err(unprocessable)?;
    let mut verdict = SafetyVerdict::new(&id, decision, criterion, req.reviewer).map_err(|e| unprocessable(e.to_string()))?;
    verdict.watch_complete = req.watch_complete;

    let writer = state.clone();
    let new_state = tokio::task::spawn_blocking(move || writer.commit(PipelineEvent::Safety(verdict)))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(VerdictResponse { video_id: id, state: new_state.to_string(), detail: new_state }))
}

async fn reports_latest(State(state): State<AppState>) -> Result<Response, ApiError> {
    match latest_report(&state.config().reports_dir) {
        Ok(Some(r)) => Ok(Json(r).into_response()),
        Ok(None) => Err(ApiError::new(StatusCode::NOT_FOUND, "not_found", "no evaluation report yet")),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.category(), e.to_string())),
    }
}

async fn stats(State(state): State<AppState>) -> Json<StatsView> {
    let corpus = state.read();
    let mut states = BTreeMap::new();
    for r in corpus.records() {
        *states.entry(r.state.name().to_string()).or_insert(0) += 1;
    }
    Json(StatsView { corpus: corpus_stats(corpus.records()), states })
}
