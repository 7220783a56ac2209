//! HTTP API over sessions.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | `POST` | `/sessions` | [`SessionConfig`] | `201` [`SessionSummary`] |
//! | `GET` | `/sessions` | | `[SessionSummary]` |
//! | `GET` | `/sessions/{id}` | | [`SessionSummary`] |
//! | `GET` | `/sessions/{id}/round` | | [`RoundView`] |
//! | `POST` | `/sessions/{id}/scores` | [`ScoreRequest`] | [`ScoreResponse`] |
//! | `POST` | `/sessions/{id}/advance` | optional [`AdvanceRequest`] | [`RoundView`] |
//! | `POST` | `/sessions/{id}/finish` | | [`Manifest`] |
//! | `GET` | `/sessions/{id}/midi/{candidate_id}` | | `audio/midi` bytes |
//! | `GET` | `/sessions/{id}/document` | | full session document |
//!
//! Failures return a single [`ApiError`] body: `404` for unknown sessions or
//! candidates, `409` when advancing with pending scores (details list the
//! pending ids) or on a state conflict, `422` for invalid scores, configs or
//! request bodies.
//!
//! Requests against one session serialise on that session's lock; different
//! sessions proceed in parallel. With a data directory every mutation is
//! persisted as `<id>.json` before the response is sent.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{Mutex, RwLock};

use crate::fitness::{CandidateId, HumanScore};
use crate::genome::Note;
use crate::midi::MIDI_MEDIA_TYPE;
use crate::session::{Manifest, RoundKind, Session, SessionConfig, SessionError, SessionSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub details: Option<serde_json::Value>,
    #[serde(skip)]
    pub status: u16,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { code: code.into(), message: message.into(), details: None, status: status.as_u16() }
    }

    fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = Some(details);
        self
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let msg = e.to_string();
        match e {
            SessionError::InvalidConfig(v) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_config", msg)
                .with_details(json!({ "violations": v })),
            SessionError::Pending(ids) => {
                Self::new(StatusCode::CONFLICT, "pending_scores", msg).with_details(json!({ "pending": ids }))
            }
            SessionError::Finished => Self::new(StatusCode::CONFLICT, "session_finished", msg),
            SessionError::UnknownCandidate(_) => Self::new(StatusCode::NOT_FOUND, "unknown_candidate", msg),
            SessionError::Score(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_score", msg),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", msg),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub candidate_id: CandidateId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub session: SessionSummary,
    pub pending: Vec<CandidateId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdvanceRequest {
    /// When set, the advance only proceeds from this round; a stale value yields `409`.
    #[serde(default)]
    pub expected_generation: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub id: CandidateId,
    pub slot: usize,
    pub pending: bool,
    pub cached: bool,
    pub score: Option<f64>,
    pub notes: Vec<Note>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundView {
    pub session: SessionSummary,
    pub generation: u64,
    pub kind: RoundKind,
    pub bpm: f64,
    pub candidates: Vec<CandidateView>,
}

impl RoundView {
    pub fn of(s: &Session) -> Result<Self, SessionError> {
        let pending = s.pending();
        let candidates = s
            .round
            .candidates
            .iter()
            .map(|c| {
                Ok(CandidateView {
                    id: c.id.clone(),
                    slot: c.slot,
                    pending: pending.contains(&c.id),
                    cached: c.cached,
                    score: s.round.book.get(&c.id).map(crate::fitness::fitness_to_score),
                    notes: s.config.melody.decode(&c.genome).map_err(|e| SessionError::Corrupt(e.to_string()))?.notes,
                })
            })
            .collect::<Result<_, SessionError>>()?;
        Ok(Self {
            session: s.summary(),
            generation: s.round.generation,
            kind: s.round.kind,
            bpm: s.config.melody.bpm,
            candidates,
        })
    }
}

/// Registry of live sessions.
#[derive(Debug, Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    data_dir: Option<PathBuf>,
}

impl AppState {
    /// Loads any `*.json` session documents already present in `data_dir`.
    pub fn new(data_dir: Option<PathBuf>) -> std::io::Result<Self> {
        let mut sessions = HashMap::new();
        if let Some(dir) = &data_dir {
            std::fs::create_dir_all(dir)?;
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    match Session::load_from_path(&path) {
                        Ok(s) => {
                            sessions.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
                        }
                        Err(e) => tracing::warn!(path = %path.display(), error = %e, "skipping session file"),
                    }
                }
            }
        }
        Ok(Self { sessions: RwLock::new(sessions), data_dir })
    }

    pub async fn snapshot(&self, id: &str) -> Option<Session> {
        let handle = self.sessions.read().await.get(id).cloned()?;
        let s = handle.lock().await;
        Some(s.clone())
    }

    async fn handle(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions.read().await.get(id).cloned().ok_or_else(|| ApiError::unknown_session(id))
    }

    fn persist(&self, s: &Session) -> ApiResult<()> {
        if let Some(dir) = &self.data_dir {
            s.save_to_path(&dir.join(format!("{}.json", s.session_id)))?;
        }
        Ok(())
    }
}

pub type SharedState = Arc<AppState>;

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/round", get(get_round))
        .route("/sessions/{id}/scores", post(submit_score))
        .route("/sessions/{id}/advance", post(advance))
        .route("/sessions/{id}/finish", post(finish))
        .route("/sessions/{id}/midi/{candidate_id}", get(midi))
        .route("/sessions/{id}/document", get(document))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, data_dir: Option<PathBuf>) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(data_dir)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

async fn create_session(
    State(state): State<SharedState>,
    body: Result<Json<SessionConfig>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionSummary>)> {
    let Json(cfg) = body?;
    let session = Session::create(cfg)?;
    state.persist(&session)?;
    let summary = session.summary();
    state.sessions.write().await.insert(session.session_id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn list_sessions(State(state): State<SharedState>) -> Json<Vec<SessionSummary>> {
    let handles: Vec<_> = state.sessions.read().await.values().cloned().collect();
    let mut out = Vec::with_capacity(handles.len());
    for h in handles {
        out.push(h.lock().await.summary());
    }
    out.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    Json(out)
}

async fn get_session(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Json<SessionSummary>> {
    let h = state.handle(&id).await?;
    let s = h.lock().await;
    Ok(Json(s.summary()))
}

async fn get_round(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Json<RoundView>> {
    let h = state.handle(&id).await?;
    let s = h.lock().await;
    Ok(Json(RoundView::of(&s)?))
}

async fn submit_score(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    body: Result<Json<ScoreRequest>, JsonRejection>,
) -> ApiResult<Json<ScoreResponse>> {
    let Json(req) = body?;
    let h = state.handle(&id).await?;
    let mut s = h.lock().await;
    let pending =
        s.submit_score(HumanScore { candidate_id: req.candidate_id, score: req.score, submitted_at: now_millis() })?;
    state.persist(&s)?;
    Ok(Json(ScoreResponse { session: s.summary(), pending }))
}

async fn advance(State(state): State<SharedState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<RoundView>> {
    let req: AdvanceRequest = if body.iter().all(u8::is_ascii_whitespace) {
        AdvanceRequest::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", e.to_string()))?
    };
    let h = state.handle(&id).await?;
    let mut s = h.lock().await;
    if let Some(expected) = req.expected_generation {
        if expected != s.round.generation {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "state_conflict",
                format!("session is at round {}, not {expected}", s.round.generation),
            )
            .with_details(json!({ "generation": s.round.generation })));
        }
    }
    s.advance()?;
    state.persist(&s)?;
    Ok(Json(RoundView::of(&s)?))
}

async fn finish(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Json<Manifest>> {
    let h = state.handle(&id).await?;
    let mut s = h.lock().await;
    let manifest = s.finish()?;
    state.persist(&s)?;
    Ok(Json(manifest))
}

async fn midi(State(state): State<SharedState>, Path((id, candidate)): Path<(String, String)>) -> ApiResult<Response> {
    let h = state.handle(&id).await?;
    let s = h.lock().await;
    let bytes = s.midi(&CandidateId(candidate))?;
    Ok(([(header::CONTENT_TYPE, MIDI_MEDIA_TYPE)], bytes).into_response())
}

async fn document(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Response> {
    let h = state.handle(&id).await?;
    let s = h.lock().await;
    Ok(([(header::CONTENT_TYPE, "application/json")], s.save()).into_response())
}
