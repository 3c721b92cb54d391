//! JSON session API over the recommendation engine.
//!
//! Sessions live in memory only and are lost on restart.

use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use flowrec_core::corpus::ServiceToken;
use flowrec_core::embed::EmbeddingModel;
use flowrec_core::ingest::ServiceId;
use flowrec_core::recommend::{
    recommend_top_k, RecommendError, RecommendationEntry, Session, SessionStore,
};
use flowrec_core::wskg::Wskg;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub struct Engine {
    pub model: EmbeddingModel,
    pub graph: Wskg,
}

enum Load {
    Loading,
    Ready(Arc<Engine>),
    Failed(String),
}

#[derive(Clone)]
pub struct AppState {
    engine: Arc<RwLock<Load>>,
    sessions: Arc<SessionStore>,
    default_k: usize,
}

impl AppState {
    /// State whose engine is still being loaded; see [`AppState::set_engine`].
    pub fn loading(default_k: usize, session_ttl: Duration) -> Self {
        AppState {
            engine: Arc::new(RwLock::new(Load::Loading)),
            sessions: Arc::new(SessionStore::new(session_ttl)),
            default_k,
        }
    }

    pub fn ready(engine: Engine, default_k: usize) -> Self {
        let s = Self::loading(default_k, Duration::from_secs(3600));
        s.set_engine(Ok(engine));
        s
    }

    pub fn set_engine(&self, engine: Result<Engine, String>) {
        let mut slot = self.engine.write().expect("engine lock poisoned");
        *slot = match engine {
            Ok(e) => Load::Ready(Arc::new(e)),
            Err(msg) => Load::Failed(msg),
        };
    }

    fn engine(&self) -> Result<Arc<Engine>, ApiError> {
        match &*self.engine.read().expect("engine lock poisoned") {
            Load::Ready(e) => Ok(Arc::clone(e)),
            Load::Loading => Err(ApiError::unavailable("model is still loading")),
            Load::Failed(msg) => Err(ApiError::unavailable(&format!(
                "model failed to load: {msg}"
            ))),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn unavailable(message: &str) -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, message)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<RecommendError> for ApiError {
    fn from(e: RecommendError) -> Self {
        let status = match e {
            RecommendError::UnknownSession(_) => StatusCode::NOT_FOUND,
            RecommendError::EmptySession | RecommendError::ColdStart(_) => StatusCode::CONFLICT,
            RecommendError::InvalidK | RecommendError::UnknownCandidate(_) => {
                StatusCode::BAD_REQUEST
            }
            RecommendError::Graph(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
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
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectBody {
    pub token: String,
}

#[derive(Debug, Deserialize)]
pub struct RecommendQuery {
    pub k: Option<usize>,
}

/// Wire form of a ranked entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntryView {
    pub token: String,
    pub members: Vec<String>,
    pub score: f64,
    pub p_suc: f64,
    pub sim: f64,
    pub rank: usize,
}

impl From<&RecommendationEntry> for EntryView {
    fn from(e: &RecommendationEntry) -> Self {
        EntryView {
            token: e.token.key().to_string(),
            members: e
                .token
                .members()
                .iter()
                .map(|m| m.as_str().to_string())
                .collect(),
            score: e.score,
            p_suc: e.p_suc,
            sim: e.sim,
            rank: e.rank,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CatalogEntry {
    pub token: String,
    pub members: Vec<String>,
    pub count: u64,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/catalog", get(catalog))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/select", post(select))
        .route("/sessions/{id}/recommend", get(recommend))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "no such route") })
        .with_state(state)
}

async fn health(State(state): State<AppState>) -> Response {
    match state.engine() {
        Ok(e) => Json(json!({
            "status": "ok",
            "vocabSize": e.model.len(),
            "dim": e.model.dim(),
        }))
        .into_response(),
        Err(err) => (
            err.status,
            Json(json!({ "status": "unavailable", "error": err.message })),
        )
            .into_response(),
    }
}

async fn catalog(State(state): State<AppState>) -> Result<Json<Vec<CatalogEntry>>, ApiError> {
    let e = state.engine()?;
    Ok(Json(
        e.model
            .vocab()
            .iter()
            .map(|v| CatalogEntry {
                token: v.token.key().to_string(),
                members: v.token.members().iter().map(ServiceId::to_string).collect(),
                count: v.count,
            })
            .collect(),
    ))
}

async fn create_session(State(state): State<AppState>) -> (StatusCode, Json<Session>) {
    (StatusCode::CREATED, Json(state.sessions.create()))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Session>, ApiError> {
    Ok(Json(state.sessions.get(&id)?))
}

async fn select(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SelectBody>, JsonRejection>,
) -> Result<Json<Session>, ApiError> {
    let Json(body) = body?;
    let token =
        ServiceToken::parse(&body.token).map_err(|e| ApiError::bad_request(e.to_string()))?;
    // Distinguish a missing session before touching the engine.
    state.sessions.get(&id)?;
    let e = state.engine()?;
    Ok(Json(state.sessions.select(&id, token, &e.model)?))
}

async fn recommend(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<RecommendQuery>, QueryRejection>,
) -> Result<Json<Vec<EntryView>>, ApiError> {
    let Query(q) = query?;
    let session = state.sessions.get(&id)?;
    let e = state.engine()?;
    let k = q.k.unwrap_or(state.default_k);
    let entries = recommend_top_k(&e.model, &e.graph, &session, k)?;
    Ok(Json(entries.iter().map(EntryView::from).collect()))
}
