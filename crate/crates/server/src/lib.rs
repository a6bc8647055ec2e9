//! HTTP session service over the debiasing engine.
//!
//! A session holds an immutable base snapshot and a current snapshot; jobs
//! run against the current one and are serialized per session.

mod error;
mod registry;

pub use error::{ApiError, ErrorBody};
pub use registry::{EmbeddingEntry, Registry, RegistryError};

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};
use uuid::Uuid;

use vecdebias_core::embedding::Neighbor;
use vecdebias_core::linalg;
use vecdebias_core::presets;
use vecdebias_core::transforms::{IterativeSettings, JobSeeds};
use vecdebias_core::view::build_trace;
use vecdebias_core::{
    DebiasJob, Direction, Precision, Report, Snapshot, SnapshotId, SubspaceMethod, TextFormat, Trace,
};

type ApiResult<T> = Result<T, ApiError>;

/// One applied job and its trace.
pub struct HistoryEntry {
    pub job: DebiasJob,
    pub trace: Arc<Trace>,
}

pub struct Session {
    pub base: Arc<Snapshot>,
    pub current: Arc<Snapshot>,
    pub history: Vec<HistoryEntry>,
}

#[derive(Clone)]
pub struct AppState {
    registry: Arc<Registry>,
    sessions: Arc<RwLock<HashMap<Uuid, Arc<Mutex<Session>>>>>,
}

impl AppState {
    pub fn new(registry: Registry) -> Self {
        Self {
            registry: Arc::new(registry),
            sessions: Arc::default(),
        }
    }

    async fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        let uuid = Uuid::parse_str(id).map_err(|_| ApiError::UnknownSession(id.to_string()))?;
        self.sessions
            .read()
            .await
            .get(&uuid)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }
}

/// Uploads larger than this are rejected.
pub const MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/embeddings", get(list_embeddings))
        .route("/presets", get(list_presets))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info).delete(delete_session))
        .route("/sessions/{id}/subspace", post(subspace))
        .route("/sessions/{id}/jobs", post(run_job))
        .route("/sessions/{id}/history/{index}", get(history_trace))
        .route("/sessions/{id}/neighbors", get(neighbors))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/reset", post(reset))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    body.map(|Json(v)| v).map_err(|e| ApiError::BadRequest(e.body_text()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn list_embeddings(State(state): State<AppState>) -> Json<Vec<EmbeddingEntry>> {
    Json(state.registry.entries().cloned().collect())
}

async fn list_presets() -> Json<Vec<presets::PresetJob>> {
    Json(presets::preset_jobs())
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum EmbeddingSource {
    Named(String),
    Upload {
        format: TextFormat,
        data: String,
        #[serde(default)]
        limit: Option<usize>,
    },
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub embedding: EmbeddingSource,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: Uuid,
    pub vocab_size: usize,
    pub dim: usize,
    pub base_snapshot_id: SnapshotId,
    pub current_snapshot_id: SnapshotId,
    pub history: Vec<HistorySummary>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HistorySummary {
    pub method: vecdebias_core::Method,
    pub label: String,
    pub snapshot_id: SnapshotId,
}

fn info(id: Uuid, s: &Session) -> SessionInfo {
    SessionInfo {
        session_id: id,
        vocab_size: s.current.len(),
        dim: s.current.dim(),
        base_snapshot_id: s.base.id().clone(),
        current_snapshot_id: s.current.id().clone(),
        history: s
            .history
            .iter()
            .map(|h| HistorySummary {
                method: h.job.method,
                label: h.job.label.clone(),
                snapshot_id: h.trace.snapshots.last().cloned().unwrap_or_else(|| s.base.id().clone()),
            })
            .collect(),
    }
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionInfo>)> {
    let req = json_body(body)?;
    let base = match req.embedding {
        EmbeddingSource::Named(name) => {
            if !state.registry.contains(&name) {
                return Err(ApiError::UnknownEmbedding(name));
            }
            let registry = state.registry.clone();
            blocking(move || {
                registry
                    .get(&name)
                    .expect("checked above")
                    .map_err(|e| ApiError::Internal(format!("cannot load `{name}`: {e}")))
            })
            .await?
        }
        EmbeddingSource::Upload { format, data, limit } => {
            let snap = blocking(move || {
                Snapshot::load(data.as_bytes(), format, limit).map_err(|e| ApiError::BadRequest(e.to_string()))
            })
            .await?;
            Arc::new(snap)
        }
    };
    let id = Uuid::new_v4();
    let session = Session {
        current: base.clone(),
        base,
        history: Vec::new(),
    };
    let body = info(id, &session);
    state.sessions.write().await.insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn session_info(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    let session = state.session(&id).await?;
    let s = session.lock().await;
    Ok(Json(info(Uuid::parse_str(&id).expect("validated"), &s)))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let uuid = Uuid::parse_str(&id).map_err(|_| ApiError::UnknownSession(id.clone()))?;
    match state.sessions.write().await.remove(&uuid) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::UnknownSession(id)),
    }
}

fn default_k() -> usize {
    10
}

#[derive(Debug, Deserialize)]
pub struct SubspaceRequest {
    pub method: SubspaceMethod,
    pub seeds: JobSeeds,
    #[serde(default)]
    pub config: IterativeSettings,
    #[serde(default)]
    pub label: String,
    #[serde(default = "default_k")]
    pub k: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubspaceResponse {
    pub direction: Direction,
    /// Tokens closest to `+v`.
    pub positive: Vec<Neighbor<f64>>,
    /// Tokens closest to `-v`.
    pub negative: Vec<Neighbor<f64>>,
    /// `||mean(f) - mean(m)||` for two-group seeds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centroid_distance: Option<f64>,
    pub snapshot_id: SnapshotId,
}

async fn subspace(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SubspaceRequest>, JsonRejection>,
) -> ApiResult<Json<SubspaceResponse>> {
    let req = json_body(body)?;
    let current = state.session(&id).await?.lock().await.current.clone();
    let resp = blocking(move || {
        let (mut direction, _) =
            vecdebias_core::transforms::identify_direction(&current, req.method, &req.seeds, &req.config)?;
        direction.label = req.label;
        let k = req.k.min(current.len());
        let positive = current.nearest_to_vector(&direction.vector, k, None);
        let neg: Vec<f64> = direction.vector.iter().map(|x| -x).collect();
        let negative = current.nearest_to_vector(&neg, k, None);
        let centroid_distance = match (&req.seeds.f, &req.seeds.m) {
            (Some(f), Some(m)) => {
                let fm = linalg::mean(&current.get_vectors(f)?);
                let mm = linalg::mean(&current.get_vectors(m)?);
                Some(linalg::norm(&linalg::sub(&fm, &mm)))
            }
            _ => None,
        };
        Ok(SubspaceResponse {
            direction,
            positive,
            negative,
            centroid_distance,
            snapshot_id: current.id().clone(),
        })
    })
    .await?;
    Ok(Json(resp))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JobResponse {
    pub trace: Trace,
    pub metrics_before: Option<Report>,
    pub metrics_after: Option<Report>,
    pub snapshot_id: SnapshotId,
}

async fn run_job(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<DebiasJob>, JsonRejection>,
) -> ApiResult<Json<JobResponse>> {
    let mut job = json_body(body)?;
    let session = state.session(&id).await?;
    // single writer per session: hold the lock for the whole job
    let mut s = session.lock().await;
    let current = s.current.clone();
    let (job, trace, output) = blocking(move || {
        if job.metrics.is_none() {
            let defaults = presets::default_metric_sets();
            let needed = defaults.weat.tokens().chain(defaults.ect_attributes.iter());
            if current.resolve(needed).is_ok() {
                job.metrics = Some(defaults);
            }
        }
        let (trace, out) = build_trace(&current, &job)?;
        Ok((job, trace, out.transform.output))
    })
    .await?;
    let trace = Arc::new(trace);
    s.current = Arc::new(output);
    s.history.push(HistoryEntry {
        job,
        trace: trace.clone(),
    });
    Ok(Json(JobResponse {
        metrics_before: trace.metrics_before.clone(),
        metrics_after: trace.metrics_after.clone(),
        snapshot_id: s.current.id().clone(),
        trace: (*trace).clone(),
    }))
}

async fn history_trace(
    State(state): State<AppState>,
    Path((id, index)): Path<(String, usize)>,
) -> ApiResult<Json<Trace>> {
    let session = state.session(&id).await?;
    let s = session.lock().await;
    let entry = s
        .history
        .get(index)
        .ok_or_else(|| ApiError::BadRequest(format!("no history entry {index}")))?;
    Ok(Json((*entry.trace).clone()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotState {
    Before,
    #[default]
    After,
}

#[derive(Debug, Deserialize)]
pub struct NeighborQuery {
    pub token: String,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub state: SnapshotState,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NeighborResponse {
    pub token: String,
    pub state: SnapshotState,
    pub snapshot_id: SnapshotId,
    pub neighbors: Vec<Neighbor<f64>>,
}

async fn neighbors(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<NeighborQuery>, QueryRejection>,
) -> ApiResult<Json<NeighborResponse>> {
    let Query(q) = query.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let session = state.session(&id).await?;
    let snap = {
        let s = session.lock().await;
        match q.state {
            SnapshotState::Before => s.base.clone(),
            SnapshotState::After => s.current.clone(),
        }
    };
    if !snap.contains(&q.token) {
        return Err(ApiError::UnknownToken(q.token));
    }
    let neighbors = snap.nearest_neighbors(&q.token, q.k)?;
    Ok(Json(NeighborResponse {
        token: q.token,
        state: q.state,
        snapshot_id: snap.id().clone(),
        neighbors,
    }))
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    #[serde(default)]
    pub format: Option<String>,
    #[serde(default)]
    pub precision: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<ExportQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let format: TextFormat = match q.format.as_deref() {
        None => TextFormat::GloveText,
        Some(f) => f.parse()?,
    };
    let precision: Precision = match q.precision.as_deref() {
        None => Precision::default(),
        Some(p) => p.parse()?,
    };
    let current = state.session(&id).await?.lock().await.current.clone();
    let bytes = blocking(move || Ok(current.export_to_vec_with(format, precision))).await?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], bytes).into_response())
}

async fn reset(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    let session = state.session(&id).await?;
    let mut s = session.lock().await;
    s.current = s.base.clone();
    Ok(Json(info(Uuid::parse_str(&id).expect("validated"), &s)))
}
