//! JSON-over-HTTP front end for the reward engine.
//!
//! Scoring runs on the blocking pool behind a semaphore sized by the
//! configured concurrency cap; the engine and model are shared read-only.

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use qreward_core::fusion::{FusionError, RewardBreakdown, RewardEngine, BREAKDOWN_SCHEMA_VERSION};
use qreward_core::pipeline::{SampleRecord, TaskType};
use qreward_core::ses::Verification;
use qreward_core::vrm::{EXTRACTOR_VERSION, MODEL_FORMAT, MODEL_VERSION};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

/// Optional per-request seed for every randomized step (equivalence probing).
pub const SEED_HEADER: &str = "x-qreward-seed";

pub struct AppState {
    pub engine: RewardEngine,
    /// SHA-256 of the model file bytes.
    pub model_hash: String,
    pub max_candidates: usize,
    pub body_limit: usize,
    permits: Arc<Semaphore>,
}

impl AppState {
    pub fn new(engine: RewardEngine, model_hash: String, max_concurrency: usize, max_candidates: usize, body_limit: usize) -> Self {
        Self {
            engine,
            model_hash,
            max_candidates,
            body_limit,
            permits: Arc::new(Semaphore::new(max_concurrency.max(1))),
        }
    }
}

/// Body of `POST /v1/score` and `POST /v1/verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_type: Option<TaskType>,
}

impl ScoreRequest {
    /// The record the in-process engine would score for this request.
    pub fn record(&self) -> SampleRecord {
        let mut r = SampleRecord::adhoc(self.question.clone(), self.answer.clone());
        r.reference_answer = self.reference_answer.clone();
        if let Some(t) = self.task_type {
            r.task_type = t;
        }
        r
    }
}

/// Body of `POST /v1/bon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonRequest {
    pub question: String,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_type: Option<TaskType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonResponse {
    pub selected: usize,
    pub breakdowns: Vec<RewardBreakdown>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<FusionError> for ApiError {
    fn from(e: FusionError) -> Self {
        let status = match e {
            FusionError::Judge(_) => StatusCode::SERVICE_UNAVAILABLE,
            FusionError::NoCandidates => StatusCode::BAD_REQUEST,
            FusionError::InvalidLambda(_) | FusionError::MissingJudge => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed request: {e}")))
}

fn engine_for(state: &AppState, headers: &HeaderMap) -> Result<RewardEngine, ApiError> {
    match headers.get(SEED_HEADER) {
        None => Ok(state.engine.clone()),
        Some(raw) => raw
            .to_str()
            .ok()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .map(|seed| state.engine.with_seed(seed))
            .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, format!("{SEED_HEADER} must be an unsigned integer"))),
    }
}

async fn blocking<T: Send + 'static>(state: &AppState, f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    let _permit = state
        .permits
        .clone()
        .acquire_owned()
        .await
        .map_err(|_| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "shutting down"))?;
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

async fn score(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Result<Json<RewardBreakdown>, ApiError> {
    let request: ScoreRequest = parse(&body)?;
    let engine = engine_for(&state, &headers)?;
    let out = blocking(&state, move || engine.reward(&request.record())).await??;
    Ok(Json(out))
}

async fn verify(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Result<Json<Verification>, ApiError> {
    let request: ScoreRequest = parse(&body)?;
    let engine = engine_for(&state, &headers)?;
    let out = blocking(&state, move || engine.ses.verify(&request.record())).await?;
    Ok(Json(out))
}

async fn best_of_n(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Result<Json<BonResponse>, ApiError> {
    let request: BonRequest = parse(&body)?;
    if request.candidates.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "candidates must not be empty"));
    }
    if request.candidates.len() > state.max_candidates {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("at most {} candidates per request, got {}", state.max_candidates, request.candidates.len()),
        ));
    }
    let engine = engine_for(&state, &headers)?;
    let (selected, breakdowns) = blocking(&state, move || {
        let base = ScoreRequest {
            question: request.question,
            answer: String::new(),
            reference_answer: request.reference_answer,
            task_type: request.task_type,
        }
        .record();
        engine.best_of_n(&base, &request.candidates)
    })
    .await??;
    Ok(Json(BonResponse { selected, breakdowns }))
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "model_hash": state.model_hash,
        "model_format": MODEL_FORMAT,
        "model_version": MODEL_VERSION,
        "extractor_version": EXTRACTOR_VERSION,
        "schema_version": BREAKDOWN_SCHEMA_VERSION,
        "mode": state.engine.mode,
        "lambda_fail": state.engine.lambda.fail(),
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.body_limit;
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/score", post(score))
        .route("/v1/verify", post(verify))
        .route("/v1/bon", post(best_of_n))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

/// Serves until Ctrl-C.
pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown_signal()).await
}

/// Binds `addr` and serves on a dedicated runtime thread for the life of the
/// process. Used by tests and the acceptance suite.
pub fn serve_background(addr: SocketAddr, state: Arc<AppState>) -> io::Result<SocketAddr> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    std::thread::Builder::new().name("qreward-http".into()).spawn(move || {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .expect("tokio runtime");
        runtime.block_on(async move {
            let listener = TcpListener::from_std(listener).expect("listener");
            let _ = axum::serve(listener, router(state)).await;
        });
    })?;
    Ok(local)
}
