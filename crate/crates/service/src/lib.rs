//! Control service for the drawing machine.
//!
//! Live machines are reached per session (`?session=name`, default
//! `default`):
//!
//! - `GET /machine` upgrades to a WebSocket carrying control messages in and
//!   samples, acks and errors out
//! - `GET /state`, `GET /log`, `GET /export.svg`, `POST /command`
//!
//! One-shot computations live under `/api`: `classify`, `plot`, `family`,
//! `linear`, `verify` and `replay`, each taking a JSON body.

mod session;
mod ws;

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State, WebSocketUpgrade};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use trochoid_core::api;
use trochoid_core::machine::{replay, ControlMessage, MachineError, SessionLog, DEFAULT_TICK_RATE};
use trochoid_core::{Polarization, Rig};

pub use session::{LiveSession, SessionError, Sessions};

pub const DEFAULT_PORT: u16 = 7420;
pub const DEFAULT_SESSION: &str = "default";
/// Longest log `/api/replay` will run.
pub const MAX_REPLAY_TICKS: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Rig every new session starts from.
    pub rig: Rig,
    pub tick_rate: u32,
    pub max_sessions: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            rig: Rig::from_ints(12, 2, 3, 15, Polarization::Anti).expect("valid default rig"),
            tick_rate: DEFAULT_TICK_RATE,
            max_sessions: 64,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<Sessions>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Result<Self, String> {
        if config.tick_rate == 0 {
            return Err("tick rate must be positive".into());
        }
        Ok(Self {
            sessions: Arc::new(Sessions::new(config.rig, config.tick_rate, config.max_sessions)),
        })
    }

    pub fn sessions(&self) -> &Sessions {
        &self.sessions
    }
}

/// Error body: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                code: self.code.to_string(),
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<trochoid_core::Error> for ApiError {
    fn from(err: trochoid_core::Error) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", err.to_string())
    }
}

impl From<MachineError> for ApiError {
    fn from(err: MachineError) -> Self {
        let status = match err {
            MachineError::InvalidValue(_) => StatusCode::UNPROCESSABLE_ENTITY,
            MachineError::NotRunning | MachineError::PolarizationWhileRunning => StatusCode::CONFLICT,
        };
        ApiError::new(status, err.code(), err.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(err: SessionError) -> Self {
        let status = match err {
            SessionError::BadName(_) => StatusCode::BAD_REQUEST,
            SessionError::TooMany(_) => StatusCode::SERVICE_UNAVAILABLE,
        };
        ApiError::new(status, "session", err.to_string())
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_json", e.to_string()))
}

/// Run CPU-bound work off the async threads.
async fn compute<T, F>(work: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(work)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

#[derive(Debug, Deserialize)]
struct SessionQuery {
    session: Option<String>,
}

impl SessionQuery {
    fn name(&self) -> &str {
        self.session.as_deref().unwrap_or(DEFAULT_SESSION)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", get(list_sessions))
        .route("/machine", get(machine_socket))
        .route("/state", get(get_state))
        .route("/log", get(get_log))
        .route("/export.svg", get(export_svg))
        .route("/command", post(post_command))
        .route("/api/classify", post(classify))
        .route("/api/plot", post(plot))
        .route("/api/family", post(family))
        .route("/api/linear", post(linear))
        .route("/api/verify", post(verify))
        .route("/api/replay", post(replay_log))
        .with_state(state)
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let state = AppState::new(config).map_err(std::io::Error::other)?;
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "control service listening");
    }
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn list_sessions(State(state): State<AppState>) -> Json<Vec<String>> {
    Json(state.sessions.names())
}

async fn machine_socket(
    State(state): State<AppState>,
    Query(query): Query<SessionQuery>,
    upgrade: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let session = state.sessions.get_or_start(query.name())?;
    Ok(upgrade.on_upgrade(move |socket| ws::drive(socket, session)))
}

async fn get_state(State(state): State<AppState>, Query(query): Query<SessionQuery>) -> Result<Response, ApiError> {
    let session = state.sessions.get_or_start(query.name())?;
    Ok(Json(session.snapshot()).into_response())
}

async fn get_log(State(state): State<AppState>, Query(query): Query<SessionQuery>) -> Result<Response, ApiError> {
    let session = state.sessions.get_or_start(query.name())?;
    Ok(Json(session.log()).into_response())
}

async fn export_svg(State(state): State<AppState>, Query(query): Query<SessionQuery>) -> Result<Response, ApiError> {
    let session = state.sessions.get_or_start(query.name())?;
    let svg = compute(move || Ok(session.export_svg()?)).await?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

async fn post_command(
    State(state): State<AppState>,
    Query(query): Query<SessionQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = state.sessions.get_or_start(query.name())?;
    let msg: ControlMessage = parse_body(&body)?;
    Ok(Json(session.apply(msg)?).into_response())
}

async fn classify(body: Bytes) -> Result<Response, ApiError> {
    let req: api::ClassifyRequest = parse_body(&body)?;
    Ok(Json(api::classify_rig(&req)?).into_response())
}

async fn plot(body: Bytes) -> Result<Response, ApiError> {
    let req: api::PlotRequest = parse_body(&body)?;
    let resp = compute(move || Ok(api::plot(&req)?)).await?;
    Ok(Json(resp).into_response())
}

async fn family(body: Bytes) -> Result<Response, ApiError> {
    let req: api::FamilyRequest = parse_body(&body)?;
    let resp = compute(move || Ok(api::family(&req)?)).await?;
    Ok(Json(resp).into_response())
}

async fn linear(body: Bytes) -> Result<Response, ApiError> {
    let req: api::LinearRequest = parse_body(&body)?;
    let resp = compute(move || Ok(api::linear(&req)?)).await?;
    Ok(Json(resp).into_response())
}

async fn verify(body: Bytes) -> Result<Response, ApiError> {
    let req: api::VerifyRequest = parse_body(&body)?;
    let resp = compute(move || Ok(api::verify(&req)?)).await?;
    Ok(Json(resp).into_response())
}

async fn replay_log(body: Bytes) -> Result<Response, ApiError> {
    let log: SessionLog = parse_body(&body)?;
    if log.ticks > MAX_REPLAY_TICKS {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_request",
            format!("log runs {} ticks; the limit is {MAX_REPLAY_TICKS}", log.ticks),
        ));
    }
    let events = compute(move || Ok(replay(&log)?)).await?;
    Ok(Json(events).into_response())
}
