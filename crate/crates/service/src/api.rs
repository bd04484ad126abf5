//! JSON handlers under `/api/v1`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use flmarket_core::document::{parse_json, GameDocument, ScenarioDocument};
use flmarket_core::numfmt::round_json;
use flmarket_core::report::{AnalysisReport, OutcomeView};
use flmarket_core::{
    allocate, compute_outcome, min_improvements, verify_dominant_strategy, Error, ImprovementProfile,
    MarketScenario, ViolationKind, DEFAULT_DELTA,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::store::{ScenarioStore, StoreError};

/// Significant digits of every number in a response body.
pub const RESPONSE_DIGITS: usize = 15;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<ScenarioStore>,
}

pub fn routes(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/outcome", post(outcome))
        .route("/api/v1/stability", post(stability))
        .route("/api/v1/allocate", post(allocation))
        .route("/api/v1/game/verify", post(game_verify))
        .route("/api/v1/scenarios", get(list_scenarios))
        .route("/api/v1/scenarios/{name}", get(get_scenario).put(put_scenario).delete(delete_scenario))
        .with_state(state)
}

/// Error body `{error, message, field?}` with its HTTP status.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), field: None }
    }

    fn at(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }

    /// Maps a library error; scenario fields are reported under `scenario_path`.
    pub fn from_core(err: Error, scenario_path: &str) -> Self {
        let bad = StatusCode::BAD_REQUEST;
        let unprocessable = StatusCode::UNPROCESSABLE_ENTITY;
        let message = err.to_string();
        let prefixed = |f: &str| if scenario_path.is_empty() { f.to_string() } else { format!("{scenario_path}.{f}") };
        match err {
            Error::InvalidScenario(v) => {
                let status = if v.kind == ViolationKind::CrossField { unprocessable } else { bad };
                Self::new(status, "invalid_scenario", message).at(prefixed(&v.field))
            }
            Error::InvalidProfile(v) => {
                let status = if v.kind == ViolationKind::CrossField { unprocessable } else { bad };
                Self::new(status, "invalid_profile", message).at(v.field)
            }
            Error::InvalidDelta(_) => Self::new(bad, "invalid_delta", message).at("delta"),
            Error::DimensionMismatch { .. } => Self::new(unprocessable, "dimension_mismatch", message),
            Error::IndexOutOfRange { .. } => Self::new(bad, "index_out_of_range", message),
            Error::DegenerateMarket => Self::new(unprocessable, "degenerate_market", message),
            Error::NotViable { .. } => Self::new(unprocessable, "not_viable", message),
            Error::InvalidWeights(_) => Self::new(bad, "invalid_weights", message).at("weights"),
            Error::StrategyOutOfRange { .. } => Self::new(bad, "strategy_out_of_range", message),
            Error::AssumptionViolated { .. } => Self::new(unprocessable, "assumption_violated", message),
            Error::InvalidGameSpec(_) => Self::new(unprocessable, "invalid_game_spec", message),
            Error::GridTooLarge { .. } => Self::new(unprocessable, "grid_too_large", message).at("grid_points"),
            Error::InvalidConfig(_) => Self::new(bad, "invalid_config", message),
        }
    }

    fn body(&self) -> Value {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(field) = &self.field {
            body["field"] = Value::String(field.clone());
        }
        body
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        let message = err.to_string();
        match err {
            StoreError::InvalidName(_) => Self::new(StatusCode::BAD_REQUEST, "invalid_name", message).at("name"),
            StoreError::NotFound(_) => Self::new(StatusCode::NOT_FOUND, "not_found", message),
            StoreError::VersionConflict { .. } => {
                Self::new(StatusCode::CONFLICT, "version_conflict", message).at("version")
            }
            StoreError::Invalid(e) => Self::from_core(e, "scenario"),
            StoreError::Corrupt { .. } | StoreError::Io(_) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_error", message)
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

/// Serializes `value` with numbers rounded to [`RESPONSE_DIGITS`].
pub fn to_response_json<T: Serialize>(value: &T) -> Value {
    let mut v = serde_json::to_value(value).expect("response types always serialize");
    round_json(&mut v, RESPONSE_DIGITS);
    v
}

fn respond<T: Serialize>(status: StatusCode, value: &T) -> Response {
    (status, Json(to_response_json(value))).into_response()
}

/// Stored documents are echoed at full precision so they round-trip.
fn respond_exact<T: Serialize>(status: StatusCode, value: &T) -> Response {
    (status, Json(value)).into_response()
}

/// Parses a request body, naming the offending field on failure.
pub fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    parse_json(bytes).map_err(|f| {
        let e = ApiError::new(StatusCode::BAD_REQUEST, "parse_error", f.message);
        match f.field {
            Some(field) => e.at(field),
            None => e,
        }
    })
}

fn scenario_of(doc: &ScenarioDocument) -> Result<MarketScenario, ApiError> {
    doc.to_scenario().map_err(|e| ApiError::from_core(e, "scenario"))
}

fn core(e: Error) -> ApiError {
    ApiError::from_core(e, "scenario")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeRequest {
    pub scenario: ScenarioDocument,
    /// Relative improvements summing to 1.
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    /// Absolute loss reductions; normalized to `q`.
    #[serde(default)]
    pub d: Option<Vec<f64>>,
}

fn profile_of(q: Option<Vec<f64>>, d: Option<Vec<f64>>) -> Result<ImprovementProfile, ApiError> {
    match (q, d) {
        (Some(q), None) => ImprovementProfile::from_relative(q).map_err(core),
        (None, Some(d)) => ImprovementProfile::from_improvements(d).map_err(core),
        _ => Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_profile", "give exactly one of q or d").at("q")),
    }
}

async fn outcome(body: Bytes) -> ApiResult {
    let req: OutcomeRequest = parse_body(&body)?;
    let scenario = scenario_of(&req.scenario)?;
    let profile = profile_of(req.q, req.d)?;
    let out = compute_outcome(&scenario, &profile).map_err(|e| core(e).at("q"))?;
    Ok(respond(StatusCode::OK, &OutcomeView::new(&profile, &out)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityRequest {
    pub scenario: ScenarioDocument,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
}

async fn stability(body: Bytes) -> ApiResult {
    let req: StabilityRequest = parse_body(&body)?;
    let scenario = scenario_of(&req.scenario)?;
    let profile = req.q.map(|q| ImprovementProfile::from_relative(q).map_err(core)).transpose()?;
    let report = AnalysisReport::build(&scenario, &req.scenario.names(), req.delta.unwrap_or(DEFAULT_DELTA), profile.as_ref())
        .map_err(core)?;
    Ok(respond(StatusCode::OK, &report))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocateRequest {
    pub scenario: ScenarioDocument,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Surplus shares; equal split when absent.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct AllocationView {
    pub delta: f64,
    pub kappa: f64,
    pub q_min: Vec<f64>,
    pub weights: Vec<f64>,
    pub outcome: OutcomeView,
}

/// The allocation and its outcome, as the allocate endpoint returns them.
pub fn allocation_view(scenario: &MarketScenario, delta: f64, weights: Vec<f64>) -> Result<AllocationView, Error> {
    let profile = allocate(scenario, delta, &weights)?;
    let q_min = min_improvements(scenario, delta)?.q_min().ok_or(Error::DegenerateMarket)?;
    let kappa = 1.0 - q_min.iter().sum::<f64>();
    let out = compute_outcome(scenario, &profile)?;
    Ok(AllocationView { delta, kappa, q_min, weights, outcome: OutcomeView::new(&profile, &out) })
}

async fn allocation(body: Bytes) -> ApiResult {
    let req: AllocateRequest = parse_body(&body)?;
    let scenario = scenario_of(&req.scenario)?;
    let n = scenario.n();
    let weights = req.weights.unwrap_or_else(|| vec![1.0 / n as f64; n]);
    let view = allocation_view(&scenario, req.delta.unwrap_or(DEFAULT_DELTA), weights).map_err(|e| match e {
        Error::DimensionMismatch { .. } => core(e).at("weights"),
        e => core(e),
    })?;
    Ok(respond(StatusCode::OK, &view))
}

async fn game_verify(body: Bytes) -> ApiResult {
    let doc: GameDocument = parse_body(&body)?;
    let spec = doc.to_spec().map_err(core)?;
    let check = tokio::task::spawn_blocking(move || verify_dominant_strategy(&spec))
        .await
        .expect("dominance check panicked")
        .map_err(core)?;
    Ok(respond(StatusCode::OK, &check))
}

async fn list_scenarios(State(state): State<AppState>) -> ApiResult {
    Ok(respond_exact(StatusCode::OK, &json!({ "scenarios": state.store.list() })))
}

async fn get_scenario(State(state): State<AppState>, Path(name): Path<String>) -> ApiResult {
    let record = state.store.get(&name)?;
    Ok(respond_exact(StatusCode::OK, &record))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PutRequest {
    pub scenario: ScenarioDocument,
    /// Current version of the record being replaced; absent or 0 to create.
    #[serde(default)]
    pub version: Option<u64>,
}

async fn put_scenario(State(state): State<AppState>, Path(name): Path<String>, body: Bytes) -> ApiResult {
    let req: PutRequest = parse_body(&body)?;
    scenario_of(&req.scenario)?;
    let store = state.store.clone();
    let (record, created) = tokio::task::spawn_blocking(move || store.put(&name, req.scenario, req.version))
        .await
        .expect("store write panicked")?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok(respond_exact(status, &record))
}

async fn delete_scenario(State(state): State<AppState>, Path(name): Path<String>) -> ApiResult {
    let store = state.store.clone();
    tokio::task::spawn_blocking(move || store.delete(&name)).await.expect("store delete panicked")?;
    Ok(StatusCode::NO_CONTENT.into_response())
}
