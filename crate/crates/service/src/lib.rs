//! Scoring service.
//!
//! Endpoints:
//!
//! | method | path               | body                          |
//! |--------|--------------------|-------------------------------|
//! | POST   | `/v1/score`        | `{text, title?}`              |
//! | POST   | `/v1/score/batch`  | `{texts: [..]}`               |
//! | POST   | `/v1/compare`      | `{variants: [{label, text}]}` |
//! | GET    | `/v1/health`       |                               |
//! | GET    | `/v1/model`        |                               |
//! | POST   | `/v1/model/reload` | `{model_dir?, predictors?}`   |
//!
//! Errors are `{"error": {"code", "message"}}`.

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use arc_swap::ArcSwapOption;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use percept_core::aggregate::PerceptionProfile;
use percept_core::analysis::{predict_engagement, EngagementPrediction, EngagementPredictor};
use percept_core::perceiver::{load_model, model_input, predict_text, ModelMetadata, ScorerModel};
use percept_core::stats::percent_change;
use percept_core::{DimensionId, StatementCatalog};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub const MODEL_ENV: &str = "PERCEPT_MODEL";
pub const PREDICTORS_FILE: &str = "predictors.json";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Largest accepted request body.
    pub max_body_bytes: usize,
    /// Largest accepted text in a single score request or variant.
    pub max_text_bytes: usize,
    pub max_batch: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { max_body_bytes: 1 << 20, max_text_bytes: 64 << 10, max_batch: 256 }
    }
}

/// A model and the engagement predictors served alongside it.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub model: ScorerModel,
    pub predictors: Vec<EngagementPredictor>,
}

impl Deployment {
    /// Loads `model_dir`, plus `predictors` or `model_dir/predictors.json` when present.
    pub fn load(model_dir: &Path, predictors: Option<&Path>, catalog: &StatementCatalog) -> percept_core::Result<Self> {
        let model = load_model(model_dir, catalog)?;
        let default_path = model_dir.join(PREDICTORS_FILE);
        let path = predictors.map(Path::to_path_buf).or_else(|| default_path.exists().then_some(default_path));
        let predictors = match path {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => Vec::new(),
        };
        Ok(Self { model, predictors })
    }
}

#[derive(Debug, Default, Clone)]
struct Sources {
    model_dir: Option<PathBuf>,
    predictors: Option<PathBuf>,
}

pub struct AppState {
    config: ServiceConfig,
    catalog: StatementCatalog,
    current: ArcSwapOption<Deployment>,
    sources: Mutex<Sources>,
}

impl AppState {
    pub fn new(config: ServiceConfig, catalog: StatementCatalog) -> Arc<Self> {
        Arc::new(Self { config, catalog, current: ArcSwapOption::empty(), sources: Mutex::default() })
    }

    /// Atomically replaces the served deployment.
    pub fn install(&self, deployment: Deployment) -> percept_core::Result<()> {
        deployment.model.check_catalog(&self.catalog)?;
        self.current.store(Some(Arc::new(deployment)));
        Ok(())
    }

    /// Loads from disk, installs, and remembers the paths for later reloads.
    pub fn load_from(&self, model_dir: &Path, predictors: Option<&Path>) -> percept_core::Result<()> {
        let deployment = Deployment::load(model_dir, predictors, &self.catalog)?;
        self.install(deployment)?;
        let mut sources = self.sources.lock().expect("sources lock");
        sources.model_dir = Some(model_dir.to_path_buf());
        sources.predictors = predictors.map(Path::to_path_buf);
        Ok(())
    }

    pub fn deployment(&self) -> Option<Arc<Deployment>> {
        self.current.load_full()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn model_missing() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "model_not_loaded", "no model is loaded")
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: ErrorDetail { code: self.code, message: &self.message } };
        (self.status, axum::Json(body)).into_response()
    }
}

impl From<percept_core::Error> for ApiError {
    fn from(e: percept_core::Error) -> Self {
        use percept_core::Error::*;
        match e {
            EmptyContent(_) => Self::bad_request("empty_text", e.to_string()),
            CatalogMismatch { .. } | ModelFormat(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "model_invalid", e.to_string()),
            Io(_) | Json(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "model_unreadable", e.to_string()),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    }
}

/// JSON extractor whose rejections use the service error shape.
pub struct Json<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Json<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match axum::Json::<T>::from_request(req, state).await {
            Ok(axum::Json(v)) => Ok(Json(v)),
            Err(rejection) => {
                let status = rejection.status();
                let code = match (&rejection, status) {
                    (_, StatusCode::PAYLOAD_TOO_LARGE) => "payload_too_large",
                    (JsonRejection::MissingJsonContentType(_), _) => "unsupported_media_type",
                    _ => "invalid_json",
                };
                Err(ApiError::new(status, code, rejection.body_text()))
            }
        }
    }
}

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub text: String,
    #[serde(default)]
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub statement_scores: BTreeMap<String, f64>,
    pub profile: BTreeMap<DimensionId, f64>,
    pub model_version: String,
    pub catalog_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResponse {
    pub results: Vec<ScoreResponse>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRequest {
    pub variants: Vec<Variant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub label: String,
    pub profile: BTreeMap<DimensionId, f64>,
    pub engagement: BTreeMap<String, EngagementPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementDelta {
    /// Difference in the expected log outcome.
    pub delta: f64,
    /// `exp(delta) - 1`.
    pub percent_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub label: String,
    pub baseline: String,
    pub dimensions: BTreeMap<DimensionId, f64>,
    pub engagement: BTreeMap<String, EngagementDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResponse {
    pub variants: Vec<VariantResult>,
    pub deltas: Vec<DeltaRow>,
    pub model_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_loaded: bool,
    pub predictor_loaded: bool,
    pub model_version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub catalog_hash: String,
    pub metadata: ModelMetadata,
    pub predictors: Vec<EngagementPredictor>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReloadRequest {
    #[serde(default)]
    pub model_dir: Option<PathBuf>,
    #[serde(default)]
    pub predictors: Option<PathBuf>,
}

type AppResult<T> = Result<Json<T>, ApiError>;

fn loaded(state: &AppState) -> Result<Arc<Deployment>, ApiError> {
    state.deployment().ok_or_else(ApiError::model_missing)
}

fn check_size(state: &AppState, what: &str, text: &str) -> Result<(), ApiError> {
    if text.len() > state.config.max_text_bytes {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            format!("{what} is {} bytes; the limit is {}", text.len(), state.config.max_text_bytes),
        ));
    }
    Ok(())
}

fn score_one(state: &AppState, d: &Deployment, title: &str, text: &str) -> Result<(ScoreResponse, PerceptionProfile), ApiError> {
    if text.trim().is_empty() && title.trim().is_empty() {
        return Err(ApiError::bad_request("empty_text", "text is empty"));
    }
    let input = model_input(title, text, d.model.metadata.config.max_input_length);
    let (scores, profile) = predict_text(&d.model, "request", &input, &state.catalog)?;
    let response = ScoreResponse {
        statement_scores: scores.scores,
        profile: profile.scores.clone(),
        model_version: d.model.model_version().to_string(),
        catalog_version: state.catalog.version.clone(),
    };
    Ok((response, profile))
}

async fn score(State(state): State<Arc<AppState>>, Json(req): Json<ScoreRequest>) -> AppResult<ScoreResponse> {
    let d = loaded(&state)?;
    let title = req.title.unwrap_or_default();
    check_size(&state, "text", &req.text)?;
    check_size(&state, "title", &title)?;
    Ok(Json(score_one(&state, &d, &title, &req.text)?.0))
}

async fn score_batch(State(state): State<Arc<AppState>>, Json(req): Json<BatchRequest>) -> AppResult<BatchResponse> {
    let d = loaded(&state)?;
    if req.texts.is_empty() {
        return Err(ApiError::bad_request("empty_batch", "texts is empty"));
    }
    if req.texts.len() > state.config.max_batch {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            format!("{} texts; the limit is {}", req.texts.len(), state.config.max_batch),
        ));
    }
    let mut results = Vec::with_capacity(req.texts.len());
    for (i, text) in req.texts.iter().enumerate() {
        check_size(&state, &format!("texts[{i}]"), text)?;
        if text.trim().is_empty() {
            return Err(ApiError::bad_request("empty_text", format!("texts[{i}] is empty")));
        }
        results.push(score_one(&state, &d, "", text)?.0);
    }
    Ok(Json(BatchResponse { results }))
}

async fn compare(State(state): State<Arc<AppState>>, Json(req): Json<CompareRequest>) -> AppResult<CompareResponse> {
    if req.variants.len() < 2 {
        return Err(ApiError::bad_request("too_few_variants", "compare needs at least 2 variants"));
    }
    let mut seen = BTreeSet::new();
    for v in &req.variants {
        if !seen.insert(v.label.as_str()) {
            return Err(ApiError::bad_request("duplicate_label", format!("label `{}` is used twice", v.label)));
        }
    }
    let d = loaded(&state)?;
    if d.predictors.is_empty() {
        return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "predictor_not_loaded", "no engagement predictor is loaded"));
    }

    let mut variants = Vec::with_capacity(req.variants.len());
    for v in &req.variants {
        check_size(&state, &format!("variant `{}`", v.label), &v.text)?;
        if v.text.trim().is_empty() {
            return Err(ApiError::bad_request("empty_text", format!("variant `{}` has no text", v.label)));
        }
        let (scored, profile) = score_one(&state, &d, "", &v.text)?;
        let engagement = d
            .predictors
            .iter()
            .map(|p| Ok((p.outcome.clone(), predict_engagement(p, &profile)?)))
            .collect::<percept_core::Result<BTreeMap<_, _>>>()?;
        variants.push(VariantResult { label: v.label.clone(), profile: scored.profile, engagement });
    }

    let base = &variants[0];
    let deltas = variants[1..]
        .iter()
        .map(|v| DeltaRow {
            label: v.label.clone(),
            baseline: base.label.clone(),
            dimensions: v.profile.iter().map(|(k, x)| (*k, x - base.profile[k])).collect(),
            engagement: v
                .engagement
                .iter()
                .map(|(o, e)| {
                    let delta = e.expected - base.engagement[o].expected;
                    (o.clone(), EngagementDelta { delta, percent_change: percent_change(delta) })
                })
                .collect(),
        })
        .collect();
    Ok(Json(CompareResponse { variants, deltas, model_version: d.model.model_version().to_string() }))
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let d = state.deployment();
    Json(Health {
        status: "ok".into(),
        model_loaded: d.is_some(),
        predictor_loaded: d.as_ref().is_some_and(|d| !d.predictors.is_empty()),
        model_version: d.map(|d| d.model.model_version().to_string()),
    })
}

async fn model(State(state): State<Arc<AppState>>) -> AppResult<ModelInfo> {
    let d = loaded(&state)?;
    Ok(Json(ModelInfo {
        catalog_hash: d.model.metadata.catalog_hash.clone(),
        metadata: d.model.metadata.clone(),
        predictors: d.predictors.clone(),
    }))
}

async fn reload(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> AppResult<Health> {
    let req: ReloadRequest = if body.iter().all(u8::is_ascii_whitespace) {
        ReloadRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("invalid_json", e.to_string()))?
    };
    let sources = state.sources.lock().expect("sources lock").clone();
    let model_dir = req
        .model_dir
        .or(sources.model_dir)
        .ok_or_else(|| ApiError::bad_request("no_model_path", "no model directory configured or given"))?;
    let predictors = req.predictors.or(sources.predictors);
    let st = state.clone();
    tokio::task::spawn_blocking(move || st.load_from(&model_dir, predictors.as_deref()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(health(State(state)).await)
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_body_bytes;
    Router::new()
        .route("/v1/score", post(score))
        .route("/v1/score/batch", post(score_batch))
        .route("/v1/compare", post(compare))
        .route("/v1/health", get(health))
        .route("/v1/model", get(model))
        .route("/v1/model/reload", post(reload))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
