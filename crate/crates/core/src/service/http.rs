use std::future::Future;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

use super::config::ServiceConfig;
use super::mediawiki::{FetchError, MediaWikiClient};
use crate::diff::DiffError;
use crate::entity::{parse_entity, EntityDocument, LabelMap};
use crate::graph2text::referenced_identifiers;
use crate::pipeline::{record_from_documents, PipelineError, RevisionMetadata, RevisionScorer, ScoredChange};

/// Seconds suggested to clients after an upstream failure without its own hint.
const DEFAULT_RETRY_AFTER_SECS: u64 = 5;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ScoreRequest {
    Inline(InlineRequest),
    Fetch(FetchRequest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineRequest {
    /// Wikibase entity JSON before the edit; null or absent for a creation.
    #[serde(default)]
    pub parent: Option<Value>,
    pub current: Value,
    pub metadata: RevisionMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchRequest {
    pub revision_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub service_version: String,
    pub template_version: String,
    pub content_feature_space: usize,
    pub final_feature_set: String,
    pub final_trees: usize,
    pub label_count: usize,
}

impl ModelInfo {
    pub fn of(scorer: &RevisionScorer) -> Self {
        let bundle = scorer.bundle();
        Self {
            service_version: env!("CARGO_PKG_VERSION").to_owned(),
            template_version: bundle.template_version().to_owned(),
            content_feature_space: bundle.content.feature_space(),
            final_feature_set: bundle.final_model.feature_set.as_str().to_owned(),
            final_trees: bundle.final_model.gbdt.trees.len(),
            label_count: scorer.labels().len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub revision_id: Option<u64>,
    pub probability: f64,
    pub pooled_content_score: Option<f64>,
    /// One entry per textualized change, in delta order.
    pub changes: Vec<ScoredChange>,
    pub model: ModelInfo,
    /// Server-side handling time; the only field that varies between
    /// identical requests.
    pub latency_ms: f64,
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    Unprocessable(String),
    NotFound(String),
    FetchDisabled,
    Upstream { message: String, retry_after: u64 },
    Timeout,
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::FetchDisabled => StatusCode::NOT_IMPLEMENTED,
            ApiError::Upstream { .. } => StatusCode::BAD_GATEWAY,
            ApiError::Timeout => StatusCode::GATEWAY_TIMEOUT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn message(&self) -> String {
        match self {
            ApiError::BadRequest(m)
            | ApiError::Unprocessable(m)
            | ApiError::NotFound(m)
            | ApiError::Upstream { message: m, .. }
            | ApiError::Internal(m) => m.clone(),
            ApiError::FetchDisabled => "revision fetching is disabled on this server".into(),
            ApiError::Timeout => "request timed out".into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        let mut response = (status, Json(json!({ "error": self.message() }))).into_response();
        if let ApiError::Upstream { retry_after, .. } = self {
            response
                .headers_mut()
                .insert(header::RETRY_AFTER, HeaderValue::from(retry_after));
        }
        response
    }
}

impl From<FetchError> for ApiError {
    fn from(e: FetchError) -> Self {
        match e {
            FetchError::NotFound(_) => ApiError::NotFound(e.to_string()),
            FetchError::RateLimited { retry_after } => ApiError::Upstream {
                message: e.to_string(),
                retry_after: retry_after.map_or(DEFAULT_RETRY_AFTER_SECS, |d| d.as_secs().max(1)),
            },
            FetchError::UpstreamError(_) => ApiError::Upstream {
                message: e.to_string(),
                retry_after: DEFAULT_RETRY_AFTER_SECS,
            },
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Diff(DiffError::EntityMismatch { .. }) => ApiError::Unprocessable(e.to_string()),
            PipelineError::Diff(_) => ApiError::Unprocessable(e.to_string()),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    scorer: Arc<RevisionScorer>,
    client: Option<Arc<MediaWikiClient>>,
    permits: Arc<Semaphore>,
    timeout: Duration,
    info: Arc<ModelInfo>,
}

impl AppState {
    /// `client` serves `{revision_id}` requests; without one they get 501.
    pub fn new(scorer: RevisionScorer, client: Option<MediaWikiClient>, workers: usize, timeout: Duration) -> Self {
        let info = Arc::new(ModelInfo::of(&scorer));
        Self {
            scorer: Arc::new(scorer),
            client: client.map(Arc::new),
            permits: Arc::new(Semaphore::new(workers.max(1))),
            timeout,
            info,
        }
    }

    pub fn from_config(scorer: RevisionScorer, config: &ServiceConfig) -> Result<Self, FetchError> {
        let client = if config.enable_fetch {
            Some(MediaWikiClient::new(&config.upstream)?)
        } else {
            None
        };
        Ok(Self::new(
            scorer,
            client,
            config.workers,
            Duration::from_millis(config.request_timeout_ms),
        ))
    }
}

fn parse_document(value: &Value, what: &str) -> Result<EntityDocument, ApiError> {
    let bytes = serde_json::to_vec(value).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    parse_entity(&bytes).map_err(|e| ApiError::BadRequest(format!("{what}: {e}")))
}

async fn score_inline(
    state: &AppState,
    parent: Option<EntityDocument>,
    current: EntityDocument,
    metadata: RevisionMetadata,
    labels: Option<LabelMap>,
) -> Result<ScoreResponse, ApiError> {
    let record = record_from_documents(parent.as_ref(), &current, &metadata)?;
    let permit = state
        .permits
        .clone()
        .acquire_owned()
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    let scorer = state.scorer.clone();
    let breakdown = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        let labels = labels.as_ref().unwrap_or(scorer.labels());
        scorer.score_record_with(&record, metadata.previous_timestamp, labels)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(ScoreResponse {
        revision_id: metadata.revision_id,
        probability: breakdown.probability,
        pooled_content_score: breakdown.pooled_content_score,
        changes: breakdown.changes,
        model: (*state.info).clone(),
        latency_ms: 0.0,
    })
}

async fn handle_score(state: &AppState, body: &[u8]) -> Result<ScoreResponse, ApiError> {
    let request: ScoreRequest = serde_json::from_slice(body)
        .map_err(|e| ApiError::BadRequest(format!("expected {{parent, current, metadata}} or {{revision_id}}: {e}")))?;
    match request {
        ScoreRequest::Inline(r) => {
            let parent = r.parent.as_ref().map(|p| parse_document(p, "parent")).transpose()?;
            let current = parse_document(&r.current, "current")?;
            score_inline(state, parent, current, r.metadata, None).await
        }
        ScoreRequest::Fetch(r) => {
            let client = state.client.as_ref().ok_or(ApiError::FetchDisabled)?;
            let fetched = client.fetch_revision_content(r.revision_id).await?;
            let parse_upstream = |v: &Value| {
                parse_document(v, "upstream content").map_err(|e| ApiError::Upstream {
                    message: e.message(),
                    retry_after: DEFAULT_RETRY_AFTER_SECS,
                })
            };
            let parent = fetched.parent.as_ref().map(parse_upstream).transpose()?;
            let current = parse_upstream(&fetched.current)?;
            let deltas = crate::diff::diff_entities(parent.as_ref(), &current).map_err(PipelineError::from)?;
            // Labels for this revision only: the static map first, the API for the rest.
            let wanted: Vec<_> = referenced_identifiers(&deltas, Some(current.id)).into_iter().collect();
            let known = state.scorer.labels();
            let mut labels: LabelMap = wanted
                .iter()
                .filter_map(|id| known.get(id).map(|l| (*id, l.to_owned())))
                .collect();
            let missing: Vec<_> = wanted.into_iter().filter(|id| known.get(id).is_none()).collect();
            for (id, label) in client.fetch_labels(&missing).await?.iter() {
                labels.insert(*id, label);
            }
            score_inline(state, parent, current, fetched.metadata.clone(), Some(labels)).await
        }
    }
}

async fn score(State(state): State<AppState>, body: Bytes) -> Result<Json<ScoreResponse>, ApiError> {
    let started = Instant::now();
    let mut response = tokio::time::timeout(state.timeout, handle_score(&state, &body))
        .await
        .map_err(|_| ApiError::Timeout)??;
    response.latency_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(Json(response))
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn modelinfo(State(state): State<AppState>) -> Json<ModelInfo> {
    Json((*state.info).clone())
}

pub fn router(state: AppState, max_body_bytes: usize) -> Router {
    Router::new()
        .route("/score", post(score))
        .route("/healthz", get(healthz))
        .route("/modelinfo", get(modelinfo))
        .layer(DefaultBodyLimit::max(max_body_bytes))
        .with_state(state)
}

/// Serves until `shutdown` resolves, then lets in-flight requests finish.
pub async fn serve(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
