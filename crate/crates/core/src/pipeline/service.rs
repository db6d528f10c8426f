//! HTTP service over a single [`Session`].
//!
//! Reads see an immutable published snapshot. Writes (spec edits, embeds,
//! weight changes) go through one async mutex, so they are applied in arrival
//! order with increasing revision ids. Each write takes a ticket on arrival;
//! a running embedding is cancelled as soon as a newer ticket exists.
//!
//! Malformed requests get 400, computation failures 422, both with a JSON
//! body `{"stage": ..., "error": ...}`.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::error::{Error, Result};
use crate::evaluate::EvaluationReport;
use crate::geometry::spec::GeometrySpec;
use crate::geometry::{convex_combination, CombinationWeights};
use crate::reduce::{Embedding2D, Reducer, TsneConfig};

use super::{seeded_reducer, BuiltGeometry, GeometryConfig, PipelineConfig, Session};

/// What the service answers reads from.
#[derive(Debug, Clone, Default)]
pub struct Published {
    pub revision: u64,
    pub spec: Option<GeometrySpec>,
    pub geometry: Option<String>,
    pub geometry_builds: u64,
    pub history: Vec<RevisionEntry>,
    pub embedding: Option<Embedding2D>,
    pub report: Option<EvaluationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionEntry {
    pub revision: u64,
    pub kind: String,
    pub geometry: Option<String>,
}

struct Inner {
    config: PipelineConfig,
    spec: Option<GeometrySpec>,
    cache: HashMap<String, Arc<BuiltGeometry>>,
    reducer: Reducer,
    builds: u64,
    revision: u64,
}

/// Shared service state.
pub struct ServiceState {
    session: Arc<Session>,
    inner: Mutex<Inner>,
    published: RwLock<Arc<Published>>,
    tickets: Arc<AtomicU64>,
}

impl ServiceState {
    /// Ingests the configured inputs. A manual or soft geometry in `config`
    /// becomes the initial editable spec.
    pub fn new(config: PipelineConfig) -> Result<Self> {
        let session = Session::open(&config)?;
        Self::with_session(config, session)
    }

    pub fn with_session(config: PipelineConfig, session: Session) -> Result<Self> {
        let spec = match &config.geometry {
            GeometryConfig::Manual { spec } | GeometryConfig::Soft { spec } => Some(GeometrySpec::load(spec)?),
            _ => None,
        };
        let initial_spec = spec.clone();
        Ok(Self {
            session: Arc::new(session),
            inner: Mutex::new(Inner {
                reducer: config.effective_reducer(),
                config,
                spec,
                cache: HashMap::new(),
                builds: 0,
                revision: 0,
            }),
            published: RwLock::new(Arc::new(Published {
                spec: initial_spec,
                ..Published::default()
            })),
            tickets: Arc::new(AtomicU64::new(0)),
        })
    }

    pub fn snapshot(&self) -> Arc<Published> {
        self.published.read().expect("published lock").clone()
    }

    fn take_ticket(&self) -> u64 {
        self.tickets.fetch_add(1, Ordering::SeqCst) + 1
    }

    fn publish(&self, inner: &mut Inner, kind: &str, update: impl FnOnce(&mut Published)) -> u64 {
        inner.revision += 1;
        let mut next = (*self.snapshot()).clone();
        next.revision = inner.revision;
        next.spec = inner.spec.clone();
        next.geometry_builds = inner.builds;
        update(&mut next);
        next.history.push(RevisionEntry {
            revision: inner.revision,
            kind: kind.to_string(),
            geometry: next.geometry.clone(),
        });
        *self.published.write().expect("published lock") = Arc::new(next);
        inner.revision
    }
}

/// Router exposing the service API.
pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/corpus/summary", get(corpus_summary))
        .route("/geometry/spec", put(put_spec).get(get_spec))
        .route("/geometry/matrix/summary", get(matrix_summary))
        .route("/embed", post(post_embed))
        .route("/embedding", get(get_embedding))
        .route("/report", get(get_report))
        .route("/alpha", post(post_alpha))
        .route("/revisions", get(get_revisions))
        .with_state(state)
}

/// Serves until the process is stopped. `port = 0` picks a free port.
pub async fn serve(config: PipelineConfig, port: u16) -> Result<()> {
    let state = tokio::task::spawn_blocking(move || ServiceState::new(config))
        .await
        .map_err(|e| Error::InvalidConfig(e.to_string()))??;
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    let local = listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?;
    println!("listening on http://{local}");
    axum::serve(listener, router(Arc::new(state)))
        .await
        .map_err(|e| Error::io(local.to_string(), e))
}

struct ApiError {
    status: StatusCode,
    stage: String,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl ToString) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            stage: "request".into(),
            message: message.to_string(),
        }
    }

    fn not_found(message: impl ToString) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            stage: "request".into(),
            message: message.to_string(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let cancelled = match &e {
            Error::Stage { source, .. } => matches!(**source, Error::Cancelled),
            other => matches!(other, Error::Cancelled),
        };
        let status = if cancelled {
            StatusCode::CONFLICT
        } else {
            StatusCode::UNPROCESSABLE_ENTITY
        };
        let (stage, source) = match &e {
            Error::Stage { stage, source } => (stage.to_string(), source.to_string()),
            other => ("compute".to_string(), other.to_string()),
        };
        Self {
            status,
            stage,
            message: source,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"stage": self.stage, "error": self.message}))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(ApiError::bad_request)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::from(Error::InvalidConfig(e.to_string())))?
        .map_err(ApiError::from)
}

async fn corpus_summary(State(state): State<Arc<ServiceState>>) -> Json<Value> {
    let docs = &state.session.docs;
    let mut labels: BTreeMap<&str, usize> = BTreeMap::new();
    for l in docs.labels.iter().flatten() {
        *labels.entry(l.as_str()).or_default() += 1;
    }
    let tokens: u64 = docs.counts.term_totals().iter().sum();
    Json(json!({
        "n_docs": docs.n_docs(),
        "n_terms": docs.vocab().len(),
        "tokens": tokens,
        "labels": labels,
        "top_terms": docs.vocab().words().iter().take(20).collect::<Vec<_>>(),
        "preprocess": docs.preprocess,
    }))
}

fn spec_key(spec: &GeometrySpec) -> String {
    let kind = match spec {
        GeometrySpec::Manual(_) => "manual",
        GeometrySpec::Soft(_) => "soft",
    };
    format!("{kind}:{}", spec.content_hash())
}

fn config_key(config: &GeometryConfig, reducer: &Reducer) -> String {
    let mut key = format!("config:{}", serde_json::to_string(config).expect("config serializes"));
    if matches!(config, GeometryConfig::Combine { weights: None, .. }) {
        // Searched weights depend on the reducer.
        key.push_str(&serde_json::to_string(reducer).expect("reducer serializes"));
    }
    key
}

/// Builds (or fetches from the cache) the geometry for `config`, using the
/// current spec for manual and soft components.
async fn resolve_geometry(
    state: &Arc<ServiceState>,
    inner: &mut Inner,
    config: &GeometryConfig,
) -> ApiResult<(String, Arc<BuiltGeometry>)> {
    let spec = match config {
        GeometryConfig::Manual { .. } | GeometryConfig::Soft { .. } => inner.spec.clone(),
        _ => None,
    };
    let key = match &spec {
        Some(s) => spec_key(s),
        None => config_key(config, &inner.reducer),
    };
    if let Some(hit) = inner.cache.get(&key) {
        return Ok((key, hit.clone()));
    }
    let session = state.session.clone();
    let config = config.clone();
    let reducer = inner.reducer.clone();
    let built = blocking(move || match spec {
        Some(spec) => session
            .spec_geometry(&spec)
            .map(|transform| BuiltGeometry {
                transform,
                weights: None,
            })
            .map_err(|e| e.in_stage("geometry")),
        None => session.build_geometry(&config, &reducer),
    })
    .await?;
    inner.builds += 1;
    let built = Arc::new(built);
    inner.cache.insert(key.clone(), built.clone());
    Ok((key, built))
}

#[derive(Serialize)]
struct SpecAck {
    revision: u64,
    hash: String,
    rebuilt: bool,
}

async fn put_spec(State(state): State<Arc<ServiceState>>, body: Bytes) -> ApiResult<Json<SpecAck>> {
    let spec: GeometrySpec = parse_body(&body)?;
    state.take_ticket();
    let mut inner = state.inner.lock().await;
    let builds = inner.builds;
    let previous = inner.spec.replace(spec.clone());
    let config = match &spec {
        GeometrySpec::Manual(_) => GeometryConfig::Manual {
            spec: Default::default(),
        },
        GeometrySpec::Soft(_) => GeometryConfig::Soft {
            spec: Default::default(),
        },
    };
    let key = match resolve_geometry(&state, &mut inner, &config).await {
        Ok((key, _)) => key,
        Err(e) => {
            inner.spec = previous;
            return Err(e);
        }
    };
    let rebuilt = inner.builds > builds;
    let revision = state.publish(&mut inner, "spec", |p| p.geometry = Some(key));
    Ok(Json(SpecAck {
        revision,
        hash: spec.content_hash(),
        rebuilt,
    }))
}

async fn get_spec(State(state): State<Arc<ServiceState>>) -> ApiResult<Json<GeometrySpec>> {
    state
        .snapshot()
        .spec
        .clone()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("no geometry spec loaded"))
}

async fn matrix_summary(State(state): State<Arc<ServiceState>>) -> ApiResult<Json<Value>> {
    let spec = state.snapshot().spec.clone();
    let session = state.session.clone();
    match spec {
        Some(GeometrySpec::Manual(m)) => {
            let summary = blocking(move || {
                m.summarize(session.docs.vocab(), &session.preprocessor)
                    .map_err(|e| e.in_stage("geometry"))
            })
            .await?;
            Ok(Json(serde_json::to_value(summary).expect("summary serializes")))
        }
        Some(GeometrySpec::Soft(s)) => Ok(Json(json!({
            "clusters": s.cluster_names,
            "words": s.words.len(),
            "rho_self": s.rho_self,
        }))),
        None => Err(ApiError::not_found("no manual geometry spec loaded")),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbedRequest {
    #[serde(default)]
    reducer: Option<String>,
    #[serde(default)]
    config: Option<Value>,
    /// Top-level seed; the reducer seed is derived from it.
    #[serde(default)]
    seed: Option<u64>,
}

fn requested_reducer(req: &EmbedRequest, current: &Reducer, top_seed: Option<u64>) -> ApiResult<Reducer> {
    let base = match req.reducer.as_deref() {
        None => {
            return Ok(match req.seed {
                Some(s) => seeded_reducer(current, Some(s)),
                None => current.clone(),
            })
        }
        Some("pca") => Reducer::Pca,
        Some("tsne") => {
            let cfg: TsneConfig = match &req.config {
                Some(v) => serde_json::from_value(v.clone()).map_err(ApiError::bad_request)?,
                None => TsneConfig::default(),
            };
            Reducer::Tsne(cfg)
        }
        Some(other) => return Err(ApiError::bad_request(format!("unknown reducer {other:?}"))),
    };
    let has_own_seed = req.config.as_ref().is_some_and(|c| c.get("seed").is_some());
    let top = req.seed.or(if has_own_seed { None } else { top_seed });
    Ok(seeded_reducer(&base, top))
}

#[derive(Serialize)]
struct EmbedResponse {
    revision: u64,
    geometry: String,
    points: usize,
    report: Option<EvaluationReport>,
}

async fn embed_with(
    state: &Arc<ServiceState>,
    inner: &mut Inner,
    ticket: u64,
    key: String,
    geometry: Arc<BuiltGeometry>,
    kind: &str,
) -> ApiResult<Json<EmbedResponse>> {
    let session = state.session.clone();
    let tickets = state.tickets.clone();
    let reducer = inner.reducer.clone();
    let (embedding, report) = blocking(move || {
        let cancelled = move || tickets.load(Ordering::SeqCst) != ticket;
        if cancelled() {
            return Err(Error::Cancelled.in_stage("reduce"));
        }
        let embedding = session.embed(&geometry, &reducer, &cancelled)?;
        let report = session.evaluate(&embedding)?;
        Ok((embedding, report))
    })
    .await?;
    let points = embedding.len();
    let label = embedding.provenance.geometry.clone();
    let response_report = report.clone();
    let revision = state.publish(inner, kind, |p| {
        p.geometry = Some(key);
        p.embedding = Some(embedding);
        p.report = report;
    });
    Ok(Json(EmbedResponse {
        revision,
        geometry: label,
        points,
        report: response_report,
    }))
}

async fn post_embed(State(state): State<Arc<ServiceState>>, body: Bytes) -> ApiResult<Json<EmbedResponse>> {
    let req: EmbedRequest = if body.iter().all(u8::is_ascii_whitespace) {
        EmbedRequest::default()
    } else {
        parse_body(&body)?
    };
    let ticket = state.take_ticket();
    let mut inner = state.inner.lock().await;
    inner.reducer = requested_reducer(&req, &inner.reducer, inner.config.seed)?;
    let config = match &inner.spec {
        Some(GeometrySpec::Manual(_)) => GeometryConfig::Manual {
            spec: Default::default(),
        },
        Some(GeometrySpec::Soft(_)) => GeometryConfig::Soft {
            spec: Default::default(),
        },
        None => inner.config.geometry.clone(),
    };
    let (key, geometry) = resolve_geometry(&state, &mut inner, &config).await?;
    embed_with(&state, &mut inner, ticket, key, geometry, "embed").await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphaRequest {
    weights: Vec<f64>,
}

async fn post_alpha(State(state): State<Arc<ServiceState>>, body: Bytes) -> ApiResult<Json<EmbedResponse>> {
    let req: AlphaRequest = parse_body(&body)?;
    let weights = CombinationWeights::new(req.weights).map_err(ApiError::bad_request)?;
    let ticket = state.take_ticket();
    let mut inner = state.inner.lock().await;
    let GeometryConfig::Combine { components, .. } = inner.config.geometry.clone() else {
        return Err(ApiError::from(
            Error::InvalidConfig("no combination components configured".into()).in_stage("geometry"),
        ));
    };
    if components.len() != weights.as_slice().len() {
        return Err(ApiError::bad_request(format!(
            "{} weights for {} components",
            weights.as_slice().len(),
            components.len()
        )));
    }
    let mut keys = Vec::new();
    let mut built = Vec::new();
    for c in &components {
        let (key, g) = resolve_geometry(&state, &mut inner, c).await?;
        keys.push(key);
        built.push(g.transform.clone());
    }
    let transform = convex_combination(&built, &weights).map_err(|e| ApiError::from(e.in_stage("geometry")))?;
    let key = format!("alpha:{:?}:{}", weights.as_slice(), keys.join("|"));
    let geometry = Arc::new(BuiltGeometry {
        transform,
        weights: Some(weights),
    });
    embed_with(&state, &mut inner, ticket, key, geometry, "alpha").await
}

#[derive(Deserialize)]
struct EmbeddingQuery {
    format: Option<String>,
}

async fn get_embedding(State(state): State<Arc<ServiceState>>, Query(q): Query<EmbeddingQuery>) -> ApiResult<Response> {
    let snap = state.snapshot();
    let embedding = snap
        .embedding
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no embedding computed yet"))?;
    let labels = state.session.docs.labels.as_deref();
    match q.format.as_deref() {
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv")], embedding.to_csv(labels)).into_response()),
        None | Some("json") => Ok(Json(json!({
            "revision": snap.revision,
            "ids": embedding.ids,
            "coords": embedding.coords,
            "labels": labels,
            "provenance": embedding.provenance,
        }))
        .into_response()),
        Some(other) => Err(ApiError::bad_request(format!("unknown format {other:?}"))),
    }
}

async fn get_report(State(state): State<Arc<ServiceState>>) -> ApiResult<Json<EvaluationReport>> {
    state
        .snapshot()
        .report
        .clone()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("no report available"))
}

async fn get_revisions(State(state): State<Arc<ServiceState>>) -> Json<Value> {
    let snap = state.snapshot();
    Json(json!({
        "current": snap.revision,
        "geometry_builds": snap.geometry_builds,
        "history": snap.history,
    }))
}
