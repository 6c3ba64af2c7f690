//! JSON service over an immutable catalog and index snapshot.
//!
//! All errors use the envelope `{"error": message, "code": code}`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use anyhow::Context;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vaselab_core::catalog::{
    build_similarity_graph, linked_selection, Catalog, CatalogError, CatalogRecord, Selector, SimilarityGraph,
};
use vaselab_core::flatten::{ElasticParams, FlattenError, HeatMetric, ProxyKind};
use vaselab_core::imaging::{decode_image, load_image, ImagingError};
use vaselab_core::mesh::{load_mesh, write_obj, MeshError};
use vaselab_core::retrieval::{
    build_index, DescriptorIndex, DescriptorKind, IndexParams, Query as RetrievalQuery, RankedResult,
    RetrievalError, SketchQuery,
};

use crate::pipeline::{self, RolloutParams, RolloutReport};

pub const DEFAULT_GRAPH_K: usize = 5;
pub const DEFAULT_QUERY_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub port: u16,
    pub catalog: PathBuf,
    /// Prebuilt index; without one, every kind is indexed at startup.
    pub index: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub cache_dir: PathBuf,
}

impl ServiceConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.port != 0, "port must be in [1, 65535]");
        Ok(())
    }
}

/// Everything a request may read. Never mutated after construction except
/// for the memo of computed graphs, which are pure functions of the
/// snapshot.
pub struct Snapshot {
    pub catalog: Catalog,
    pub index: DescriptorIndex,
    graphs: Mutex<HashMap<(DescriptorKind, usize), Arc<SimilarityGraph>>>,
}

impl Snapshot {
    pub fn new(catalog: Catalog, index: DescriptorIndex) -> Self {
        Self {
            catalog,
            index,
            graphs: Mutex::new(HashMap::new()),
        }
    }

    pub fn load(config: &ServiceConfig) -> anyhow::Result<Self> {
        let catalog = Catalog::load(&config.catalog)
            .with_context(|| format!("loading catalog {}", config.catalog.display()))?;
        let index = match &config.index {
            Some(path) => DescriptorIndex::load(path).with_context(|| format!("loading index {}", path.display()))?,
            None if catalog.records.is_empty() => empty_index(),
            None => build_index(&catalog.records, &catalog.base_dir, &DescriptorKind::ALL, &IndexParams::default())
                .context("indexing catalog images")?,
        };
        for w in &index.warnings {
            log::warn!("{w}");
        }
        for id in index.object_ids() {
            if !catalog.contains(&id) {
                anyhow::bail!("index object `{id}` is not in the catalog");
            }
        }
        Ok(Self::new(catalog, index))
    }

    /// Kind used when a request names none: SCD if indexed, else the first
    /// indexed kind.
    pub fn default_kind(&self) -> DescriptorKind {
        if !self.index.entries_of(DescriptorKind::Scd).is_empty() {
            return DescriptorKind::Scd;
        }
        DescriptorKind::ALL
            .into_iter()
            .find(|&k| !self.index.entries_of(k).is_empty())
            .unwrap_or(DescriptorKind::Scd)
    }

    pub fn graph(&self, kind: DescriptorKind, k: usize) -> Result<Arc<SimilarityGraph>, CatalogError> {
        if let Some(g) = self.graphs.lock().expect("graph memo").get(&(kind, k)) {
            return Ok(g.clone());
        }
        let g = Arc::new(build_similarity_graph(&self.index, kind, k)?);
        self.graphs.lock().expect("graph memo").insert((kind, k), g.clone());
        Ok(g)
    }

    /// Graph for linked selection; an empty index gives a graph without
    /// nodes.
    fn selection_graph(&self, kind: Option<DescriptorKind>, k: Option<usize>) -> Result<Arc<SimilarityGraph>, CatalogError> {
        let kind = kind.unwrap_or_else(|| self.default_kind());
        let k = k.unwrap_or(DEFAULT_GRAPH_K);
        if self.index.entries.is_empty() {
            return Ok(Arc::new(SimilarityGraph {
                kind,
                k: 0,
                nodes: Vec::new(),
                edges: Vec::new(),
            }));
        }
        self.graph(kind, k)
    }
}

fn empty_index() -> DescriptorIndex {
    DescriptorIndex {
        params: IndexParams::default(),
        kinds: Default::default(),
        entries: Vec::new(),
        warnings: Vec::new(),
    }
}

struct Inner {
    config: ServiceConfig,
    snapshot: RwLock<Arc<Snapshot>>,
}

/// Cheap to clone; requests take an `Arc` of the current snapshot, so a
/// reload never exposes a half-built state.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn load(config: ServiceConfig) -> anyhow::Result<Self> {
        config.validate()?;
        let snapshot = Snapshot::load(&config)?;
        Ok(Self::with_snapshot(config, snapshot))
    }

    pub fn with_snapshot(config: ServiceConfig, snapshot: Snapshot) -> Self {
        Self(Arc::new(Inner {
            config,
            snapshot: RwLock::new(Arc::new(snapshot)),
        }))
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.0.snapshot.read().expect("snapshot lock").clone()
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.0.config
    }

    /// Builds a fresh snapshot from the configured files and swaps it in.
    /// On failure the current snapshot stays.
    pub fn reload(&self) -> anyhow::Result<()> {
        let fresh = Arc::new(Snapshot::load(&self.0.config)?);
        *self.0.snapshot.write().expect("snapshot lock") = fresh;
        Ok(())
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub code: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.message,
            code: self.code.to_string(),
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<RetrievalError> for ApiError {
    fn from(e: RetrievalError) -> Self {
        let msg = e.to_string();
        match e {
            RetrievalError::KindMissing(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "kind_missing", msg),
            RetrievalError::DegenerateSketch(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "degenerate_sketch", msg)
            }
            RetrievalError::UnknownId(_) => Self::not_found("unknown_id", msg),
            RetrievalError::Imaging(ImagingError::Decode(_)) => Self::new(StatusCode::BAD_REQUEST, "bad_image", msg),
            RetrievalError::Imaging(ImagingError::NoForeground | ImagingError::DegenerateContour(_)) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "no_silhouette", msg)
            }
            _ => Self::internal(msg),
        }
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::UnknownId(_) => Self::not_found("unknown_id", e.to_string()),
            CatalogError::InvalidSelector(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_selector", e.to_string())
            }
            CatalogError::Retrieval(r) => r.into(),
            other => Self::internal(other.to_string()),
        }
    }
}

fn pipeline_error(e: anyhow::Error) -> ApiError {
    let msg = format!("{e:#}");
    if let Some(f) = e.downcast_ref::<FlattenError>() {
        return match f {
            FlattenError::InvalidArgument(_) => ApiError::bad_request(msg),
            FlattenError::Io(_) => ApiError::internal(msg),
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "flatten_failed", msg),
        };
    }
    if let Some(m) = e.downcast_ref::<MeshError>() {
        return match m {
            MeshError::NotRevolutionLike { .. } | MeshError::NotClosed { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "not_revolution_like", msg)
            }
            _ => ApiError::internal(msg),
        };
    }
    ApiError::internal(msg)
}

fn json_bytes(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn record<'a>(snap: &'a Snapshot, id: &str) -> Result<&'a CatalogRecord, ApiError> {
    snap.catalog
        .get(id)
        .ok_or_else(|| ApiError::not_found("unknown_id", format!("unknown object id `{id}`")))
}

#[derive(Debug, Deserialize)]
struct ObjectsQuery {
    from: Option<i32>,
    to: Option<i32>,
    /// `west,south,east,north` in degrees.
    bbox: Option<String>,
}

fn parse_bbox(s: &str) -> Result<Selector, ApiError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ApiError::bad_request(format!("bbox `{s}` is not four numbers")))?;
    let [west, south, east, north] = v[..] else {
        return Err(ApiError::bad_request(format!("bbox `{s}` is not four numbers")));
    };
    Ok(Selector::GeoBbox {
        min_lat: south,
        min_lon: west,
        max_lat: north,
        max_lon: east,
    })
}

async fn list_objects(
    State(state): State<AppState>,
    q: Result<Query<ObjectsQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = q.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let snap = state.snapshot();
    let bbox_ids = match &q.bbox {
        Some(s) => {
            let empty = SimilarityGraph {
                kind: DescriptorKind::Scd,
                k: 0,
                nodes: Vec::new(),
                edges: Vec::new(),
            };
            Some(vaselab_core::catalog::resolve_selector(&snap.catalog, &empty, &parse_bbox(s)?)?)
        }
        None => None,
    };
    if let (Some(from), Some(to)) = (q.from, q.to) {
        if from > to {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_selector",
                format!("from {from} is after to {to}"),
            ));
        }
    }
    let records: Vec<&CatalogRecord> = snap
        .catalog
        .records
        .iter()
        .filter(|r| q.from.map_or(true, |f| r.date_to >= f))
        .filter(|r| q.to.map_or(true, |t| r.date_from <= t))
        .filter(|r| bbox_ids.as_ref().map_or(true, |ids| ids.contains(&r.id)))
        .collect();
    Ok(Json(records).into_response())
}

async fn get_object(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let snap = state.snapshot();
    Ok(Json(record(&snap, &id)?).into_response())
}

async fn get_image(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let snap = state.snapshot();
    blocking(move || {
        let r = record(&snap, &id)?;
        let rel = r
            .image_paths
            .first()
            .ok_or_else(|| ApiError::not_found("no_image", format!("object `{id}` has no image")))?;
        let img = load_image(snap.catalog.resolve(rel)).map_err(|e| ApiError::internal(format!("{id}: {e}")))?;
        Ok(([(header::CONTENT_TYPE, "image/png")], img.encode_png()).into_response())
    })
    .await
}

fn mesh_of(snap: &Snapshot, id: &str) -> Result<vaselab_core::mesh::TriangleMesh, ApiError> {
    let r = record(snap, id)?;
    let rel = r
        .mesh_path
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no_mesh", format!("object `{id}` has no mesh")))?;
    load_mesh(snap.catalog.resolve(rel)).map_err(|e| ApiError::internal(format!("{id}: {e}")))
}

async fn get_mesh(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let snap = state.snapshot();
    blocking(move || {
        let mesh = mesh_of(&snap, &id)?;
        let mut obj = Vec::new();
        write_obj(&mesh, &mut obj).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(([(header::CONTENT_TYPE, "model/obj")], obj).into_response())
    })
    .await
}

#[derive(Debug, Deserialize)]
struct RolloutQuery {
    proxy: Option<String>,
    seam: Option<f64>,
    px_per_mm: Option<f64>,
    heat: Option<String>,
    iters: Option<usize>,
    eps: Option<f64>,
    step: Option<f64>,
}

impl RolloutQuery {
    fn rollout_params(&self) -> Result<RolloutParams, ApiError> {
        let defaults = RolloutParams::default();
        let proxy = match self.proxy.as_deref() {
            None | Some("auto") => None,
            Some(p) => Some(p.parse::<ProxyKind>().map_err(ApiError::bad_request)?),
        };
        let heat = match self.heat.as_deref() {
            None | Some("none") => None,
            Some(h) => Some(h.parse::<HeatMetric>().map_err(ApiError::bad_request)?),
        };
        let seam_deg = self.seam.unwrap_or(defaults.seam_deg);
        let px_per_mm = self.px_per_mm.unwrap_or(defaults.px_per_mm);
        if !seam_deg.is_finite() {
            return Err(ApiError::bad_request("seam must be finite"));
        }
        if !(px_per_mm > 0.0 && px_per_mm <= 50.0) {
            return Err(ApiError::bad_request("px_per_mm must be in (0, 50]"));
        }
        Ok(RolloutParams {
            proxy,
            seam_deg,
            px_per_mm,
            heat,
        })
    }

    fn elastic_params(&self) -> Result<ElasticParams, ApiError> {
        let d = ElasticParams::default();
        let p = ElasticParams {
            max_iters: self.iters.unwrap_or(d.max_iters),
            eps: self.eps.unwrap_or(d.eps),
            step: self.step.unwrap_or(d.step),
        };
        p.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
        if p.max_iters > 100_000 {
            return Err(ApiError::bad_request("iters must be at most 100000"));
        }
        Ok(p)
    }
}

#[derive(Serialize)]
struct RenderBody<'a> {
    id: &'a str,
    report: &'a RolloutReport,
    png_base64: String,
}

fn cache_file(dir: &Path, id: &str, key: &serde_json::Value) -> PathBuf {
    let digest = Sha256::digest(serde_json::to_vec(key).expect("cache key serializes"));
    let hex: String = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();
    let safe: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    dir.join(format!("{safe}-{hex}.json"))
}

/// Serves a cached render body or computes, stores and serves it.
fn cached_render(
    state: &AppState,
    snap: &Snapshot,
    id: &str,
    key: serde_json::Value,
    compute: impl FnOnce(&vaselab_core::mesh::TriangleMesh) -> anyhow::Result<pipeline::RolloutOutput>,
) -> Result<Response, ApiError> {
    let dir = &state.config().cache_dir;
    let path = cache_file(dir, id, &key);
    if let Ok(bytes) = std::fs::read(&path) {
        return Ok(json_bytes(bytes));
    }
    let mesh = mesh_of(snap, id)?;
    let out = compute(&mesh).map_err(pipeline_error)?;
    let body = RenderBody {
        id,
        report: &out.report,
        png_base64: base64::engine::general_purpose::STANDARD.encode(out.image.encode_png()),
    };
    let bytes = serde_json::to_vec(&body).map_err(|e| ApiError::internal(e.to_string()))?;
    if let Err(e) = store(dir, &path, &bytes) {
        log::warn!("render cache write failed for {}: {e}", path.display());
    }
    Ok(json_bytes(bytes))
}

fn store(dir: &Path, path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}

async fn get_rollout(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    q: Result<Query<RolloutQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = q.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let params = q.rollout_params()?;
    let snap = state.snapshot();
    record(&snap, &id)?;
    blocking(move || {
        let mesh_path = snap.catalog.get(&id).and_then(|r| r.mesh_path.clone());
        let key = serde_json::json!({"op": "rollout", "id": id, "mesh": mesh_path, "params": params});
        cached_render(&state, &snap, &id, key, |mesh| pipeline::rollout(mesh, &params))
    })
    .await
}

async fn get_flatten(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    q: Result<Query<RolloutQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = q.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let params = q.rollout_params()?;
    let elastic = q.elastic_params()?;
    let snap = state.snapshot();
    record(&snap, &id)?;
    blocking(move || {
        let mesh_path = snap.catalog.get(&id).and_then(|r| r.mesh_path.clone());
        let key = serde_json::json!({
            "op": "flatten", "id": id, "mesh": mesh_path, "params": params, "elastic": elastic
        });
        cached_render(&state, &snap, &id, key, |mesh| pipeline::flatten(mesh, &params, &elastic))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct GraphQuery {
    kind: Option<String>,
    k: Option<usize>,
}

fn parse_kind(s: Option<&str>, snap: &Snapshot) -> Result<DescriptorKind, ApiError> {
    match s {
        None => Ok(snap.default_kind()),
        Some(s) => s.parse().map_err(ApiError::bad_request),
    }
}

async fn get_graph(
    State(state): State<AppState>,
    q: Result<Query<GraphQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = q.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let snap = state.snapshot();
    let kind = parse_kind(q.kind.as_deref(), &snap)?;
    let k = q.k.unwrap_or(DEFAULT_GRAPH_K);
    blocking(move || {
        let g = snap.graph(kind, k)?;
        Ok(Json(&*g).into_response())
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SketchBody {
    #[serde(flatten)]
    sketch: SketchQuery,
    kind: Option<String>,
    k: Option<usize>,
}

async fn query_sketch(
    State(state): State<AppState>,
    body: Result<Json<serde_json::Value>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(value) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let body: SketchBody = serde_json::from_value(value).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let snap = state.snapshot();
    let kind = parse_kind(body.kind.as_deref(), &snap)?;
    let k = body.k.unwrap_or(DEFAULT_QUERY_K);
    blocking(move || {
        let r: RankedResult = snap.index.query(&RetrievalQuery::Sketch(&body.sketch), kind, k)?;
        Ok(Json(r).into_response())
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotifBody {
    /// Base64 PNG or binary PGM.
    image: String,
    kind: Option<String>,
    k: Option<usize>,
}

async fn query_motif(
    State(state): State<AppState>,
    body: Result<Json<MotifBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let snap = state.snapshot();
    let kind = parse_kind(body.kind.as_deref(), &snap)?;
    let k = body.k.unwrap_or(DEFAULT_QUERY_K);
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(body.image.as_bytes())
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_image", format!("image is not base64: {e}")))?;
    blocking(move || {
        let img = decode_image(&bytes).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_image", e.to_string()))?;
        let r = snap.index.query(&RetrievalQuery::Image(&img), kind, k)?;
        Ok(Json(r).into_response())
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionBody {
    selector: Selector,
    kind: Option<String>,
    k: Option<usize>,
}

async fn post_selection(
    State(state): State<AppState>,
    body: Result<Json<SelectionBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let snap = state.snapshot();
    let kind = body.kind.as_deref().map(|s| parse_kind(Some(s), &snap)).transpose()?;
    blocking(move || {
        let graph = snap.selection_graph(kind, body.k)?;
        let sel = linked_selection(&snap.catalog, &graph, &body.selector)?;
        Ok(Json(sel).into_response())
    })
    .await
}

async fn api_not_found() -> ApiError {
    ApiError::not_found("not_found", "no such endpoint")
}

pub fn router(state: AppState) -> Router {
    let static_dir = state.config().static_dir.clone();
    let api = Router::new()
        .route("/api/objects", get(list_objects))
        .route("/api/objects/:id", get(get_object))
        .route("/api/objects/:id/image", get(get_image))
        .route("/api/objects/:id/mesh", get(get_mesh))
        .route("/api/objects/:id/rollout", get(get_rollout))
        .route("/api/objects/:id/flatten", get(get_flatten))
        .route("/api/graph", get(get_graph))
        .route("/api/query/sketch", post(query_sketch))
        .route("/api/query/motif", post(query_motif))
        .route("/api/selection", post(post_selection))
        .route("/api/*rest", axum::routing::any(api_not_found))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(api_not_found),
    }
}

/// Binds, serves until Ctrl-C and reloads the snapshot on SIGHUP.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let state = AppState::load(config.clone()).context("cannot start service")?;
    let addr = SocketAddr::from(([127, 0, 0, 1], config.port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("cannot bind {addr}"))?;
    log::info!("serving {} objects on http://{addr}", state.snapshot().catalog.records.len());
    #[cfg(unix)]
    {
        let state = state.clone();
        tokio::spawn(async move {
            use tokio::signal::unix::{signal, SignalKind};
            let Ok(mut hup) = signal(SignalKind::hangup()) else {
                return;
            };
            while hup.recv().await.is_some() {
                match tokio::task::spawn_blocking({
                    let state = state.clone();
                    move || state.reload()
                })
                .await
                {
                    Ok(Ok(())) => log::info!("snapshot reloaded"),
                    Ok(Err(e)) => log::error!("reload failed, keeping the old snapshot: {e:#}"),
                    Err(e) => log::error!("reload task failed: {e}"),
                }
            }
        });
    }
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
