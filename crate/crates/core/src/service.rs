//! HTTP API under `/api/v1`.
//!
//! All bodies are JSON except `POST /captures`, which takes a capture log
//! (JSONL) as-is. Errors share one body shape, [`ErrorBody`]. Response
//! schemas are published at `GET /api/v1/schemas`.
//!
//! Store writes go through the store's write lock, so there is a single
//! writer. Graph edits additionally take a per-graph lock, held across the
//! classifier call of a keyword lookup so that edits to one graph never
//! interleave.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use schemars::{schema_for, JsonSchema};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::RwLock;

use crate::capture::{parse_capture_log, CaptureLogError};
use crate::classify::{ClassifyError, Classifier};
use crate::config::ServiceConfig;
use crate::graph::{
    Edge, EdgeId, GraphError, GraphId, InterpretationGraph, Node, NodeId, NodeKind, Rect,
};
use crate::model::{Clue, ClueId, Tag};
use crate::retrieval::{ElementGroup, RankedResult, RetrievalError, SortMode, TagQuery};
use crate::store::{classify_all, ClueStore, IngestReport, StoreError};

/// Error body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub detail: Value,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                detail: Value::Null,
            },
        }
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.body.detail = detail;
        self
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<RetrievalError> for ApiError {
    fn from(e: RetrievalError) -> Self {
        use RetrievalError::*;
        let msg = e.to_string();
        match e {
            UnknownClue(id) => ApiError::new(StatusCode::NOT_FOUND, "unknown_clue", msg)
                .with_detail(json!({ "id": id })),
            DuplicateClue(id) => ApiError::new(StatusCode::CONFLICT, "duplicate_clue", msg)
                .with_detail(json!({ "id": id })),
            InvalidClue { report, .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_clue", msg)
                    .with_detail(json!({ "violations": report.codes() }))
            }
            DuplicateTag(_) => ApiError::new(StatusCode::CONFLICT, "duplicate_tag", msg),
            MachineTagImmutable(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "machine_tag_immutable", msg)
            }
            TagNotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "tag_not_found", msg),
            InvalidTag(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_tag", msg),
            TooManyKeywords(_) | InvalidKeyword(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_keywords", msg)
            }
            MissingQuery => ApiError::new(StatusCode::BAD_REQUEST, "missing_query", msg),
        }
    }
}

impl From<ClassifyError> for ApiError {
    fn from(e: ClassifyError) -> Self {
        let msg = e.to_string();
        match e {
            ClassifyError::EmptyArgument(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "empty_argument", msg)
            }
            _ => ApiError::new(StatusCode::BAD_GATEWAY, "llm_unavailable", msg),
        }
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        use GraphError::*;
        let msg = e.to_string();
        match e {
            UnknownNode(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_node", msg),
            UnknownEdge(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_edge", msg),
            UnknownClue(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_clue", msg),
            SchemaMismatch(v) => ApiError::new(StatusCode::BAD_REQUEST, "schema_mismatch", msg)
                .with_detail(json!({ "schema_version": v })),
            CorruptDocument(_) => ApiError::new(StatusCode::BAD_REQUEST, "corrupt_document", msg),
            Classifier(c) => c.into(),
            ZeroSizeRect | SelfLoop(_) | NotAClueNode(_) | NotAGroup(_)
            | KeywordNotOnClue { .. } | CycleDetected(_) | EmptyGroup => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_graph_edit", msg)
            }
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::Retrieval(r) => r.into(),
            StoreError::Graph(g) => g.into(),
            StoreError::UnknownGraph(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_graph", msg),
            StoreError::DuplicateGraph(_) => {
                ApiError::new(StatusCode::CONFLICT, "duplicate_graph", msg)
            }
            StoreError::InvalidGraphId(_) | StoreError::GraphAudit { .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_graph", msg)
            }
            StoreError::Io { .. } | StoreError::CorruptStore { .. } => {
                tracing::error!("{msg}");
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", msg)
            }
        }
    }
}

impl From<CaptureLogError> for ApiError {
    fn from(e: CaptureLogError) -> Self {
        let msg = e.to_string();
        match e {
            CaptureLogError::MalformedLog { line, .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "malformed_log", msg)
                    .with_detail(json!({ "line": line }))
            }
            CaptureLogError::Io(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", msg),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(t)| t)
        .map_err(|e| ApiError::bad_request(format!("invalid query: {e}")))
}

/// Comma-separated `kind:label` list, first = highest priority.
fn parse_tag_list(raw: &str) -> ApiResult<TagQuery> {
    let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    Ok(TagQuery::parse(items)?)
}

fn document(status: StatusCode, graph: &InterpretationGraph) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        graph.to_document(),
    )
        .into_response()
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
pub struct Health {
    pub status: String,
    pub clues: usize,
    pub graphs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
pub struct SearchResponse {
    /// The query tags as `kind:label`, in priority order.
    pub query: Vec<String>,
    pub results: Vec<RankedResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
pub struct ListResponse {
    pub sort: SortMode,
    pub groups: Vec<ElementGroup>,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
pub struct ExpandResponse {
    pub node: NodeId,
    pub keywords: Vec<String>,
    pub tags: Vec<Tag>,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct KeywordsBody {
    pub keywords: Vec<String>,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TagBody {
    pub label: String,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CreateGraphBody {
    pub game_name: String,
    #[serde(default)]
    pub id: Option<String>,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct NewNodeBody {
    pub kind: NodeKind,
    pub rect: Rect,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Offset {
    pub dx: f64,
    pub dy: f64,
}

/// Either sets the rect or translates the node (and its group members).
#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PatchNodeBody {
    #[serde(default)]
    pub rect: Option<Rect>,
    #[serde(default)]
    pub translate: Option<Offset>,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct NewEdgeBody {
    pub from: NodeId,
    pub to: NodeId,
    #[serde(default)]
    pub annotation: Option<String>,
}

/// `null` or a missing annotation clears it.
#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PatchEdgeBody {
    #[serde(default)]
    pub annotation: Option<String>,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MembersBody {
    pub members: Vec<NodeId>,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LookupBody {
    pub keyword: String,
}

#[derive(Debug, Deserialize)]
struct ListParams {
    sort: Option<String>,
    tags: Option<String>,
}

#[derive(Debug, Deserialize)]
struct TagsParam {
    tags: Option<String>,
}

#[derive(Debug, Deserialize)]
struct LabelParam {
    label: Option<String>,
}

/// Response schemas by type name, as served at `/api/v1/schemas`.
pub fn response_schemas() -> BTreeMap<&'static str, Value> {
    fn s<T: JsonSchema>() -> Value {
        serde_json::to_value(schema_for!(T)).expect("schemas serialize")
    }
    BTreeMap::from([
        ("Clue", s::<Clue>()),
        ("Edge", s::<Edge>()),
        ("ErrorBody", s::<ErrorBody>()),
        ("ExpandResponse", s::<ExpandResponse>()),
        ("Health", s::<Health>()),
        ("IngestReport", s::<IngestReport>()),
        ("InterpretationGraph", s::<InterpretationGraph>()),
        ("ListResponse", s::<ListResponse>()),
        ("Node", s::<Node>()),
        ("SearchResponse", s::<SearchResponse>()),
    ])
}

pub struct AppState {
    store: RwLock<ClueStore>,
    classifier: Arc<dyn Classifier>,
    graph_locks: Mutex<BTreeMap<GraphId, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    pub fn new(store: ClueStore, classifier: Arc<dyn Classifier>) -> Arc<Self> {
        Arc::new(AppState {
            store: RwLock::new(store),
            classifier,
            graph_locks: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn store(&self) -> &RwLock<ClueStore> {
        &self.store
    }

    fn graph_lock(&self, id: &GraphId) -> Arc<tokio::sync::Mutex<()>> {
        self.graph_locks
            .lock()
            .expect("lock map poisoned")
            .entry(id.clone())
            .or_default()
            .clone()
    }

    /// Runs a synchronous graph edit under the graph's lock.
    async fn edit_graph<T>(
        &self,
        id: &GraphId,
        edit: impl FnOnce(&mut InterpretationGraph, &crate::retrieval::ClueLibrary) -> Result<T, GraphError>,
    ) -> ApiResult<T> {
        let lock = self.graph_lock(id);
        let _held = lock.lock().await;
        let mut store = self.store.write().await;
        Ok(store.update_graph(id, edit)?)
    }
}

async fn healthz(State(st): State<Arc<AppState>>) -> Json<Health> {
    let store = st.store.read().await;
    Json(Health {
        status: "ok".into(),
        clues: store.library().len(),
        graphs: store.graphs().len(),
    })
}

async fn schemas() -> Json<BTreeMap<&'static str, Value>> {
    Json(response_schemas())
}

async fn post_captures(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<IngestReport>> {
    let text = std::str::from_utf8(&body)
        .map_err(|_| ApiError::bad_request("capture log is not UTF-8"))?;
    let events = parse_capture_log(text)?;
    let (fresh, skipped) = st.store.read().await.partition_new(&events);
    let results = classify_all(st.classifier.as_ref(), &fresh).await;
    let mut store = st.store.write().await;
    let report = store.commit_classified(
        results,
        IngestReport {
            skipped,
            ..IngestReport::default()
        },
    )?;
    Ok(Json(report))
}

async fn list_clues(
    State(st): State<Arc<AppState>>,
    q: Result<Query<ListParams>, QueryRejection>,
) -> ApiResult<Json<ListResponse>> {
    let params = query(q)?;
    let sort: SortMode = match params.sort.as_deref() {
        None => SortMode::Temporal,
        Some(s) => s
            .parse()
            .map_err(|_| ApiError::bad_request(format!("unknown sort `{s}`")))?,
    };
    let tags = params.tags.as_deref().map(parse_tag_list).transpose()?;
    let store = st.store.read().await;
    let groups = store.library().sort_elements(sort, tags.as_ref())?;
    Ok(Json(ListResponse { sort, groups }))
}

async fn get_clue(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Clue>> {
    let store = st.store.read().await;
    let id = ClueId::new(id);
    store
        .library()
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| RetrievalError::UnknownClue(id).into())
}

async fn patch_keywords(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Clue>> {
    let body: KeywordsBody = parse_body(&body)?;
    let mut store = st.store.write().await;
    Ok(Json(store.edit_keywords(&ClueId::new(id), body.keywords)?))
}

async fn post_tag(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Clue>> {
    let body: TagBody = parse_body(&body)?;
    let mut store = st.store.write().await;
    Ok(Json(store.add_custom_tag(&ClueId::new(id), &body.label)?))
}

async fn delete_tag(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    q: Result<Query<LabelParam>, QueryRejection>,
) -> ApiResult<Json<Clue>> {
    let label = query(q)?
        .label
        .ok_or_else(|| ApiError::bad_request("missing `label` query parameter"))?;
    let mut store = st.store.write().await;
    Ok(Json(store.remove_custom_tag(&ClueId::new(id), &label)?))
}

async fn search(
    State(st): State<Arc<AppState>>,
    q: Result<Query<TagsParam>, QueryRejection>,
) -> ApiResult<Json<SearchResponse>> {
    let raw = query(q)?
        .tags
        .ok_or_else(|| ApiError::bad_request("missing `tags` query parameter"))?;
    let tags = parse_tag_list(&raw)?;
    let store = st.store.read().await;
    Ok(Json(SearchResponse {
        query: tags.tags().iter().map(Tag::qualified).collect(),
        results: store.library().search(&tags),
    }))
}

async fn related(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SearchResponse>> {
    let store = st.store.read().await;
    let id = ClueId::new(id);
    let results = store.library().recommend_related(&id)?;
    let clue = store.library().get(&id).expect("recommend_related checked the id");
    Ok(Json(SearchResponse {
        query: clue.tags.iter().map(Tag::qualified).collect(),
        results,
    }))
}

async fn create_graph(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let body: CreateGraphBody = parse_body(&body)?;
    let mut store = st.store.write().await;
    let graph = store.create_graph(body.id.as_deref(), &body.game_name)?;
    Ok(document(StatusCode::CREATED, graph))
}

async fn get_graph(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let store = st.store.read().await;
    Ok(document(StatusCode::OK, store.graph(&GraphId::new(id))?))
}

async fn put_graph(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let text = std::str::from_utf8(&body)
        .map_err(|_| ApiError::bad_request("document is not UTF-8"))?;
    let graph = InterpretationGraph::from_document(text)?;
    if graph.id.as_str() != id {
        return Err(ApiError::bad_request(format!(
            "document id `{}` does not match `{id}`",
            graph.id
        )));
    }
    let lock = st.graph_lock(&graph.id);
    let _held = lock.lock().await;
    let mut store = st.store.write().await;
    Ok(document(StatusCode::OK, store.put_graph(graph)?))
}

async fn add_node(
    State(st): State<Arc<AppState>>,
    Path(gid): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Node>)> {
    let body: NewNodeBody = parse_body(&body)?;
    let node = st
        .edit_graph(&GraphId::new(gid), |g, lib| {
            let id = g.add_node(body.kind, body.rect, lib)?;
            Ok(g.nodes[&id].clone())
        })
        .await?;
    Ok((StatusCode::CREATED, Json(node)))
}

async fn patch_node(
    State(st): State<Arc<AppState>>,
    Path((gid, nid)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Node>> {
    let body: PatchNodeBody = parse_body(&body)?;
    let nid = NodeId::new(nid);
    let node = st
        .edit_graph(&GraphId::new(gid), |g, _| {
            if let Some(rect) = body.rect {
                g.move_resize(&nid, rect)?;
            }
            if let Some(off) = body.translate {
                g.translate(&nid, off.dx, off.dy)?;
            }
            Ok(g.node(&nid)?.clone())
        })
        .await?;
    Ok(Json(node))
}

async fn delete_node(
    State(st): State<Arc<AppState>>,
    Path((gid, nid)): Path<(String, String)>,
) -> ApiResult<Json<Node>> {
    let nid = NodeId::new(nid);
    Ok(Json(st.edit_graph(&GraphId::new(gid), |g, _| g.remove_node(&nid)).await?))
}

async fn add_edge(
    State(st): State<Arc<AppState>>,
    Path(gid): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Edge>)> {
    let body: NewEdgeBody = parse_body(&body)?;
    let edge = st
        .edit_graph(&GraphId::new(gid), |g, _| {
            let id = g.link(&body.from, &body.to, body.annotation)?;
            Ok(g.edges[&id].clone())
        })
        .await?;
    Ok((StatusCode::CREATED, Json(edge)))
}

async fn patch_edge(
    State(st): State<Arc<AppState>>,
    Path((gid, eid)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Edge>> {
    let body: PatchEdgeBody = parse_body(&body)?;
    let eid = EdgeId::new(eid);
    let edge = st
        .edit_graph(&GraphId::new(gid), |g, _| {
            g.annotate_edge(&eid, body.annotation)?;
            Ok(g.edge(&eid)?.clone())
        })
        .await?;
    Ok(Json(edge))
}

async fn delete_edge(
    State(st): State<Arc<AppState>>,
    Path((gid, eid)): Path<(String, String)>,
) -> ApiResult<Json<Edge>> {
    let eid = EdgeId::new(eid);
    Ok(Json(st.edit_graph(&GraphId::new(gid), |g, _| g.remove_edge(&eid)).await?))
}

async fn add_group(
    State(st): State<Arc<AppState>>,
    Path(gid): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Node>)> {
    let body: MembersBody = parse_body(&body)?;
    let node = st
        .edit_graph(&GraphId::new(gid), |g, _| {
            let id = g.group(&body.members)?;
            Ok(g.nodes[&id].clone())
        })
        .await?;
    Ok((StatusCode::CREATED, Json(node)))
}

async fn add_members(
    State(st): State<Arc<AppState>>,
    Path((gid, nid)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Node>> {
    let body: MembersBody = parse_body(&body)?;
    let nid = NodeId::new(nid);
    let node = st
        .edit_graph(&GraphId::new(gid), |g, _| {
            g.add_to_group(&nid, &body.members)?;
            Ok(g.nodes[&nid].clone())
        })
        .await?;
    Ok(Json(node))
}

async fn ungroup(
    State(st): State<Arc<AppState>>,
    Path((gid, nid)): Path<(String, String)>,
) -> ApiResult<Json<Node>> {
    let nid = NodeId::new(nid);
    Ok(Json(st.edit_graph(&GraphId::new(gid), |g, _| g.ungroup(&nid)).await?))
}

async fn expand(
    State(st): State<Arc<AppState>>,
    Path((gid, nid)): Path<(String, String)>,
) -> ApiResult<Json<ExpandResponse>> {
    let store = st.store.read().await;
    let nid = NodeId::new(nid);
    let (keywords, tags) = store
        .graph(&GraphId::new(gid))?
        .expand_node(&nid, store.library())?;
    Ok(Json(ExpandResponse {
        node: nid,
        keywords,
        tags,
    }))
}

async fn lookup(
    State(st): State<Arc<AppState>>,
    Path((gid, nid)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Node>)> {
    let body: LookupBody = parse_body(&body)?;
    let gid = GraphId::new(gid);
    let nid = NodeId::new(nid);
    let lock = st.graph_lock(&gid);
    let _held = lock.lock().await;
    let game = {
        let store = st.store.read().await;
        let graph = store.graph(&gid)?;
        graph.check_keyword(&nid, &body.keyword, store.library())?;
        graph.game_name.clone()
    };
    // The store lock is released while the classifier runs.
    let text = st.classifier.lookup(body.keyword.trim(), &game).await?;
    let mut store = st.store.write().await;
    let node = store.update_graph(&gid, |g, lib| {
        let id = g.insert_context_node(&nid, &body.keyword, text, lib)?;
        Ok(g.nodes[&id].clone())
    })?;
    Ok((StatusCode::CREATED, Json(node)))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no_route", "no such route")
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/schemas", get(schemas))
        .route("/captures", post(post_captures))
        .route("/clues", get(list_clues))
        .route("/clues/{id}", get(get_clue))
        .route("/clues/{id}/keywords", patch(patch_keywords))
        .route("/clues/{id}/tags", post(post_tag).delete(delete_tag))
        .route("/clues/{id}/related", get(related))
        .route("/search", get(search))
        .route("/graphs", post(create_graph))
        .route("/graphs/{gid}", get(get_graph).put(put_graph))
        .route("/graphs/{gid}/nodes", post(add_node))
        .route("/graphs/{gid}/nodes/{nid}", patch(patch_node).delete(delete_node))
        .route("/graphs/{gid}/nodes/{nid}/expand", get(expand))
        .route("/graphs/{gid}/nodes/{nid}/lookup", post(lookup))
        .route("/graphs/{gid}/edges", post(add_edge))
        .route("/graphs/{gid}/edges/{eid}", patch(patch_edge).delete(delete_edge))
        .route("/graphs/{gid}/groups", post(add_group))
        .route("/graphs/{gid}/groups/{nid}", axum::routing::delete(ungroup))
        .route("/graphs/{gid}/groups/{nid}/members", post(add_members))
        .with_state(state);
    Router::new().nest("/api/v1", api).fallback(not_found)
}

/// Opens the store, binds `config.listen_addr` and serves until Ctrl-C.
/// `on_bound` receives the actual address (useful with port 0).
pub async fn serve(
    config: &ServiceConfig,
    on_bound: impl FnOnce(SocketAddr),
) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let store = ClueStore::open(&config.data_dir)?;
    let classifier = config.classifier()?;
    let listener = tokio::net::TcpListener::bind(&config.listen_addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(AppState::new(store, classifier)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
