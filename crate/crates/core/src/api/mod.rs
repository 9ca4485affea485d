//! HTTP service over a knowledge graph for the reviewer dashboard: organism
//! list and detail, triage, and pipeline run status.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/version` | format and crate version |
//! | GET | `/api/organisms?limit=&offset=` | organisms by Strong count |
//! | GET | `/api/organisms/{id}` | expansion, OL evidence, chemicals with CL evidence |
//! | POST | `/api/session` | `{reviewer, token}` → session id |
//! | POST | `/api/triage` | `{target, status}`, needs `Authorization: Bearer <session>` |
//! | GET | `/api/triage/{target}` | current status and history |
//! | GET | `/api/runs/{id}` | run manifest |
//!
//! Every body carries `format_version`. Errors are `{error, reason}` with a
//! matching status code.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::kg::{
    Alert, AlertSummary, EdgeLabel, ExplanationPath, KgError, KnowledgeGraph, NodeId, NodeKind,
    TriageState, TriageStatus, KG_FORMAT_VERSION,
};
use crate::model::{AlertLevel, EvidenceKind};
use crate::pipeline::{load_manifest, MANIFEST_FILE};

pub const DEFAULT_LIMIT: usize = 50;
pub const MAX_LIMIT: usize = 500;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Unauthorized(String),
    Internal(String),
}

impl ApiError {
    fn parts(&self) -> (StatusCode, &'static str, &str) {
        match self {
            Self::NotFound(r) => (StatusCode::NOT_FOUND, "NotFound", r),
            Self::BadRequest(r) => (StatusCode::BAD_REQUEST, "BadRequest", r),
            Self::Unauthorized(r) => (StatusCode::UNAUTHORIZED, "Unauthorized", r),
            Self::Internal(r) => (StatusCode::INTERNAL_SERVER_ERROR, "Internal", r),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, error, reason) = self.parts();
        (
            code,
            Json(json!({"format_version": KG_FORMAT_VERSION, "error": error, "reason": reason})),
        )
            .into_response()
    }
}

impl From<KgError> for ApiError {
    fn from(e: KgError) -> Self {
        match e {
            KgError::NodeNotFound(id) => Self::NotFound(format!("node {id} not found")),
            KgError::NotAnOrganism(_) | KgError::IllegalTargetKind(_) => Self::BadRequest(e.to_string()),
            other => Self::Internal(other.to_string()),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Wraps a payload with the graph format version.
#[derive(Debug, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub format_version: u32,
    #[serde(flatten)]
    pub body: T,
}

fn versioned<T>(body: T) -> Json<Versioned<T>> {
    Json(Versioned {
        format_version: KG_FORMAT_VERSION,
        body,
    })
}

#[derive(Debug, Clone)]
pub struct ApiConfig {
    /// Shared secret exchanged for a session.
    pub token: String,
    pub session_ttl: Duration,
    /// Where triage changes are saved; unsaved when absent.
    pub kg_path: Option<PathBuf>,
    /// Directory whose subdirectories are run directories.
    pub runs_root: Option<PathBuf>,
}

impl ApiConfig {
    pub fn new(token: &str) -> Self {
        Self {
            token: token.to_string(),
            session_ttl: Duration::hours(12),
            kg_path: None,
            runs_root: None,
        }
    }
}

#[derive(Debug, Clone)]
struct Session {
    reviewer: String,
    expires_at: DateTime<Utc>,
}

struct Inner {
    graph: RwLock<KnowledgeGraph>,
    sessions: Mutex<HashMap<String, Session>>,
    config: ApiConfig,
}

/// Shared server state; cheap to clone.
#[derive(Clone)]
pub struct ApiState(Arc<Inner>);

impl ApiState {
    pub fn new(graph: KnowledgeGraph, config: ApiConfig) -> Self {
        Self(Arc::new(Inner {
            graph: RwLock::new(graph),
            sessions: Mutex::new(HashMap::new()),
            config,
        }))
    }

    /// A copy of the current graph.
    pub fn snapshot(&self) -> KnowledgeGraph {
        self.0.graph.read().expect("graph lock").clone()
    }
}

pub fn router(state: ApiState) -> Router {
    Router::new()
        .route("/api/version", get(version))
        .route("/api/organisms", get(list_organisms))
        .route("/api/organisms/{id}", get(organism_detail))
        .route("/api/session", post(create_session))
        .route("/api/triage", post(post_triage))
        .route("/api/triage/{target}", get(get_triage))
        .route("/api/runs/{id}", get(run_status))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: ApiState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn version() -> Json<Value> {
    Json(json!({
        "format_version": KG_FORMAT_VERSION,
        "name": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
    }))
}

/// Outbound reference of a literature node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiteratureLink {
    #[serde(rename = "ref")]
    pub reference: String,
    pub url: String,
    pub pmid: Option<String>,
    pub doi: Option<String>,
    pub year: Option<String>,
}

fn literature_of(g: &KnowledgeGraph, node: &NodeId) -> Option<LiteratureLink> {
    let lit = g.outgoing(node, EdgeLabel::reportedInLiterature).next()?;
    let n = g.node(lit)?;
    Some(LiteratureLink {
        reference: n.attr("ref")?.to_string(),
        url: n.attr("url")?.to_string(),
        pmid: n.attr("pmid").map(str::to_string),
        doi: n.attr("doi").map(str::to_string),
        year: n.attr("year").map(str::to_string),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrganismSummary {
    pub id: NodeId,
    pub name: String,
    pub scientific_name: Option<String>,
    pub status: String,
    pub rank: Option<String>,
    pub synonym_count: usize,
    /// Strong alerts of both kinds.
    pub strong: usize,
    pub alert_summary: AlertSummary,
    pub triage: TriageStatus,
}

fn organism_summary(g: &KnowledgeGraph, id: &NodeId) -> Result<OrganismSummary, ApiError> {
    let n = g.require(id)?;
    let summary = g.alert_summary(id)?;
    Ok(OrganismSummary {
        id: id.clone(),
        name: n.attr("name").unwrap_or_default().to_string(),
        scientific_name: n.attr("scientific_name").map(str::to_string),
        status: n.attr("status").unwrap_or_default().to_string(),
        rank: n.attr("rank").map(str::to_string),
        synonym_count: g.synonym_component(id).len() - 1,
        strong: summary.strong(),
        alert_summary: summary,
        triage: g.triage_status(id),
    })
}

#[derive(Debug, Deserialize)]
pub struct Paging {
    limit: Option<usize>,
    offset: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OrganismPage {
    pub total: usize,
    pub limit: usize,
    pub offset: usize,
    pub items: Vec<OrganismSummary>,
}

/// The organisms users asked about, or every accepted organism when the
/// graph records no inputs.
fn listed_organisms(g: &KnowledgeGraph) -> Vec<NodeId> {
    let anchors = g.anchor_organisms();
    if !anchors.is_empty() {
        return anchors;
    }
    g.nodes_of_kind(NodeKind::Organism)
        .filter(|n| n.attr("status") == Some("accepted"))
        .map(|n| n.id.clone())
        .collect()
}

async fn list_organisms(State(s): State<ApiState>, Query(p): Query<Paging>) -> ApiResult<Versioned<OrganismPage>> {
    let limit = p.limit.unwrap_or(DEFAULT_LIMIT);
    if limit == 0 || limit > MAX_LIMIT {
        return Err(ApiError::BadRequest(format!("limit must be between 1 and {MAX_LIMIT}")));
    }
    let offset = p.offset.unwrap_or(0);
    let g = s.0.graph.read().expect("graph lock");
    let mut all = listed_organisms(&g)
        .iter()
        .map(|id| organism_summary(&g, id))
        .collect::<Result<Vec<_>, _>>()?;
    all.sort_by(|a, b| {
        b.strong
            .cmp(&a.strong)
            .then_with(|| a.name.cmp(&b.name))
            .then_with(|| a.id.cmp(&b.id))
    });
    let total = all.len();
    let items = all.into_iter().skip(offset).take(limit).collect();
    Ok(versioned(OrganismPage {
        total,
        limit,
        offset,
        items,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionMember {
    pub id: NodeId,
    pub name: String,
    pub status: String,
    pub rank: Option<String>,
    /// `self`, `synonym` or `genus-member`.
    pub group: String,
    pub path: ExplanationPath,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub id: NodeId,
    pub kind: EvidenceKind,
    pub level: AlertLevel,
    pub rationale: String,
    pub evidence_found: bool,
    pub literature: Option<LiteratureLink>,
    pub paths: Vec<ExplanationPath>,
    pub triage: TriageStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationItem {
    pub id: NodeId,
    pub source: String,
    pub organism: NodeId,
    pub literature: Option<LiteratureLink>,
    pub text: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChemicalItem {
    pub id: NodeId,
    pub key: String,
    pub display: String,
    pub sources: BTreeSet<String>,
    pub best_level: Option<AlertLevel>,
    pub relations: Vec<RelationItem>,
    pub evidence: Vec<EvidenceItem>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OrganismDetail {
    pub organism: OrganismSummary,
    pub expansion: Vec<ExpansionMember>,
    pub ol_evidence: Vec<EvidenceItem>,
    pub chemicals: Vec<ChemicalItem>,
}

fn evidence_item(g: &KnowledgeGraph, alert: &Alert) -> EvidenceItem {
    let n = g.node(&alert.evidence);
    EvidenceItem {
        id: alert.evidence.clone(),
        kind: alert.kind,
        level: alert.level,
        rationale: n.and_then(|n| n.attr("rationale")).unwrap_or_default().to_string(),
        evidence_found: n.and_then(|n| n.attr("evidence_found")) != Some("false"),
        literature: literature_of(g, &alert.evidence),
        paths: alert.paths.clone(),
        triage: g.triage_status(&alert.evidence),
    }
}

fn organism_detail_of(g: &KnowledgeGraph, id: &NodeId) -> Result<OrganismDetail, ApiError> {
    let node = g.node(id).ok_or_else(|| ApiError::NotFound(format!("organism {id} not found")))?;
    if node.kind != NodeKind::Organism {
        return Err(ApiError::NotFound(format!("{id} is not an organism")));
    }
    let organism = organism_summary(g, id)?;
    let mut expansion = Vec::new();
    for (member, path) in g.alert_scope(id)? {
        let n = g.require(&member)?;
        let group = if path.steps.is_empty() {
            "self"
        } else if path.steps.iter().any(|s| s.label == EdgeLabel::hasParentTaxon) {
            "genus-member"
        } else {
            "synonym"
        };
        expansion.push(ExpansionMember {
            id: member.clone(),
            name: n.attr("name").unwrap_or_default().to_string(),
            status: n.attr("status").unwrap_or_default().to_string(),
            rank: n.attr("rank").map(str::to_string),
            group: group.to_string(),
            path,
        });
    }
    expansion.sort_by(|a, b| {
        let rank = |g: &str| match g {
            "self" => 0,
            "synonym" => 1,
            _ => 2,
        };
        rank(&a.group).cmp(&rank(&b.group)).then(a.name.cmp(&b.name))
    });

    let alerts = g.alerts_for_organism(id)?;
    let ol_evidence = alerts
        .iter()
        .filter(|a| a.kind == EvidenceKind::OL)
        .map(|a| evidence_item(g, a))
        .collect();

    let mut chemicals: BTreeMap<NodeId, ChemicalItem> = BTreeMap::new();
    for rel in g.relations_in_scope(id)? {
        let Some(chem) = g.outgoing(&rel, EdgeLabel::relationObjectChemical).next().cloned() else {
            continue;
        };
        let cn = g.require(&chem)?;
        let rn = g.require(&rel)?;
        let item = chemicals.entry(chem.clone()).or_insert_with(|| ChemicalItem {
            id: chem.clone(),
            key: cn.attr("key").unwrap_or_default().to_string(),
            display: cn.attr("display").unwrap_or_default().to_string(),
            sources: BTreeSet::new(),
            best_level: None,
            relations: Vec::new(),
            evidence: Vec::new(),
        });
        let source = rn.attr("source").unwrap_or_default().to_string();
        item.sources.insert(source.clone());
        let text = g
            .outgoing(&rel, EdgeLabel::extractedFromText)
            .next()
            .and_then(|t| g.node(t))
            .and_then(|t| t.attr("text"))
            .map(str::to_string);
        item.relations.push(RelationItem {
            id: rel.clone(),
            source,
            organism: g
                .outgoing(&rel, EdgeLabel::relationSubjectOrganism)
                .next()
                .cloned()
                .unwrap_or_else(|| id.clone()),
            literature: literature_of(g, &rel),
            text,
        });
    }
    for alert in alerts.iter().filter(|a| a.kind == EvidenceKind::CL) {
        let Some(chem) = g.outgoing(&alert.evidence, EdgeLabel::evidenceSubject).next() else {
            continue;
        };
        if let Some(item) = chemicals.get_mut(chem) {
            item.best_level = item.best_level.max(Some(alert.level));
            item.evidence.push(evidence_item(g, alert));
        }
    }
    let mut chemicals: Vec<ChemicalItem> = chemicals.into_values().collect();
    chemicals.sort_by(|a, b| b.best_level.cmp(&a.best_level).then(a.display.cmp(&b.display)));

    Ok(OrganismDetail {
        organism,
        expansion,
        ol_evidence,
        chemicals,
    })
}

async fn organism_detail(State(s): State<ApiState>, Path(id): Path<String>) -> ApiResult<Versioned<OrganismDetail>> {
    let g = s.0.graph.read().expect("graph lock");
    Ok(versioned(organism_detail_of(&g, &NodeId(id))?))
}

#[derive(Debug, Deserialize)]
pub struct SessionRequest {
    pub reviewer: String,
    pub token: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionGrant {
    pub session: String,
    pub reviewer: String,
    pub expires_at: DateTime<Utc>,
}

async fn create_session(State(s): State<ApiState>, Json(req): Json<SessionRequest>) -> ApiResult<Versioned<SessionGrant>> {
    if req.token != s.0.config.token {
        return Err(ApiError::Unauthorized("invalid token".into()));
    }
    let reviewer = req.reviewer.trim();
    if reviewer.is_empty() {
        return Err(ApiError::BadRequest("reviewer must not be empty".into()));
    }
    let session = uuid::Uuid::new_v4().to_string();
    let expires_at = Utc::now() + s.0.config.session_ttl;
    s.0.sessions.lock().expect("session lock").insert(
        session.clone(),
        Session {
            reviewer: reviewer.to_string(),
            expires_at,
        },
    );
    Ok(versioned(SessionGrant {
        session,
        reviewer: reviewer.to_string(),
        expires_at,
    }))
}

fn reviewer_for(s: &ApiState, headers: &HeaderMap) -> Result<String, ApiError> {
    let token = headers
        .get("authorization")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(|| ApiError::Unauthorized("missing session".into()))?;
    let mut sessions = s.0.sessions.lock().expect("session lock");
    match sessions.get(token.trim()) {
        Some(sess) if sess.expires_at > Utc::now() => Ok(sess.reviewer.clone()),
        Some(_) => {
            sessions.remove(token.trim());
            Err(ApiError::Unauthorized("session expired".into()))
        }
        None => Err(ApiError::Unauthorized("unknown session".into())),
    }
}

#[derive(Debug, Deserialize)]
pub struct TriageRequest {
    pub target: NodeId,
    pub status: TriageStatus,
}

async fn post_triage(
    State(s): State<ApiState>,
    headers: HeaderMap,
    Json(req): Json<TriageRequest>,
) -> ApiResult<Versioned<TriageState>> {
    let reviewer = reviewer_for(&s, &headers)?;
    let mut g = s.0.graph.write().expect("graph lock");
    let state = g.set_triage(&req.target, req.status, &reviewer)?;
    if let Some(path) = &s.0.config.kg_path {
        g.save(path).map_err(|e| ApiError::Internal(e.to_string()))?;
    }
    Ok(versioned(state))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TriageView {
    pub target: NodeId,
    pub status: TriageStatus,
    pub history: Vec<TriageState>,
}

async fn get_triage(State(s): State<ApiState>, Path(target): Path<String>) -> ApiResult<Versioned<TriageView>> {
    let g = s.0.graph.read().expect("graph lock");
    let target = NodeId(target);
    g.require(&target)?;
    Ok(versioned(TriageView {
        status: g.triage_status(&target),
        history: g.triage_history(&target).to_vec(),
        target,
    }))
}

fn find_run(root: &FsPath, id: &str) -> Option<PathBuf> {
    if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
        return None;
    }
    let direct = root.join(id);
    if direct.join(MANIFEST_FILE).is_file() {
        return Some(direct);
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect();
    dirs.sort();
    dirs.into_iter()
        .find(|d| load_manifest(d).is_ok_and(|m| m.run_id == id))
}

async fn run_status(State(s): State<ApiState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let root = s
        .0
        .config
        .runs_root
        .as_ref()
        .ok_or_else(|| ApiError::NotFound("no run directory configured".into()))?;
    let dir = find_run(root, &id).ok_or_else(|| ApiError::NotFound(format!("run {id} not found")))?;
    let manifest = load_manifest(&dir).map_err(|e| ApiError::Internal(e.to_string()))?;
    let mut body = serde_json::to_value(&manifest).map_err(|e| ApiError::Internal(e.to_string()))?;
    body["format_version"] = json!(KG_FORMAT_VERSION);
    Ok(Json(body))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_bodies_name_the_reason() {
        let (code, error, _) = ApiError::Unauthorized("x".into()).parts();
        assert_eq!(code, StatusCode::UNAUTHORIZED);
        assert_eq!(error, "Unauthorized");
        let e: ApiError = KgError::NodeNotFound(NodeId("org-x".into())).into();
        assert!(matches!(e, ApiError::NotFound(_)));
    }

    #[test]
    fn run_ids_cannot_escape_the_root() {
        let tmp = tempfile::TempDir::new().unwrap();
        assert!(find_run(tmp.path(), "../etc").is_none());
        assert!(find_run(tmp.path(), ".hidden").is_none());
        assert!(find_run(tmp.path(), "").is_none());
    }
}
