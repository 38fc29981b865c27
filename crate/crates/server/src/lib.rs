//! HTTP/JSON service over a review queue, a construction graph and the
//! corpus the candidates came from.
//!
//! Reads never mutate; the only write is `POST /candidates/{cid}/decision`,
//! serialized through a mutex around the queue.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cxnforge_core::conllc::to_yaml_entry;
use cxnforge_core::conllu::{parse_conllu, serialize_conllu, Sentence};
use cxnforge_core::matcher::{compile, CompiledPattern};
use cxnforge_core::queryc::emit_queries;
use cxnforge_core::review::{Candidate, ReviewError, ReviewQueue, Status, Verdict};
use cxnforge_core::GcxnGraph;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

const DEFAULT_LIMIT: usize = 50;

struct Shared {
    graph: GcxnGraph,
    sentences: HashMap<String, Sentence>,
    queue: Mutex<ReviewQueue>,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    /// Sentences without a `sent_id` cannot be addressed and are dropped.
    pub fn new(graph: GcxnGraph, corpus: Vec<Sentence>, queue: ReviewQueue) -> Self {
        let sentences = corpus
            .into_iter()
            .filter_map(|s| s.sent_id().map(str::to_string).map(|id| (id, s)))
            .collect();
        AppState(Arc::new(Shared {
            graph,
            sentences,
            queue: Mutex::new(queue),
        }))
    }

    fn queue(&self) -> std::sync::MutexGuard<'_, ReviewQueue> {
        // A panic mid-request cannot leave the queue half-written: appends
        // happen before the in-memory update.
        self.0.queue.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Conflict(String),
    BadRequest(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, msg) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (code, Json(json!({ "error": msg }))).into_response()
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        match e {
            ReviewError::UnknownCandidate(_) => ApiError::NotFound(e.to_string()),
            ReviewError::Stale { .. } => ApiError::Conflict(e.to_string()),
            _ => ApiError::Internal(e.to_string()),
        }
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

/// The API routes, plus the UI bundle at `/` when `ui_dir` is given.
pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/cxns", get(list_cxns))
        .route("/cxns/{id}", get(show_cxn))
        .route("/cxns/{id}/candidates", get(list_candidates))
        .route("/candidates/{cid}/decision", post(post_decision))
        .route("/stats", get(stats))
        .route("/sentences/{sent_id}", get(show_sentence))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(state: AppState, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("review service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, ui_dir)).await
}

async fn list_cxns(State(st): State<AppState>) -> Json<Value> {
    let rows: Vec<Value> = st
        .0
        .graph
        .entries()
        .map(|c| json!({ "id": c.cxn_id, "name": c.name }))
        .collect();
    Json(Value::Array(rows))
}

fn compiled_summary(p: &CompiledPattern) -> Value {
    let nodes: Vec<Value> = p
        .node_programs
        .iter()
        .map(|n| {
            json!({
                "id": n.id.to_string(),
                "required": n.required,
                "predicates": n.predicates.iter().map(|p| p.describe()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let edges: Vec<Value> = p
        .edge_programs
        .iter()
        .map(|e| json!({ "parent": e.parent.to_string(), "child": e.child.to_string(), "deprels": e.deprels }))
        .collect();
    json!({
        "nodes": nodes,
        "edges": edges,
        "order": p.order_constraints.iter().map(|(n, l)| json!({ "node": n.to_string(), "left": l.to_string() })).collect::<Vec<_>>(),
        "identity": p.identity_constraints.iter().map(|(f, a, b)| json!({ "field": f.to_string(), "node": a.to_string(), "other": b.to_string() })).collect::<Vec<_>>(),
        "unchecked": p.unchecked.iter().map(|(n, col, v)| json!({ "node": n.to_string(), "column": col, "values": v })).collect::<Vec<_>>(),
    })
}

fn parse_id(raw: &str) -> Result<u32, ApiError> {
    raw.parse().map_err(|_| ApiError::NotFound(format!("no cxn {}", raw)))
}

async fn show_cxn(State(st): State<AppState>, Path(raw): Path<String>) -> ApiResult {
    let id = parse_id(&raw)?;
    let cxn = st.0.graph.entry(id).ok_or_else(|| ApiError::NotFound(format!("no cxn {}", id)))?;
    let (compiled, queries, error) = match compile(cxn) {
        Ok(p) => {
            let set = emit_queries(&p);
            let queries = json!({
                "queries": set.queries.iter().map(|q| json!({
                    "included_optional": q.included_optional.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
                    "text": q.text,
                })).collect::<Vec<_>>(),
                "diagnostics": set.diagnostics,
            });
            (compiled_summary(&p), queries, None)
        }
        Err(e) => (Value::Null, Value::Null, Some(e.to_string())),
    };
    Ok(Json(json!({
        "id": cxn.cxn_id,
        "name": cxn.name,
        "function": cxn.function,
        "yaml": to_yaml_entry(cxn),
        "compiled": compiled,
        "compile_error": error,
        "queries": queries,
        "parents": st.0.graph.parents_of(id).iter().map(|(p, _)| *p).collect::<Vec<_>>(),
        "children": st.0.graph.children_of(id).iter().map(|(c, _)| *c).collect::<Vec<_>>(),
    })))
}

#[derive(Debug, Deserialize)]
struct CandidateQuery {
    status: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

fn candidate_row(c: &Candidate, status: Status) -> Value {
    let sentence = parse_conllu(&c.sentence).ok().and_then(|mut p| p.sentences.pop());
    let (text, tokens) = match &sentence {
        Some(s) => {
            let (text, spans) = s.token_spans();
            let tokens: Vec<Value> = c
                .binding
                .iter()
                .filter_map(|(label, &index)| {
                    let t = s.token(index)?;
                    let (start, end) = spans[index - 1];
                    Some(json!({
                        "label": label.to_string(),
                        "index": index,
                        "form": t.form,
                        "start": start,
                        "end": end,
                        "head": t.head,
                        "deprel": t.deprel,
                    }))
                })
                .collect();
            (text, tokens)
        }
        None => (String::new(), Vec::new()),
    };
    json!({
        "candidate_id": c.candidate_id,
        "cxn_id": c.cxn_id,
        "sent_id": c.sent_id,
        "source": c.source,
        "status": status,
        "binding": c.binding,
        "text": text,
        "tokens": tokens,
    })
}

async fn list_candidates(
    State(st): State<AppState>,
    Path(raw): Path<String>,
    Query(q): Query<CandidateQuery>,
) -> ApiResult {
    let id = parse_id(&raw)?;
    let status = q
        .status
        .as_deref()
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Status>())
        .transpose()
        .map_err(ApiError::BadRequest)?;
    let queue = st.queue();
    if st.0.graph.entry(id).is_none() && queue.select(Some(id), None).is_empty() {
        return Err(ApiError::NotFound(format!("no cxn {}", id)));
    }
    let selected = queue.select(Some(id), status);
    let total = selected.len();
    let offset = q.offset.unwrap_or(0);
    let limit = q.limit.unwrap_or(DEFAULT_LIMIT);
    let rows: Vec<Value> = selected
        .into_iter()
        .skip(offset)
        .take(limit)
        .map(|(c, s)| candidate_row(c, s))
        .collect();
    Ok(Json(json!({ "total": total, "offset": offset, "limit": limit, "rows": rows })))
}

#[derive(Debug, Deserialize)]
struct DecisionBody {
    verdict: Verdict,
    reviewer: String,
    #[serde(default)]
    note: Option<String>,
    /// Status the client last saw; a mismatch is a conflict.
    #[serde(default)]
    expected_status: Option<Status>,
}

async fn post_decision(
    State(st): State<AppState>,
    Path(cid): Path<String>,
    Json(body): Json<DecisionBody>,
) -> ApiResult {
    let mut queue = st.queue();
    let decision = queue.decide(&cid, body.verdict, &body.reviewer, body.note, body.expected_status)?;
    tracing::info!("{} {:?} by {}", cid, body.verdict, body.reviewer);
    Ok(Json(json!({ "decision": decision, "status": body.verdict.status() })))
}

async fn stats(State(st): State<AppState>) -> Json<Value> {
    Json(json!(st.queue().stats()))
}

async fn show_sentence(State(st): State<AppState>, Path(sent_id): Path<String>) -> ApiResult {
    let s = st
        .0
        .sentences
        .get(&sent_id)
        .ok_or_else(|| ApiError::NotFound(format!("no sentence {}", sent_id)))?;
    let (text, spans) = s.token_spans();
    let tokens: Vec<Value> = s
        .tokens
        .iter()
        .zip(&spans)
        .map(|(t, (start, end))| {
            json!({
                "index": t.index,
                "form": t.form,
                "lemma": t.lemma,
                "upos": t.upos,
                "xpos": t.xpos,
                "feats": t.feats.to_string(),
                "head": t.head,
                "deprel": t.deprel,
                "deps": t.deps,
                "misc": t.misc.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
                "start": start,
                "end": end,
            })
        })
        .collect();
    Ok(Json(json!({
        "sent_id": sent_id,
        "text": text,
        "conllu": serialize_conllu(std::slice::from_ref(s)),
        "tokens": tokens,
    })))
}
