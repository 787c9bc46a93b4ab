//! HTTP stand-in for the query service and the MediaWiki APIs, answering
//! from a [`Dataset`] and its canned query map.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Query, State};
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Form, Json, Router};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::oneshot;

use super::dataset::Dataset;
use super::oracle::Canned;
use crate::model::EntityId;
use crate::sparql::{QueryText, SPARQL_RESULTS_JSON};

pub const SPARQL_PATH: &str = "/sparql";
pub const API_PATH: &str = "/w/api.php";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoggedRequest {
    pub method: String,
    pub path: String,
    pub params: BTreeMap<String, String>,
}

pub type RequestLog = Arc<Mutex<Vec<LoggedRequest>>>;

struct Shared {
    dataset: Dataset,
    canned: Canned,
    log: RequestLog,
}

type AppState = Arc<Shared>;

/// Router answering both protocols; mount anywhere.
pub fn router(dataset: Dataset, canned: Canned, log: RequestLog) -> Router {
    let state = Arc::new(Shared {
        dataset,
        canned,
        log,
    });
    Router::new()
        .route(SPARQL_PATH, get(sparql_get).post(sparql_post))
        .route(API_PATH, get(api))
        .with_state(state)
}

/// A running fixture server bound to a loopback port.
pub struct FixtureServer {
    pub addr: SocketAddr,
    pub log: RequestLog,
    shutdown: Option<oneshot::Sender<()>>,
}

impl FixtureServer {
    /// Binds `127.0.0.1:0` on the current tokio runtime.
    pub async fn start(dataset: Dataset, canned: Canned) -> std::io::Result<FixtureServer> {
        Self::start_on("127.0.0.1:0", dataset, canned).await
    }

    pub async fn start_on(
        bind: &str,
        dataset: Dataset,
        canned: Canned,
    ) -> std::io::Result<FixtureServer> {
        let listener = TcpListener::bind(bind).await?;
        let addr = listener.local_addr()?;
        let log = RequestLog::default();
        let app = router(dataset, canned, log.clone());
        let (tx, rx) = oneshot::channel::<()>();
        tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(FixtureServer {
            addr,
            log,
            shutdown: Some(tx),
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn sparql_url(&self) -> String {
        format!("{}{SPARQL_PATH}", self.base_url())
    }

    pub fn api_url(&self) -> String {
        format!("{}{API_PATH}", self.base_url())
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.log.lock().expect("log lock").clone()
    }

    pub fn request_count(&self, path: &str) -> usize {
        self.requests().iter().filter(|r| r.path == path).count()
    }

    pub fn clear_log(&self) {
        self.log.lock().expect("log lock").clear();
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

fn record(state: &Shared, method: &Method, uri: &Uri, params: &BTreeMap<String, String>) {
    state.log.lock().expect("log lock").push(LoggedRequest {
        method: method.to_string(),
        path: uri.path().to_string(),
        params: params.clone(),
    });
}

async fn sparql_get(
    State(state): State<AppState>,
    method: Method,
    uri: Uri,
    Query(params): Query<BTreeMap<String, String>>,
) -> Response {
    record(&state, &method, &uri, &params);
    answer(&state, params.get("query"))
}

async fn sparql_post(
    State(state): State<AppState>,
    method: Method,
    uri: Uri,
    Form(params): Form<BTreeMap<String, String>>,
) -> Response {
    record(&state, &method, &uri, &params);
    answer(&state, params.get("query"))
}

fn answer(state: &Shared, query: Option<&String>) -> Response {
    let Some(query) = query else {
        return (StatusCode::BAD_REQUEST, "missing query parameter\n").into_response();
    };
    let text = QueryText::new(query.clone());
    match state.canned.get(&text) {
        Some(results) => (
            [(header::CONTENT_TYPE, SPARQL_RESULTS_JSON)],
            results.to_json_bytes(),
        )
            .into_response(),
        None => (
            StatusCode::BAD_REQUEST,
            format!(
                "no canned answer for query {}\n{}\n",
                &text.hash_hex()[..16],
                text.normalized()
            ),
        )
            .into_response(),
    }
}

fn api_error(code: &str, info: impl Into<String>) -> Json<Value> {
    Json(json!({"error": {"code": code, "info": info.into()}}))
}

async fn api(
    State(state): State<AppState>,
    method: Method,
    uri: Uri,
    Query(params): Query<BTreeMap<String, String>>,
) -> Json<Value> {
    record(&state, &method, &uri, &params);
    let ds = &state.dataset;
    let param = |k: &str| params.get(k).map(String::as_str).unwrap_or("");
    match param("action") {
        "wbgetentities" => {
            let mut entities = serde_json::Map::new();
            for raw in param("ids").split('|').filter(|s| !s.is_empty()) {
                let Ok(id) = EntityId::parse(raw) else {
                    return api_error("no-such-entity", format!("Could not find an entity with the ID \"{raw}\"."));
                };
                let value = match ds.entity(id) {
                    Some(entity) => filter_entity(
                        entity.to_json(id),
                        param("props"),
                        param("languages"),
                        param("sitefilter"),
                    ),
                    None => json!({"id": id.to_string(), "missing": ""}),
                };
                entities.insert(id.to_string(), value);
            }
            Json(json!({"entities": entities, "success": 1}))
        }
        "wbsearchentities" => {
            let term = param("search").trim().to_lowercase();
            let lang = match param("language") {
                "" => "en",
                l => l,
            };
            let limit: usize = param("limit").parse().unwrap_or(7);
            let mut hits: Vec<(bool, usize, EntityId, &str)> = ds
                .labels
                .iter()
                .filter(|((_, l), _)| l == lang)
                .filter(|(_, (label, _))| !term.is_empty() && label.to_lowercase().starts_with(&term))
                .map(|((id, _), (label, _))| {
                    (label.to_lowercase() != term, label.chars().count(), *id, label.as_str())
                })
                .collect();
            hits.sort();
            let search: Vec<Value> = hits
                .into_iter()
                .take(limit)
                .map(|(_, _, id, label)| {
                    let mut hit = json!({
                        "id": id.to_string(),
                        "label": label,
                        "concepturi": id.iri(),
                    });
                    if let Some(d) = ds.description(id, lang) {
                        hit["description"] = json!(d);
                    }
                    hit
                })
                .collect();
            Json(json!({"searchinfo": {"search": param("search")}, "search": search, "success": 1}))
        }
        "query" if param("prop") == "extracts" => {
            let title = param("titles");
            let site = params
                .get("site")
                .cloned()
                .unwrap_or_else(|| "enwiki".to_string());
            let page = match ds.extract(&site, title) {
                Some(extract) => json!({"1": {"pageid": 1, "ns": 0, "title": title, "extract": extract}}),
                None => json!({"-1": {"ns": 0, "title": title, "missing": ""}}),
            };
            Json(json!({"batchcomplete": "", "query": {"pages": page}}))
        }
        other => api_error("badvalue", format!("Unrecognized value for parameter \"action\": {other}.")),
    }
}

fn filter_entity(mut value: Value, props: &str, languages: &str, sitefilter: &str) -> Value {
    let props: Vec<&str> = if props.is_empty() {
        vec!["labels", "descriptions", "claims", "sitelinks"]
    } else {
        props.split('|').collect()
    };
    let object = value.as_object_mut().expect("entity object");
    for key in ["labels", "descriptions", "claims", "sitelinks"] {
        if !props.contains(&key) {
            object.remove(key);
        }
    }
    if !languages.is_empty() {
        let keep: Vec<&str> = languages.split('|').collect();
        for key in ["labels", "descriptions"] {
            if let Some(map) = object.get_mut(key).and_then(Value::as_object_mut) {
                map.retain(|lang, _| keep.contains(&lang.as_str()));
            }
        }
    }
    if !sitefilter.is_empty() {
        let keep: Vec<&str> = sitefilter.split('|').collect();
        if let Some(map) = object.get_mut("sitelinks").and_then(Value::as_object_mut) {
            map.retain(|site, _| keep.contains(&site.as_str()));
        }
    }
    value
}
