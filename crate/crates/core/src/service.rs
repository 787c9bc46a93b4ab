//! HTTP front end: aspect pages, identifier redirects, the JSON panel API
//! and static hosting of the browser client.

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;
use tracing::{info, warn};

use crate::entity_api::{ApiConfig, EntityApiClient, EntityApiError};
use crate::model::{Aspect, EntityId, PropertyRegistry, Term, XSD_DECIMAL, XSD_INTEGER};
use crate::query::{self, catalog, PanelDef, PanelKind, PanelQuerySpec, DEFAULT_LANGUAGE};
use crate::resolver::{guess_aspect, resolve_external, AspectRules, ExternalIdKind, ResolveError};
use crate::sparql::{CacheStatus, EndpointConfig, SparqlClient, SparqlError};
use crate::stats;

pub const DEFAULT_BIND: &str = "127.0.0.1:8100";
pub const PROBLEM_JSON: &str = "application/problem+json";
const SEARCH_DEFAULT_LIMIT: usize = 7;
const SEARCH_MAX_LIMIT: usize = 50;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Mount point such as `/scholia`; empty for the root.
    pub prefix: String,
    pub ui_dir: PathBuf,
    /// Query editor base; the URL-encoded query is appended.
    pub editor_url: String,
    pub language: String,
}

impl ServiceConfig {
    pub fn new(endpoint: &EndpointConfig) -> Self {
        ServiceConfig {
            prefix: String::new(),
            ui_dir: PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("ui"),
            editor_url: editor_for(&endpoint.base_url),
            language: DEFAULT_LANGUAGE.to_string(),
        }
    }

    /// Reads `SCHOLIA_PREFIX`, `SCHOLIA_UI_DIR` and `SCHOLIA_EDITOR_URL`.
    pub fn from_env(endpoint: &EndpointConfig) -> Self {
        let mut config = ServiceConfig::new(endpoint);
        if let Ok(prefix) = std::env::var("SCHOLIA_PREFIX") {
            config.prefix = normalize_prefix(&prefix);
        }
        if let Ok(dir) = std::env::var("SCHOLIA_UI_DIR") {
            config.ui_dir = PathBuf::from(dir);
        }
        if let Ok(url) = std::env::var("SCHOLIA_EDITOR_URL") {
            config.editor_url = url;
        }
        config
    }
}

/// `scholia/` → `/scholia`, `/` → empty.
pub fn normalize_prefix(prefix: &str) -> String {
    let trimmed = prefix.trim().trim_matches('/');
    if trimmed.is_empty() {
        String::new()
    } else {
        format!("/{trimmed}")
    }
}

fn editor_for(endpoint: &str) -> String {
    let base = endpoint.trim_end_matches('/');
    let base = base.strip_suffix("/sparql").unwrap_or(base);
    format!("{base}/#")
}

/// Shared, read-only handler state. Clones share the SPARQL cache.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    sparql: SparqlClient,
    api: EntityApiClient,
    registry: PropertyRegistry,
    rules: AspectRules,
    config: ServiceConfig,
}

impl AppState {
    pub fn new(
        sparql: SparqlClient,
        api: EntityApiClient,
        registry: PropertyRegistry,
        rules: AspectRules,
        config: ServiceConfig,
    ) -> Self {
        AppState {
            inner: Arc::new(Inner {
                sparql,
                api,
                registry,
                rules,
                config,
            }),
        }
    }

    /// Clients and config from the `SCHOLIA_*` environment.
    pub fn from_env() -> Result<Self, String> {
        let endpoint = EndpointConfig::from_env().map_err(|e| e.to_string())?;
        let config = ServiceConfig::from_env(&endpoint);
        let sparql = SparqlClient::new(endpoint).map_err(|e| e.to_string())?;
        let api = EntityApiClient::new(ApiConfig::from_env()).map_err(|e| e.to_string())?;
        Ok(AppState::new(
            sparql,
            api,
            PropertyRegistry::default(),
            AspectRules::default(),
            config,
        ))
    }

    pub fn sparql(&self) -> &SparqlClient {
        &self.inner.sparql
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    pub fn api(&self) -> &EntityApiClient {
        &self.inner.api
    }

    pub fn registry(&self) -> &PropertyRegistry {
        &self.inner.registry
    }

    pub fn rules(&self) -> &AspectRules {
        &self.inner.rules
    }
}

pub fn router(state: AppState) -> Router {
    let ui = ServeDir::new(&state.inner.config.ui_dir).append_index_html_on_directories(true);
    let prefix = state.inner.config.prefix.clone();
    let app = Router::new()
        .route("/", get(front))
        .route("/healthz", get(|| async { Json(json!({"status": "ok"})) }))
        .route("/api/panels", get(|| async { Json(catalog::catalog_json()) }))
        .route("/api/schema/{aspect}/{panel}", get(panel_schema))
        .route("/api/search", get(search))
        .route("/api/panel/{aspect}/{panel}/{id}", get(api_panel))
        .route("/doi/{*value}", get(|s, p| external(ExternalIdKind::Doi, s, p)))
        .route("/orcid/{*value}", get(|s, p| external(ExternalIdKind::Orcid, s, p)))
        .route("/twitter/{*value}", get(|s, p| external(ExternalIdKind::Twitter, s, p)))
        .route("/github/{*value}", get(|s, p| external(ExternalIdKind::Github, s, p)))
        .route("/{id}", get(bare_item))
        .route("/{aspect}/{id}", get(aspect_page))
        .nest_service("/ui", ui)
        .fallback(|| async { problem(StatusCode::NOT_FOUND, "Not Found", "no such route") })
        .with_state(state);
    if prefix.is_empty() {
        app
    } else {
        Router::new().nest(&prefix, app)
    }
}

/// Serves until the process is stopped.
pub async fn serve(state: AppState, bind: &str) -> std::io::Result<()> {
    let listener = TcpListener::bind(bind).await?;
    info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(state)).await
}

/// A service on an ephemeral loopback port, shut down on drop.
pub struct ServiceHandle {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
}

impl ServiceHandle {
    pub async fn start(state: AppState) -> std::io::Result<ServiceHandle> {
        let listener = TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let app = router(state);
        tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(ServiceHandle {
            addr,
            shutdown: Some(tx),
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

pub fn problem(status: StatusCode, title: &str, detail: impl Into<String>) -> Response {
    problem_with(status, title, detail, None)
}

fn problem_with(
    status: StatusCode,
    title: &str,
    detail: impl Into<String>,
    extra: Option<(&str, Value)>,
) -> Response {
    let mut body = json!({
        "type": "about:blank",
        "title": title,
        "status": status.as_u16(),
        "detail": detail.into(),
    });
    if let Some((key, value)) = extra {
        body[key] = value;
    }
    (
        status,
        [(header::CONTENT_TYPE, HeaderValue::from_static(PROBLEM_JSON))],
        body.to_string(),
    )
        .into_response()
}

fn found(location: String) -> Response {
    match HeaderValue::from_str(&location) {
        Ok(value) => (StatusCode::FOUND, [(header::LOCATION, value)]).into_response(),
        Err(_) => problem(StatusCode::BAD_REQUEST, "Bad Request", "unencodable location"),
    }
}

#[allow(clippy::result_large_err)]
fn parse_item(text: &str) -> Result<EntityId, Response> {
    match EntityId::parse(text) {
        Ok(id) if id.is_item() => Ok(id),
        Ok(id) => Err(problem(
            StatusCode::BAD_REQUEST,
            "Bad Request",
            format!("{id} is not an item id"),
        )),
        Err(e) => Err(problem(StatusCode::BAD_REQUEST, "Bad Request", e.to_string())),
    }
}

#[allow(clippy::result_large_err)]
fn parse_aspect(segment: &str) -> Result<Aspect, Response> {
    Aspect::from_segment(segment).ok_or_else(|| {
        problem(
            StatusCode::NOT_FOUND,
            "Not Found",
            format!("unknown aspect {segment:?}"),
        )
    })
}

fn upstream(error: impl std::fmt::Display) -> Response {
    warn!(%error, "upstream failure");
    problem(StatusCode::BAD_GATEWAY, "Bad Gateway", error.to_string())
}

async fn front(State(state): State<AppState>) -> Response {
    found(format!("{}/ui/", state.inner.config.prefix))
}

async fn bare_item(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let id = match parse_item(&id) {
        Ok(id) => id,
        Err(r) => return r,
    };
    let s = &state.inner;
    match guess_aspect(id, &s.sparql, &s.registry, &s.rules).await {
        Ok(aspect) => found(format!("{}/{}/{id}", s.config.prefix, aspect.segment())),
        Err(ResolveError::NotAnItem(id)) => problem(
            StatusCode::BAD_REQUEST,
            "Bad Request",
            format!("{id} is not an item id"),
        ),
        Err(e) => upstream(e),
    }
}

async fn external(kind: ExternalIdKind, State(state): State<AppState>, Path(value): Path<String>) -> Response {
    let s = &state.inner;
    match resolve_external(kind, &value, &s.sparql, &s.registry).await {
        Ok(id) => found(format!("{}/{id}", s.config.prefix)),
        Err(e @ ResolveError::NotFound { .. }) => problem(StatusCode::NOT_FOUND, "Not Found", e.to_string()),
        Err(ResolveError::Ambiguous {
            kind,
            value,
            candidates,
        }) => {
            let list: Vec<Value> = candidates
                .iter()
                .map(|c| json!({"id": c.to_string(), "href": format!("{}/{c}", s.config.prefix)}))
                .collect();
            problem_with(
                StatusCode::CONFLICT,
                "Conflict",
                format!("{kind} {value:?} matches {} items", candidates.len()),
                Some(("candidates", Value::Array(list))),
            )
        }
        Err(e @ (ResolveError::EmptyValue | ResolveError::NotAnItem(_))) => {
            problem(StatusCode::BAD_REQUEST, "Bad Request", e.to_string())
        }
        Err(e @ ResolveError::Sparql(_)) => upstream(e),
    }
}

fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

async fn aspect_page(
    State(state): State<AppState>,
    Path((aspect, id)): Path<(String, String)>,
) -> Response {
    let aspect = match parse_aspect(&aspect) {
        Ok(a) => a,
        Err(r) => return r,
    };
    let id = match parse_item(&id) {
        Ok(id) => id,
        Err(r) => return r,
    };
    let s = &state.inner;
    let prefix = &s.config.prefix;
    // The page degrades to the bare id if the entity API is unreachable.
    let label = match s.api.fetch_labels(&[id], &s.config.language).await {
        Ok(labels) => labels.get(&id).cloned(),
        Err(e) => {
            warn!(%e, "label fetch failed");
            None
        }
    };
    let extract = s.api.fetch_extract(id, "enwiki").await.ok().flatten();
    let title = label.unwrap_or_else(|| id.to_string());
    let mut html = format!(
        "<!DOCTYPE html>\n<html lang=\"{lang}\">\n<head>\n<meta charset=\"utf-8\">\n\
         <title>{t} ({a})</title>\n<link rel=\"stylesheet\" href=\"{prefix}/ui/style.css\">\n</head>\n\
         <body data-aspect=\"{a}\" data-id=\"{id}\" data-prefix=\"{prefix}\">\n<h1>{t}</h1>\n\
         <p class=\"aspect\">{a} <a href=\"{prefix}/{id}\">{id}</a></p>\n",
        lang = escape_html(&s.config.language),
        t = escape_html(&title),
        a = aspect.segment(),
    );
    if let Some(extract) = extract {
        html.push_str(&format!(
            "<blockquote class=\"extract\">{}</blockquote>\n",
            escape_html(&extract)
        ));
    }
    for panel in catalog::panels_for(aspect) {
        html.push_str(&format!(
            "<section class=\"panel\" data-panel=\"{name}\" data-kind=\"{kind}\" \
             data-api=\"{prefix}/api/panel/{a}/{name}/{id}\">\n<h2>{title}</h2>\n</section>\n",
            name = panel.name,
            kind = serde_json::to_value(panel.kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            a = aspect.segment(),
            title = escape_html(panel.title),
        ));
    }
    html.push_str(&format!(
        "<script type=\"module\" src=\"{prefix}/ui/app.js\"></script>\n</body>\n</html>\n"
    ));
    Html(html).into_response()
}

async fn panel_schema(Path((aspect, panel)): Path<(String, String)>) -> Response {
    let aspect = match parse_aspect(&aspect) {
        Ok(a) => a,
        Err(r) => return r,
    };
    match catalog::find(aspect, &panel) {
        Some(def) => Json(def.response_schema()).into_response(),
        None => problem(
            StatusCode::NOT_FOUND,
            "Not Found",
            format!("no panel {panel:?} for aspect {aspect}"),
        ),
    }
}

async fn search(
    State(state): State<AppState>,
    Query(params): Query<BTreeMap<String, String>>,
) -> Response {
    let term = params.get("q").map(String::as_str).unwrap_or("");
    let limit = match params.get("limit") {
        None => SEARCH_DEFAULT_LIMIT,
        Some(raw) => match raw.parse::<usize>() {
            Ok(n) if (1..=SEARCH_MAX_LIMIT).contains(&n) => n,
            _ => {
                return problem(
                    StatusCode::BAD_REQUEST,
                    "Bad Request",
                    format!("limit must be 1..={SEARCH_MAX_LIMIT}"),
                )
            }
        },
    };
    let s = &state.inner;
    match s.api.search_entities(term, limit, &s.config.language).await {
        Ok(hits) => Json(json!({"query": term.trim(), "search": hits})).into_response(),
        Err(e @ EntityApiError::BlankTerm) => problem(StatusCode::BAD_REQUEST, "Bad Request", e.to_string()),
        Err(e) => upstream(e),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PanelError {
    #[error("no panel {panel:?} for aspect {aspect}")]
    UnknownPanel { aspect: Aspect, panel: String },
    #[error(transparent)]
    Query(#[from] query::QueryError),
    #[error(transparent)]
    Sparql(#[from] SparqlError),
    #[error("malformed endpoint results: {0}")]
    Stats(#[from] stats::StatsError),
}

impl PanelError {
    fn into_response(self) -> Response {
        match self {
            e @ PanelError::UnknownPanel { .. } => problem(StatusCode::NOT_FOUND, "Not Found", e.to_string()),
            e @ PanelError::Query(_) => problem(StatusCode::BAD_REQUEST, "Bad Request", e.to_string()),
            e => upstream(e),
        }
    }
}

/// Panel response for `(aspect, panel, id)`; shared with the CLI.
pub async fn panel_response(
    state: &AppState,
    aspect: Aspect,
    panel: &str,
    subject: EntityId,
) -> Result<Value, PanelError> {
    let s = &state.inner;
    let def = catalog::find(aspect, panel).ok_or_else(|| PanelError::UnknownPanel {
        aspect,
        panel: panel.to_string(),
    })?;
    let mut spec = PanelQuerySpec::new(aspect, panel, subject);
    spec.language = s.config.language.clone();
    let query = query::build_panel_query(&spec, &s.registry)?;
    let (results, cache) = s.sparql.execute_traced(&query).await?;
    let editor = format!(
        "{}{}",
        s.config.editor_url,
        utf8_percent_encode(query.as_str(), NON_ALPHANUMERIC)
    );
    let mut body = json!({
        "aspect": aspect.segment(),
        "panel": def.name,
        "subject": subject.to_string(),
        "kind": def.kind,
        "schema": def.response_schema(),
        "generated_query": query.as_str(),
        "query_editor_url": editor,
        "cache": match cache { CacheStatus::Hit => "hit", CacheStatus::Miss => "miss" },
    });
    for (key, value) in render_panel(def, subject, &results)? {
        body[key] = value;
    }
    Ok(body)
}

async fn api_panel(
    State(state): State<AppState>,
    Path((aspect, panel, id)): Path<(String, String, String)>,
) -> Response {
    let aspect = match parse_aspect(&aspect) {
        Ok(a) => a,
        Err(r) => return r,
    };
    if catalog::find(aspect, &panel).is_none() {
        return problem(
            StatusCode::NOT_FOUND,
            "Not Found",
            format!("no panel {panel:?} for aspect {aspect}"),
        );
    }
    let id = match parse_item(&id) {
        Ok(id) => id,
        Err(r) => return r,
    };
    match panel_response(&state, aspect, &panel, id).await {
        Ok(body) => Json(body).into_response(),
        Err(e) => e.into_response(),
    }
}

/// JSON cell for a result term: ids for entities, numbers for numeric
/// literals, text otherwise.
pub fn cell(term: Option<&Term>) -> Value {
    let Some(term) = term else {
        return Value::Null;
    };
    if let Some(id) = term.as_entity() {
        return json!(id.to_string());
    }
    if let Term::Literal {
        value,
        datatype: Some(dt),
        ..
    } = term
    {
        if dt == XSD_INTEGER {
            if let Ok(n) = value.parse::<i64>() {
                return json!(n);
            }
        }
        if dt == XSD_INTEGER || dt == XSD_DECIMAL || dt.ends_with("#double") || dt.ends_with("#float") {
            if let Ok(x) = value.parse::<f64>() {
                return json!(x);
            }
        }
    }
    json!(term.value())
}

fn render_panel(
    def: &PanelDef,
    subject: EntityId,
    results: &crate::model::ResultSet,
) -> Result<Vec<(&'static str, Value)>, stats::StatsError> {
    Ok(match def.kind {
        PanelKind::Table => {
            let rows: Vec<Value> = results
                .rows
                .iter()
                .map(|row| {
                    Value::Object(
                        def.columns
                            .iter()
                            .map(|c| (c.to_string(), cell(row.get(*c))))
                            .collect(),
                    )
                })
                .collect();
            vec![("columns", json!(def.columns)), ("rows", Value::Array(rows))]
        }
        PanelKind::RoleBars => {
            let records = stats::records_from_author_rows(results, subject)?;
            let hist = stats::papers_per_year_by_role(&records, subject);
            vec![("series", hist.series_json())]
        }
        PanelKind::AuthorBars if def.name == "page-production-raw" => {
            let (records, labels) = stats::records_from_page_rows(results)?;
            let authors: BTreeSet<EntityId> = labels.keys().copied().collect();
            let production = stats::normalized_page_production(&records, &authors);
            vec![
                ("series", production.series.series_json(&labels)),
                ("missing_pages", json!(production.missing_pages)),
                ("undated", json!(production.undated)),
            ]
        }
        PanelKind::AuthorBars => {
            let (rows, labels) = stats::citation_rows_from(results)?;
            let series = stats::coauthor_normalized_citations(&rows)?;
            vec![("series", series.series_json(&labels))]
        }
        PanelKind::Scatter => {
            let counts = stats::venue_counts_from(results)?;
            let points = stats::publisher_scatter(&counts);
            vec![("points", json!(points))]
        }
        PanelKind::Graph => {
            let (nodes, edges) = graph_of(def, results);
            vec![("nodes", nodes), ("edges", edges)]
        }
    })
}

/// Node-link form of a graph panel: columns 0 and 2 are the endpoints,
/// 1 and 3 their labels, an optional column 4 the weight.
fn graph_of(def: &PanelDef, results: &crate::model::ResultSet) -> (Value, Value) {
    let cols = def.columns;
    let mut nodes: BTreeMap<String, String> = BTreeMap::new();
    let mut edges = Vec::new();
    for row in &results.rows {
        let (Some(a), Some(b)) = (row.get(cols[0]), row.get(cols[2])) else {
            continue;
        };
        let id = |t: &Term| t.as_entity().map(|e| e.to_string()).unwrap_or_else(|| t.value().to_string());
        let (a_id, b_id) = (id(a), id(b));
        for (node, label_col) in [(&a_id, cols[1]), (&b_id, cols[3])] {
            let label = row
                .get(label_col)
                .map(|t| t.value().to_string())
                .unwrap_or_else(|| node.clone());
            nodes.entry(node.clone()).or_insert(label);
        }
        let mut edge = json!({"source": a_id, "target": b_id});
        if let Some(w) = cols.get(4).and_then(|c| row.get(*c)).and_then(Term::as_f64) {
            edge["weight"] = json!(w);
        }
        edges.push(edge);
    }
    let nodes: Vec<Value> = nodes
        .into_iter()
        .map(|(id, label)| json!({"id": id, "label": label}))
        .collect();
    (Value::Array(nodes), Value::Array(edges))
}
