//! C ABI over the scholia engine.
//!
//! Every fallible function returns a [`ScholiaStatus`]. On failure the
//! message is available from [`scholia_last_error`] on the same thread.
//! Strings handed out through `out` parameters are owned by the caller and
//! must be released with [`scholia_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use scholia::bibgen;
use scholia::entity_api::{ApiConfig, EntityApiClient};
use scholia::model::{Aspect, EntityId, PropertyRegistry};
use scholia::query::{self, PanelQuerySpec};
use scholia::resolver::{self, AspectRules, ExternalIdKind, ResolveError};
use scholia::service::{self, AppState, PanelError, ServiceConfig};
use scholia::sparql::{EndpointConfig, SparqlClient};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScholiaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument was well-formed text but not acceptable.
    InvalidArgument = 3,
    /// The requested item, panel or identifier does not exist.
    NotFound = 4,
    /// An identifier matched several items.
    Ambiguous = 5,
    /// The endpoint or entity API failed.
    Upstream = 6,
    /// A file could not be read or written.
    Io = 7,
    /// The library panicked; the handle should not be used again.
    Panic = 8,
}

/// Opaque client handle: endpoint and entity API clients plus a runtime.
pub struct ScholiaClient {
    runtime: tokio::runtime::Runtime,
    state: AppState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ScholiaStatus, String);

type Outcome<T> = Result<T, Failure>;

fn fail<T>(status: ScholiaStatus, message: impl Into<String>) -> Outcome<T> {
    Err(Failure(status, message.into()))
}

fn set_error(message: Option<String>) {
    let message = message.map(|m| CString::new(m.replace('\0', " ")).unwrap_or_default());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
}

/// Runs `body`, recording the error message and turning panics into a status.
fn guard(body: impl FnOnce() -> Outcome<()>) -> ScholiaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(None);
            ScholiaStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(Some(message));
            status
        }
        Err(_) => {
            set_error(Some("internal panic".into()));
            ScholiaStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for the call.
unsafe fn optional_str<'a>(p: *const c_char, name: &str) -> Outcome<Option<&'a str>> {
    if p.is_null() {
        return Ok(None);
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(Some(s)),
        Err(_) => fail(ScholiaStatus::InvalidUtf8, format!("{name} is not valid UTF-8")),
    }
}

/// # Safety
/// As [`optional_str`].
unsafe fn required_str<'a>(p: *const c_char, name: &str) -> Outcome<&'a str> {
    match optional_str(p, name)? {
        Some(s) => Ok(s),
        None => fail(ScholiaStatus::NullArgument, format!("{name} is null")),
    }
}

/// # Safety
/// `out` is null or valid for one pointer write.
unsafe fn emit(out: *mut *mut c_char, text: String) -> Outcome<()> {
    if out.is_null() {
        return Ok(());
    }
    let text = CString::new(text).or_else(|_| fail(ScholiaStatus::InvalidArgument, "output contains NUL"))?;
    *out = text.into_raw();
    Ok(())
}

/// # Safety
/// `client` is null or a live handle from [`scholia_client_new`].
unsafe fn client_ref<'a>(client: *const ScholiaClient) -> Outcome<&'a ScholiaClient> {
    client
        .as_ref()
        .map_or_else(|| fail(ScholiaStatus::NullArgument, "client is null"), Ok)
}

fn item(text: &str) -> Outcome<EntityId> {
    match EntityId::parse(text) {
        Ok(id) if id.is_item() => Ok(id),
        Ok(id) => fail(ScholiaStatus::InvalidArgument, format!("{id} is not an item id")),
        Err(e) => fail(ScholiaStatus::InvalidArgument, e.to_string()),
    }
}

fn aspect(text: &str) -> Outcome<Aspect> {
    text.parse()
        .or_else(|e: scholia::model::ModelError| fail(ScholiaStatus::NotFound, e.to_string()))
}

fn resolve_failure(e: ResolveError) -> Failure {
    let status = match &e {
        ResolveError::Sparql(_) => ScholiaStatus::Upstream,
        ResolveError::NotAnItem(_) | ResolveError::EmptyValue => ScholiaStatus::InvalidArgument,
        ResolveError::NotFound { .. } => ScholiaStatus::NotFound,
        ResolveError::Ambiguous { .. } => ScholiaStatus::Ambiguous,
    };
    Failure(status, e.to_string())
}

/// Library version as a static string; never free it.
#[no_mangle]
pub extern "C" fn scholia_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn scholia_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned through an `out` parameter. Null is ignored.
///
/// # Safety
/// `s` is null or was produced by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scholia_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a client. Null URLs fall back to the `SCHOLIA_ENDPOINT` and
/// `SCHOLIA_API_URL` environment variables, then to the public services.
///
/// # Safety
/// String arguments are null or NUL-terminated; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn scholia_client_new(
    sparql_endpoint: *const c_char,
    entity_api_url: *const c_char,
    out: *mut *mut ScholiaClient,
) -> ScholiaStatus {
    guard(|| {
        if out.is_null() {
            return fail(ScholiaStatus::NullArgument, "out is null");
        }
        let endpoint_url = optional_str(sparql_endpoint, "sparql_endpoint")?;
        let api_url = optional_str(entity_api_url, "entity_api_url")?;
        let invalid = |e: &dyn std::fmt::Display| Failure(ScholiaStatus::InvalidArgument, e.to_string());
        let mut endpoint = EndpointConfig::from_env().map_err(|e| invalid(&e))?;
        if let Some(url) = endpoint_url {
            endpoint.base_url = url.to_string();
        }
        let mut api = ApiConfig::from_env();
        if let Some(url) = api_url {
            api.api_url = url.to_string();
        }
        let config = ServiceConfig::new(&endpoint);
        let sparql = SparqlClient::new(endpoint).map_err(|e| invalid(&e))?;
        let api = EntityApiClient::new(api).map_err(|e| invalid(&e))?;
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .map_err(|e| Failure(ScholiaStatus::Io, e.to_string()))?;
        let state = AppState::new(sparql, api, PropertyRegistry::default(), AspectRules::default(), config);
        *out = Box::into_raw(Box::new(ScholiaClient { runtime, state }));
        Ok(())
    })
}

/// Destroys a client. Null is ignored.
///
/// # Safety
/// `client` is null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn scholia_client_free(client: *mut ScholiaClient) {
    if !client.is_null() {
        drop(Box::from_raw(client));
    }
}

/// Writes the SPARQL text behind a panel to `out`. No network access.
/// A null `language` means English.
///
/// # Safety
/// String arguments are null or NUL-terminated; `out` is null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn scholia_build_panel_query(
    aspect_name: *const c_char,
    panel: *const c_char,
    subject: *const c_char,
    language: *const c_char,
    out: *mut *mut c_char,
) -> ScholiaStatus {
    guard(|| {
        let a = aspect(required_str(aspect_name, "aspect")?)?;
        let panel = required_str(panel, "panel")?;
        let subject = item(required_str(subject, "subject")?)?;
        let mut spec = PanelQuerySpec::new(a, panel, subject);
        if let Some(lang) = optional_str(language, "language")? {
            spec.language = lang.to_string();
        }
        let text = query::build_panel_query(&spec, &PropertyRegistry::default()).map_err(|e| {
            let status = match e {
                query::QueryError::UnknownPanel { .. } => ScholiaStatus::NotFound,
                _ => ScholiaStatus::InvalidArgument,
            };
            Failure(status, e.to_string())
        })?;
        emit(out, text.into_string())
    })
}

/// Runs a panel and writes the JSON response the HTTP API would serve.
///
/// # Safety
/// `client` is a live handle; strings are NUL-terminated; `out` is null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn scholia_client_panel_json(
    client: *const ScholiaClient,
    aspect_name: *const c_char,
    panel: *const c_char,
    subject: *const c_char,
    out: *mut *mut c_char,
) -> ScholiaStatus {
    guard(|| {
        let client = client_ref(client)?;
        let a = aspect(required_str(aspect_name, "aspect")?)?;
        let panel = required_str(panel, "panel")?;
        let subject = item(required_str(subject, "subject")?)?;
        let body = client
            .runtime
            .block_on(service::panel_response(&client.state, a, panel, subject))
            .map_err(|e| {
                let status = match e {
                    PanelError::UnknownPanel { .. } => ScholiaStatus::NotFound,
                    PanelError::Query(_) => ScholiaStatus::InvalidArgument,
                    _ => ScholiaStatus::Upstream,
                };
                Failure(status, e.to_string())
            })?;
        emit(out, body.to_string())
    })
}

/// Writes the aspect path segment an item is shown under (e.g. "author").
///
/// # Safety
/// `client` is a live handle; `subject` is NUL-terminated; `out` is null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn scholia_client_guess_aspect(
    client: *const ScholiaClient,
    subject: *const c_char,
    out: *mut *mut c_char,
) -> ScholiaStatus {
    guard(|| {
        let client = client_ref(client)?;
        let subject = item(required_str(subject, "subject")?)?;
        let state = &client.state;
        let a = client
            .runtime
            .block_on(resolver::guess_aspect(subject, state.sparql(), state.registry(), state.rules()))
            .map_err(resolve_failure)?;
        emit(out, a.segment().to_string())
    })
}

/// Resolves an external identifier (`doi`, `orcid`, `twitter`, `github`)
/// to the one item carrying it and writes its id.
///
/// # Safety
/// `client` is a live handle; strings are NUL-terminated; `out` is null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn scholia_client_resolve(
    client: *const ScholiaClient,
    kind: *const c_char,
    value: *const c_char,
    out: *mut *mut c_char,
) -> ScholiaStatus {
    guard(|| {
        let client = client_ref(client)?;
        let kind: ExternalIdKind = required_str(kind, "kind")?
            .parse()
            .or_else(|e: String| fail(ScholiaStatus::InvalidArgument, e))?;
        let value = required_str(value, "value")?;
        let state = &client.state;
        let id = client
            .runtime
            .block_on(resolver::resolve_external(kind, value, state.sparql(), state.registry()))
            .map_err(resolve_failure)?;
        emit(out, id.to_string())
    })
}

/// Writes a .bib file for the item keys cited in a LaTeX .aux file. A null
/// `bib_path` writes next to the aux file. The JSON report (written count,
/// skipped keys, per-item failures, output path) goes to `report_out`.
/// Per-item failures do not make the call fail.
///
/// # Safety
/// `client` is a live handle; paths are null or NUL-terminated; `report_out` is null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn scholia_client_write_bib(
    client: *const ScholiaClient,
    aux_path: *const c_char,
    bib_path: *const c_char,
    report_out: *mut *mut c_char,
) -> ScholiaStatus {
    guard(|| {
        let client = client_ref(client)?;
        let aux = Path::new(required_str(aux_path, "aux_path")?);
        let bib = optional_str(bib_path, "bib_path")?.map(Path::new);
        let state = &client.state;
        let report = client
            .runtime
            .block_on(bibgen::write_bib_from_aux(aux, bib, state.api(), state.registry()))
            .map_err(|e| {
                let status = match e {
                    bibgen::BibError::Io { .. } => ScholiaStatus::Io,
                    _ => ScholiaStatus::Upstream,
                };
                Failure(status, e.to_string())
            })?;
        let json = serde_json::to_string(&report).map_err(|e| Failure(ScholiaStatus::Io, e.to_string()))?;
        emit(report_out, json)
    })
}
