use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use scholia::fixture::{self, FixtureServer};
use scholia::model::{Aspect, PropertyRegistry};
use scholia::query::{self, PanelQuerySpec};
use scholia_ffi::*;
use serde_json::Value;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// Takes ownership of a library string.
fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { scholia_string_free(p) };
    s
}

fn last_error() -> Option<String> {
    let p = scholia_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

/// A fixture endpoint on its own runtime, plus a client pointed at it.
struct Harness {
    _rt: tokio::runtime::Runtime,
    server: FixtureServer,
    client: *mut ScholiaClient,
}

impl Harness {
    fn start() -> Harness {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
        let server = rt.block_on(async {
            let (ds, canned) = fixture::load(&fixture::default_dir()).unwrap();
            FixtureServer::start(ds, canned).await.unwrap()
        });
        let (endpoint, api) = (c(&server.sparql_url()), c(&server.api_url()));
        let mut client = ptr::null_mut();
        let status = unsafe { scholia_client_new(endpoint.as_ptr(), api.as_ptr(), &mut client) };
        assert_eq!(status, ScholiaStatus::Ok, "{:?}", last_error());
        Harness { _rt: rt, server, client }
    }

    fn call(&self, f: impl FnOnce(*const ScholiaClient, *mut *mut c_char) -> ScholiaStatus) -> Result<String, (ScholiaStatus, String)> {
        let mut out = ptr::null_mut();
        match f(self.client, &mut out) {
            ScholiaStatus::Ok => Ok(take(out)),
            status => {
                assert!(out.is_null());
                Err((status, last_error().expect("error message set")))
            }
        }
    }
}

impl Drop for Harness {
    fn drop(&mut self) {
        unsafe { scholia_client_free(self.client) };
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(scholia_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn panel_query_matches_core_builder() {
    let (a, p, s, lang) = (c("author"), c("works-raw"), c("Q20980928"), c("de"));
    let mut out = ptr::null_mut();
    let status = unsafe { scholia_build_panel_query(a.as_ptr(), p.as_ptr(), s.as_ptr(), lang.as_ptr(), &mut out) };
    assert_eq!(status, ScholiaStatus::Ok);
    assert!(last_error().is_none());
    let mut spec = PanelQuerySpec::new(Aspect::Author, "works-raw", "Q20980928".parse().unwrap());
    spec.language = "de".into();
    let expected = query::build_panel_query(&spec, &PropertyRegistry::default()).unwrap();
    assert_eq!(take(out), expected.as_str());

    // null language means English
    let status = unsafe { scholia_build_panel_query(a.as_ptr(), p.as_ptr(), s.as_ptr(), ptr::null(), &mut out) };
    assert_eq!(status, ScholiaStatus::Ok);
    assert!(take(out).contains("wikibase:language \"en\""));
}

#[test]
fn argument_errors_map_to_status_codes() {
    let mut out = ptr::null_mut();
    let call = |a: &CString, p: &CString, s: &CString, out: &mut *mut c_char| unsafe {
        scholia_build_panel_query(a.as_ptr(), p.as_ptr(), s.as_ptr(), ptr::null(), out)
    };
    let (author, works, q) = (c("author"), c("works-raw"), c("Q1"));
    assert_eq!(call(&author, &works, &c("P31"), &mut out), ScholiaStatus::InvalidArgument);
    assert_eq!(call(&author, &works, &c("X1"), &mut out), ScholiaStatus::InvalidArgument);
    assert_eq!(call(&author, &c("nope"), &q, &mut out), ScholiaStatus::NotFound);
    assert_eq!(call(&c("nope"), &works, &q, &mut out), ScholiaStatus::NotFound);
    assert!(out.is_null());
    assert!(last_error().unwrap().contains("nope"));

    let status = unsafe { scholia_build_panel_query(ptr::null(), works.as_ptr(), q.as_ptr(), ptr::null(), &mut out) };
    assert_eq!(status, ScholiaStatus::NullArgument);
    let bad = [0xffu8, 0xfe, 0];
    let status = unsafe { scholia_build_panel_query(bad.as_ptr().cast(), works.as_ptr(), q.as_ptr(), ptr::null(), &mut out) };
    assert_eq!(status, ScholiaStatus::InvalidUtf8);

    let client: *mut ScholiaClient = ptr::null_mut();
    assert_eq!(unsafe { scholia_client_new(ptr::null(), ptr::null(), ptr::null_mut()) }, ScholiaStatus::NullArgument);
    let mut out = ptr::null_mut();
    let status = unsafe { scholia_client_guess_aspect(client, q.as_ptr(), &mut out) };
    assert_eq!(status, ScholiaStatus::NullArgument);
    // freeing null is a no-op
    unsafe {
        scholia_client_free(client);
        scholia_string_free(ptr::null_mut());
    }
}

#[test]
fn client_runs_panels_and_resolves() {
    let h = Harness::start();
    let (a, p, s) = (c("author"), c("works-per-year-by-role"), c("Q20980928"));
    let body = h
        .call(|cl, out| unsafe { scholia_client_panel_json(cl, a.as_ptr(), p.as_ptr(), s.as_ptr(), out) })
        .unwrap();
    let body: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(body["subject"], "Q20980928");
    let total: u64 = body["series"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["points"].as_array().unwrap())
        .map(|p| p["count"].as_u64().unwrap())
        .sum();
    assert_eq!(total, 8);

    let uncanned = c("Q424242");
    let err = h
        .call(|cl, out| unsafe { scholia_client_panel_json(cl, a.as_ptr(), p.as_ptr(), uncanned.as_ptr(), out) })
        .unwrap_err();
    assert_eq!(err.0, ScholiaStatus::Upstream);

    let uta = c("Q8219");
    let aspect = h.call(|cl, out| unsafe { scholia_client_guess_aspect(cl, uta.as_ptr(), out) });
    assert_eq!(aspect.unwrap(), "author");

    let resolve = |kind: &str, value: &str| {
        let (k, v) = (c(kind), c(value));
        h.call(|cl, out| unsafe { scholia_client_resolve(cl, k.as_ptr(), v.as_ptr(), out) })
    };
    assert_eq!(resolve("twitter", "utafrith").unwrap(), "Q8219");
    assert_eq!(resolve("doi", "10.1145/2629489").unwrap(), "Q18507561");
    assert_eq!(resolve("doi", "10.NOPE").unwrap_err().0, ScholiaStatus::NotFound);
    assert_eq!(resolve("orcid", "0000-0002-0000-0001").unwrap_err().0, ScholiaStatus::Ambiguous);
    assert_eq!(resolve("fax", "1").unwrap_err().0, ScholiaStatus::InvalidArgument);
    assert_eq!(resolve("twitter", " ").unwrap_err().0, ScholiaStatus::InvalidArgument);
    assert!(h.server.request_count("/sparql") > 0);
}

#[test]
fn client_writes_bib() {
    let h = Harness::start();
    let dir = tempfile::tempdir().unwrap();
    let aux = dir.path().join("paper.aux");
    std::fs::write(&aux, "\\citation{Q18507561}\n\\citation{Q999999999}\n\\citation{smith2020}\n").unwrap();
    let aux_c = c(aux.to_str().unwrap());
    let report = h
        .call(|cl, out| unsafe { scholia_client_write_bib(cl, aux_c.as_ptr(), ptr::null(), out) })
        .unwrap();
    let report: Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["written"], 1);
    assert_eq!(report["skipped"], serde_json::json!(["smith2020"]));
    assert_eq!(report["failures"][0]["id"], "Q999999999");
    let bib = std::fs::read_to_string(dir.path().join("paper.bib")).unwrap();
    assert!(bib.starts_with("@article{Q18507561,"));

    let missing = c(dir.path().join("absent.aux").to_str().unwrap());
    let err = h
        .call(|cl, out| unsafe { scholia_client_write_bib(cl, missing.as_ptr(), ptr::null(), out) })
        .unwrap_err();
    assert_eq!(err.0, ScholiaStatus::Io);
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "scholia.h"

int main(void) {
    char *query = NULL;
    ScholiaStatus st = scholia_build_panel_query("work", "claims-supported", "Q22253877", NULL, &query);
    if (st != SCHOLIA_STATUS_OK || strstr(query, "wd:Q22253877") == NULL) return 1;
    scholia_string_free(query);
    st = scholia_build_panel_query("work", "claims-supported", "nope", NULL, &query);
    if (st != SCHOLIA_STATUS_INVALID_ARGUMENT || scholia_last_error() == NULL) return 2;
    ScholiaClient *client = NULL;
    if (scholia_client_new("http://127.0.0.1:9/sparql", NULL, &client) != SCHOLIA_STATUS_OK) return 3;
    scholia_client_free(client);
    printf("%s\n", scholia_version());
    return 0;
}
"#;

fn have_cc() -> bool {
    std::process::Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

/// The generated header compiles and links against the static library.
#[test]
fn c_program_links_against_header() {
    if !have_cc() {
        eprintln!("notice: no C compiler, header link check skipped");
        return;
    }
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("libscholia_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile or link failed");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
