#![allow(dead_code)]

pub mod brute;

use std::time::Duration;

use scholia::entity_api::{ApiConfig, EntityApiClient};
use scholia::fixture::{self, Dataset, FixtureServer};
use scholia::model::PropertyRegistry;
use scholia::resolver::AspectRules;
use scholia::service::{AppState, ServiceConfig, ServiceHandle};
use scholia::sparql::{EndpointConfig, SparqlClient};

pub fn dataset() -> Dataset {
    Dataset::load(&fixture::default_dir()).expect("fixture dataset")
}

pub async fn fixture_server() -> FixtureServer {
    let (ds, canned) = fixture::load(&fixture::default_dir()).expect("fixture loads");
    FixtureServer::start(ds, canned).await.expect("fixture server")
}

pub fn sparql_for(server: &FixtureServer) -> SparqlClient {
    let mut config = EndpointConfig::new(server.sparql_url());
    config.max_retries = 0;
    config.timeout = Duration::from_secs(10);
    SparqlClient::new(config).expect("sparql client")
}

pub fn api_for(server: &FixtureServer) -> EntityApiClient {
    let mut config = ApiConfig::new(server.api_url());
    config.wiki_api_url = Some(server.api_url());
    EntityApiClient::new(config).expect("api client")
}

pub fn state_for(server: &FixtureServer, prefix: &str) -> AppState {
    let sparql = sparql_for(server);
    let mut config = ServiceConfig::new(sparql.config());
    config.prefix = scholia::service::normalize_prefix(prefix);
    AppState::new(
        sparql,
        api_for(server),
        PropertyRegistry::default(),
        AspectRules::default(),
        config,
    )
}

/// Fixture endpoint plus a service in front of it.
pub struct Stack {
    pub fixture: FixtureServer,
    pub service: ServiceHandle,
    pub http: reqwest::Client,
}

impl Stack {
    pub async fn start() -> Stack {
        Self::start_with_prefix("").await
    }

    pub async fn start_with_prefix(prefix: &str) -> Stack {
        let fixture = fixture_server().await;
        let service = ServiceHandle::start(state_for(&fixture, prefix))
            .await
            .expect("service");
        let http = reqwest::Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .build()
            .unwrap();
        Stack {
            fixture,
            service,
            http,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.service.base_url())
    }

    pub async fn get(&self, path: &str) -> reqwest::Response {
        self.http.get(self.url(path)).send().await.expect("request")
    }

    /// Follows 302s manually; returns the statuses seen and the final path.
    pub async fn follow(&self, path: &str, max: usize) -> (Vec<u16>, String) {
        let mut statuses = Vec::new();
        let mut path = path.to_string();
        for _ in 0..=max {
            let resp = self.get(&path).await;
            statuses.push(resp.status().as_u16());
            if resp.status() != reqwest::StatusCode::FOUND {
                break;
            }
            path = resp
                .headers()
                .get("location")
                .expect("location")
                .to_str()
                .unwrap()
                .to_string();
        }
        (statuses, path)
    }
}

/// Triple file read directly, bypassing the library's dataset loader.
#[derive(Debug, Clone)]
pub struct Raw {
    pub s: String,
    pub p: String,
    pub o: String,
    pub qualifiers: serde_json::Map<String, serde_json::Value>,
    pub references: Vec<serde_json::Map<String, serde_json::Value>>,
}

pub fn raw_triples() -> Vec<Raw> {
    let text = std::fs::read_to_string(fixture::default_dir().join("triples.tsv")).unwrap();
    let mut out: Vec<Raw> = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let parse_obj = |i: usize| -> serde_json::Value {
            match cols.get(i) {
                Some(c) if !c.is_empty() => serde_json::from_str(c).unwrap(),
                _ => serde_json::Value::Null,
            }
        };
        let qualifiers = parse_obj(3).as_object().cloned().unwrap_or_default();
        let references = parse_obj(4)
            .as_array()
            .map(|a| a.iter().map(|r| r.as_object().unwrap().clone()).collect())
            .unwrap_or_default();
        out.push(Raw {
            s: cols[0].into(),
            p: cols[1].into(),
            o: cols[2].into(),
            qualifiers,
            references,
        });
    }
    out
}

impl Raw {
    pub fn year(&self) -> Option<i32> {
        let date = self.o.strip_prefix("t:")?;
        let (sign, rest) = match date.strip_prefix('-') {
            Some(r) => (-1, r),
            None => (1, date.trim_start_matches('+')),
        };
        rest.split('-').next()?.parse::<i32>().ok().map(|y| sign * y)
    }
}

/// Objects of `(s, p, *)`, in file order.
pub fn objects<'a>(raw: &'a [Raw], s: &str, p: &str) -> Vec<&'a str> {
    raw.iter().filter(|t| t.s == s && t.p == p).map(|t| t.o.as_str()).collect()
}

pub fn subjects<'a>(raw: &'a [Raw], p: &str, o: &str) -> std::collections::BTreeSet<&'a str> {
    raw.iter().filter(|t| t.p == p && t.o == o).map(|t| t.s.as_str()).collect()
}

/// The example document from the bibliography workflow.
pub const EXAMPLE_TEX: &str = "\\documentclass{article}
\\usepackage[utf8]{inputenc}
\\begin{document}
\\cite{Q18507561}
\\bibliographystyle{plain}
\\bibliography{example}
\\end{document}
";

/// What `latex example` writes to example.aux for the document above.
pub const EXAMPLE_AUX: &str = "\\relax 
\\citation{Q18507561}
\\bibstyle{plain}
\\bibdata{example}
";

pub fn have_tool(name: &str) -> bool {
    std::process::Command::new(name)
        .arg("--version")
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .is_ok_and(|s| s.success())
}

#[derive(Debug)]
pub struct BibOutcome {
    pub bib: String,
    /// Exit status of every step that ran, in order.
    pub steps: Vec<(String, i32)>,
    pub latex_ran: bool,
    pub notice: Option<String>,
    /// Contents of example.bbl when bibtex ran.
    pub bbl: Option<String>,
    pub log: Option<String>,
}

async fn step(dir: &std::path::Path, program: &str, args: &[&str], env: &[(&str, String)]) -> (String, i32) {
    let out = tokio::process::Command::new(program)
        .args(args)
        .envs(env.iter().map(|(k, v)| (*k, v.as_str())))
        .current_dir(dir)
        .stdin(std::process::Stdio::null())
        .output()
        .await
        .unwrap_or_else(|e| panic!("{program}: {e}"));
    let name = format!("{} {}", std::path::Path::new(program).file_name().unwrap().to_string_lossy(), args.join(" "));
    (name, out.status.code().unwrap_or(-1))
}

/// latex → write-bib-from-aux → bibtex → latex ×2 in `dir`. Without a TeX
/// installation the latex and bibtex steps are skipped and the aux file
/// is written as latex would.
pub async fn bib_workflow(server: &FixtureServer, dir: &std::path::Path) -> BibOutcome {
    std::fs::write(dir.join("example.tex"), EXAMPLE_TEX).unwrap();
    let latex = have_tool("latex") && have_tool("bibtex");
    let mut steps = Vec::new();
    let mut notice = None;
    let latex_args = ["-interaction=nonstopmode", "example"];
    if latex {
        steps.push(step(dir, "latex", &latex_args, &[]).await);
    } else {
        notice = Some("latex/bibtex not installed: skipped the TeX steps, grammar check still runs".into());
        std::fs::write(dir.join("example.aux"), EXAMPLE_AUX).unwrap();
    }
    let env = [
        ("SCHOLIA_API_URL", server.api_url()),
        ("SCHOLIA_WIKI_API_URL", server.api_url()),
        ("SCHOLIA_ENDPOINT", server.sparql_url()),
    ];
    steps.push(step(dir, env!("CARGO_BIN_EXE_scholia"), &["write-bib-from-aux", "example.aux"], &env).await);
    let (mut bbl, mut log) = (None, None);
    if latex {
        steps.push(step(dir, "bibtex", &["example"], &[]).await);
        steps.push(step(dir, "latex", &latex_args, &[]).await);
        steps.push(step(dir, "latex", &latex_args, &[]).await);
        bbl = std::fs::read_to_string(dir.join("example.bbl")).ok();
        log = std::fs::read_to_string(dir.join("example.log")).ok();
    }
    BibOutcome {
        bib: std::fs::read_to_string(dir.join("example.bib")).unwrap_or_default(),
        steps,
        latex_ran: latex,
        notice,
        bbl,
        log,
    }
}
