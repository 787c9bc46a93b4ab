//! Command-line surface. `dispatch` is the whole program minus process
//! exit, so tests can drive it with in-memory streams.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bibgen;
use crate::entity_api::{ApiConfig, EntityApiClient};
use crate::model::{Aspect, EntityId, PropertyRegistry};
use crate::query::{self, catalog, PanelQuerySpec};
use crate::resolver::{guess_aspect, AspectRules};
use crate::service::{self, AppState, PanelError};
use crate::sparql::{EndpointConfig, SparqlClient};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "scholia", version, about = "Scholarly profiles from a Wikidata-style knowledge graph")]
struct Cli {
    /// Report errors on stderr as JSON objects.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a .bib file for the item ids cited in a LaTeX .aux file.
    WriteBibFromAux {
        aux: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run (or print) the query behind a panel.
    Query {
        aspect: String,
        panel: String,
        id: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, default_value = query::DEFAULT_LANGUAGE)]
        lang: String,
    },
    /// Print the aspect an item would be shown under.
    Aspect { id: String },
    /// Search entities by label prefix.
    Search {
        term: String,
        #[arg(long, default_value_t = 7)]
        limit: usize,
    },
    /// List the panel catalog.
    Panels,
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "SCHOLIA_BIND", default_value = service::DEFAULT_BIND)]
        bind: String,
    },
    /// Run the hermetic fixture endpoint.
    FixtureServe {
        #[arg(long, default_value = "127.0.0.1:8200")]
        bind: String,
        /// Fixture directory (triples.tsv, labels.tsv, canned.json, ...).
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    QueryOnly,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Runs one command line (`args[0]` is the program name).
pub fn dispatch(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let json_errors = args.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            return report(stderr, json_errors, &Failure::Usage(e.to_string()));
        }
    };
    let rt = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => return report(stderr, cli.json_errors, &runtime(e)),
    };
    match rt.block_on(run(cli.command, stdout, stderr)) {
        Ok(()) => EXIT_OK,
        Err(f) => report(stderr, cli.json_errors, &f),
    }
}

fn report(stderr: &mut dyn Write, json_errors: bool, failure: &Failure) -> i32 {
    let (kind, message) = match failure {
        Failure::Usage(m) => ("usage", m),
        Failure::Runtime(m) => ("runtime", m),
    };
    let _ = if json_errors {
        writeln!(
            stderr,
            "{}",
            json!({"error": {"kind": kind, "message": message.trim_end(), "exit_code": failure.code()}})
        )
    } else if kind == "usage" && message.starts_with("error:") {
        write!(stderr, "{message}")
    } else {
        writeln!(stderr, "scholia: {}", message.trim_end())
    };
    failure.code()
}

fn item(text: &str) -> Result<EntityId, Failure> {
    match EntityId::parse(text) {
        Ok(id) if id.is_item() => Ok(id),
        Ok(id) => Err(Failure::Usage(format!("{id} is not an item id"))),
        Err(e) => Err(Failure::Usage(e.to_string())),
    }
}

fn aspect(text: &str) -> Result<Aspect, Failure> {
    text.parse::<Aspect>().map_err(|e| Failure::Usage(e.to_string()))
}

fn sparql_client() -> Result<SparqlClient, Failure> {
    let config = EndpointConfig::from_env().map_err(|e| Failure::Usage(e.to_string()))?;
    SparqlClient::new(config).map_err(|e| Failure::Usage(e.to_string()))
}

fn api_client() -> Result<EntityApiClient, Failure> {
    EntityApiClient::new(ApiConfig::from_env()).map_err(|e| Failure::Usage(e.to_string()))
}

async fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let registry = PropertyRegistry::default();
    match command {
        Command::WriteBibFromAux { aux, out: bib } => {
            let client = api_client()?;
            let report = bibgen::write_bib_from_aux(&aux, bib.as_deref(), &client, &registry)
                .await
                .map_err(runtime)?;
            for key in &report.skipped {
                let _ = writeln!(err, "scholia: skipped non-item cite key {key:?}");
            }
            for failure in &report.failures {
                let _ = writeln!(err, "scholia: {}: {}", failure.id, failure.error);
            }
            let _ = writeln!(
                err,
                "scholia: wrote {} entr{} to {}",
                report.written,
                if report.written == 1 { "y" } else { "ies" },
                report.out_path.display()
            );
            Ok(())
        }
        Command::Query {
            aspect: a,
            panel,
            id,
            format,
            lang,
        } => {
            let a = aspect(&a)?;
            let id = item(&id)?;
            if catalog::find(a, &panel).is_none() {
                return Err(Failure::Usage(format!("no panel {panel:?} for aspect {a}")));
            }
            let mut spec = PanelQuerySpec::new(a, panel.as_str(), id);
            spec.language = lang.clone();
            let text = query::build_panel_query(&spec, &registry).map_err(|e| Failure::Usage(e.to_string()))?;
            match format {
                Format::QueryOnly => {
                    let _ = write!(out, "{}", text.as_str());
                    Ok(())
                }
                Format::Csv => {
                    let def = spec.definition().map_err(|e| Failure::Usage(e.to_string()))?;
                    let results = sparql_client()?.execute(&text).await.map_err(runtime)?;
                    let mut writer = csv::Writer::from_writer(out);
                    writer.write_record(def.columns).map_err(runtime)?;
                    for row in &results.rows {
                        let record: Vec<String> = def
                            .columns
                            .iter()
                            .map(|c| match service::cell(row.get(*c)) {
                                serde_json::Value::Null => String::new(),
                                serde_json::Value::String(s) => s,
                                other => other.to_string(),
                            })
                            .collect();
                        writer.write_record(&record).map_err(runtime)?;
                    }
                    writer.flush().map_err(runtime)?;
                    Ok(())
                }
                Format::Json => {
                    let state = state_from_env(&lang)?;
                    let body = service::panel_response(&state, a, &panel, id)
                        .await
                        .map_err(|e| match e {
                            e @ (PanelError::UnknownPanel { .. } | PanelError::Query(_)) => {
                                Failure::Usage(e.to_string())
                            }
                            e => runtime(e),
                        })?;
                    let text = serde_json::to_string_pretty(&body).map_err(runtime)?;
                    let _ = writeln!(out, "{text}");
                    Ok(())
                }
            }
        }
        Command::Aspect { id } => {
            let id = item(&id)?;
            let a = guess_aspect(id, &sparql_client()?, &registry, &AspectRules::default())
                .await
                .map_err(runtime)?;
            let _ = writeln!(out, "{}", a.segment());
            Ok(())
        }
        Command::Search { term, limit } => {
            if term.trim().is_empty() {
                return Err(Failure::Usage("search term is blank".into()));
            }
            if limit == 0 {
                return Err(Failure::Usage("--limit must be positive".into()));
            }
            let hits = api_client()?
                .search_entities(&term, limit, query::DEFAULT_LANGUAGE)
                .await
                .map_err(runtime)?;
            for hit in hits {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}",
                    hit.id,
                    hit.label,
                    hit.description.unwrap_or_default()
                );
            }
            Ok(())
        }
        Command::Panels => {
            for p in catalog::PANELS {
                let tier = match p.tier {
                    catalog::Tier::One => 1,
                    catalog::Tier::Two => 2,
                };
                let kind = serde_json::to_value(p.kind).map_err(runtime)?;
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    p.aspect.segment(),
                    p.name,
                    tier,
                    kind.as_str().unwrap_or_default(),
                    p.title
                );
            }
            Ok(())
        }
        Command::Serve { bind } => {
            let state = state_from_env(query::DEFAULT_LANGUAGE)?;
            let _ = writeln!(err, "scholia: serving on http://{bind}{}/", state.config().prefix);
            service::serve(state, &bind).await.map_err(runtime)
        }
        Command::FixtureServe { bind, dir } => {
            let dir = dir.unwrap_or_else(crate::fixture::default_dir);
            let (dataset, canned) = crate::fixture::load(&dir).map_err(Failure::Usage)?;
            let server = crate::fixture::FixtureServer::start_on(&bind, dataset, canned)
                .await
                .map_err(runtime)?;
            let _ = writeln!(
                err,
                "scholia: fixture endpoint at {} (entity API {})",
                server.sparql_url(),
                server.api_url()
            );
            tokio::signal::ctrl_c().await.map_err(runtime)?;
            drop(server);
            Ok(())
        }
    }
}

fn state_from_env(lang: &str) -> Result<AppState, Failure> {
    let endpoint = EndpointConfig::from_env().map_err(|e| Failure::Usage(e.to_string()))?;
    let mut config = service::ServiceConfig::from_env(&endpoint);
    config.language = lang.to_string();
    let sparql = SparqlClient::new(endpoint).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(AppState::new(
        sparql,
        api_client()?,
        PropertyRegistry::default(),
        AspectRules::default(),
        config,
    ))
}
