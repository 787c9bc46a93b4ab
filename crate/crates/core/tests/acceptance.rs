//! Acceptance criteria, one result line each. Runs without the libtest
//! harness so the lines always reach the terminal.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::future::Future;
use std::time::{Duration, Instant};

use biblatex::Bibliography;
use common::brute::{self, brute_roles};
use common::{raw_triples, subjects, Stack};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use scholia::fixture::{self, oracle, Dataset, CANNED_FILE};
use scholia::model::{Aspect, EntityId, PropertyRegistry, ResultSet};
use scholia::query::{self, catalog, PanelQuerySpec, Tier, STANDARD_PREFIXES};
use scholia::sparql::{normalize_whitespace, parse_results, EndpointConfig, SparqlClient};
use scholia::stats;

const EPS: f64 = 1e-9;

enum Outcome {
    Pass,
    Fail(String),
    Skip(String),
}

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn id(text: &str) -> EntityId {
    text.parse().unwrap()
}

/// Runs one criterion on its own task so a panic becomes a failure line.
async fn run<F>(name: &str, budget: Duration, check: F) -> bool
where
    F: Future<Output = Outcome> + Send + 'static,
{
    let start = Instant::now();
    let outcome = match tokio::spawn(check).await {
        Ok(o) => o,
        Err(e) => Outcome::Fail(format!("panicked: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let outcome = match outcome {
        Outcome::Pass if secs > budget.as_secs_f64() => {
            Outcome::Fail(format!("over budget of {}s", budget.as_secs_f64()))
        }
        o => o,
    };
    match outcome {
        Outcome::Pass => {
            println!("PASS {name} ({secs:.2}s)");
            true
        }
        Outcome::Skip(why) => {
            println!("SKIP {name}: {why}");
            true
        }
        Outcome::Fail(why) => {
            println!("FAIL {name} ({secs:.2}s): {why}");
            false
        }
    }
}

fn outcome(r: Check) -> Outcome {
    match r {
        Ok(()) => Outcome::Pass,
        Err(e) => Outcome::Fail(e),
    }
}

const COUNT_ARTICLES_LISTING: &str = "select (count(?work) as ?count) where {
  ?work wdt:P31 wd:Q13442814 . }";
const COUNT_CITATIONS_LISTING: &str = "select (count(?citedwork) as ?count) where {
  ?work wdt:P2860 ?citedwork . }";
const OPENFMRI_LISTING: &str = "?item wdt:P1325 ?resource .
filter strstarts(str(?resource),
                 \"https://openfmri.org/dataset/\")    ";
const CLAIMS_LISTING: &str = "SELECT distinct ?item ?itemLabel ?property ?propertyLabel
       ?value ?valueLabel WHERE {
  ?item ?p ?statement .
  ?property wikibase:claim ?p .
  ?statement ?a ?value .
  ?item ?b ?value .
  ?statement prov:wasDerivedFrom/
    <http://www.wikidata.org/prop/reference/P248>
    wd:Q22253877 .
  SERVICE wikibase:label {
    bd:serviceParam wikibase:language \"en\" }
} ORDER BY ?itemLabel";

async fn query_fidelity() -> Check {
    let n = |s: &str| normalize_whitespace(s);
    ensure!(
        query::build_count_scientific_articles().normalized() == n(COUNT_ARTICLES_LISTING),
        "article count query differs"
    );
    ensure!(
        query::build_count_citations().normalized() == n(COUNT_CITATIONS_LISTING),
        "citation count query differs"
    );
    let q = query::build_external_resource_query("https://openfmri.org/dataset/").map_err(|e| e.to_string())?;
    ensure!(q.normalized().contains(&n(OPENFMRI_LISTING)), "external resource query lacks the listing");
    let q = query::build_claims_supported_query(id("Q22253877")).map_err(|e| e.to_string())?;
    ensure!(q.normalized() == n(CLAIMS_LISTING), "claims query differs:\n{}", q.as_str());
    Ok(())
}

fn count(rs: &ResultSet) -> Option<i64> {
    rs.rows.first()?.get("count")?.as_integer()
}

async fn fixture_counts() -> Check {
    let dir = fixture::default_dir();
    let ds = Dataset::load(&dir).map_err(|e| e.to_string())?;
    let fresh = oracle::generate(&ds).to_json_string();
    let stored = std::fs::read_to_string(dir.join(CANNED_FILE)).map_err(|e| e.to_string())?;
    ensure!(fresh == stored, "canned answers are stale against the triple file");

    let raw = raw_triples();
    let articles = subjects(&raw, "P31", "Q13442814").len() as i64;
    let cites = raw
        .iter()
        .filter(|t| t.p == "P2860")
        .map(|t| (&t.s, &t.o))
        .collect::<BTreeSet<_>>()
        .len() as i64;
    ensure!((articles, cites) == (12, 31), "triple file holds {articles} articles, {cites} citations");

    let server = common::fixture_server().await;
    let client = common::sparql_for(&server);
    let got = client.execute(&query::build_count_scientific_articles()).await.map_err(|e| e.to_string())?;
    ensure!(count(&got) == Some(articles), "article count {:?} != {articles}", count(&got));
    let got = client.execute(&query::build_count_citations()).await.map_err(|e| e.to_string())?;
    ensure!(count(&got) == Some(cites), "citation count {:?} != {cites}", count(&got));

    let prefix = "https://openfmri.org/dataset/";
    let expected: BTreeSet<String> = raw
        .iter()
        .filter(|t| t.p == "P1325" && t.o.strip_prefix("u:").is_some_and(|u| u.starts_with(prefix)))
        .map(|t| t.s.clone())
        .collect();
    let rs = client
        .execute(&query::build_external_resource_query(prefix).map_err(|e| e.to_string())?)
        .await
        .map_err(|e| e.to_string())?;
    let got: BTreeSet<String> = rs.rows.iter().filter_map(|r| Some(r.get("item")?.as_entity()?.to_string())).collect();
    ensure!(got == expected && got.len() == 2, "openfmri items {got:?} != {expected:?}");

    let root = "Q21143764";
    let expected: BTreeSet<(String, String)> = raw
        .iter()
        .filter(|t| t.p == "P2860" && (t.s == root || t.o == root))
        .map(|t| (t.s.clone(), t.o.clone()))
        .collect();
    let rs = client
        .execute(&query::build_citation_graph_query(id(root), 1, 100).map_err(|e| e.to_string())?)
        .await
        .map_err(|e| e.to_string())?;
    let got: BTreeSet<(String, String)> = rs
        .rows
        .iter()
        .filter_map(|r| Some((r.get("citing")?.as_entity()?.to_string(), r.get("cited")?.as_entity()?.to_string())))
        .collect();
    ensure!(got == expected && got.len() == 4, "graph edges {got:?} != {expected:?}");
    Ok(())
}

async fn claims_supported() -> Check {
    let server = common::fixture_server().await;
    let client = common::sparql_for(&server);
    let rs = client
        .execute(&query::build_claims_supported_query(id("Q22253877")).map_err(|e| e.to_string())?)
        .await
        .map_err(|e| e.to_string())?;
    let got: Vec<(String, String, String)> = rs
        .rows
        .iter()
        .map(|r| {
            let e = |k: &str| r.get(k).and_then(|t| t.as_entity()).map(|e| e.to_string()).unwrap_or_default();
            (e("item"), e("property"), e("value"))
        })
        .collect();
    let want = vec![("Q7669366".to_string(), "P681".to_string(), "Q14327652".to_string())];
    ensure!(got == want, "got {got:?}");
    Ok(())
}

async fn panel(client: &SparqlClient, aspect: Aspect, name: &str, subject: &str) -> Result<ResultSet, String> {
    let q = query::build_panel_query(&PanelQuerySpec::new(aspect, name, id(subject)), &PropertyRegistry::default())
        .map_err(|e| e.to_string())?;
    Ok((*client.execute(&q).await.map_err(|e| e.to_string())?).clone())
}

fn close(got: &BTreeMap<(i32, String), f64>, want: &BTreeMap<(i32, String), f64>) -> bool {
    got.len() == want.len() && want.iter().all(|(k, v)| got.get(k).is_some_and(|g| (g - v).abs() < EPS))
}

async fn stats_oracle() -> Check {
    let raw = raw_triples();
    let server = common::fixture_server().await;
    let client = common::sparql_for(&server);

    for a in subjects(&raw, "P31", "Q5") {
        if subjects(&raw, "P50", a).is_empty() {
            continue;
        }
        let rs = panel(&client, Aspect::Author, "works-per-year-by-role", a).await?;
        let records = stats::records_from_author_rows(&rs, id(a)).map_err(|e| e.to_string())?;
        let hist = stats::papers_per_year_by_role(&records, id(a));
        let got: BTreeMap<_, _> = hist.cells.iter().map(|(&(y, r), &n)| ((y, r.key()), n)).collect();
        ensure!(got == brute_roles(&raw, a), "role histogram differs for {a}");
    }

    for org in ["Q24283660", "Q1269766", "Q90000901", "Q193196", "Q90000902"] {
        let (want, missing, undated) = brute::page_production(&raw, org);
        let rs = panel(&client, Aspect::Organization, "page-production-raw", org).await?;
        let (records, labels) = stats::records_from_page_rows(&rs).map_err(|e| e.to_string())?;
        let authors: BTreeSet<EntityId> = labels.keys().copied().collect();
        let got = stats::normalized_page_production(&records, &authors);
        let got_map = got.series.values.iter().map(|(&(y, a), &v)| ((y, a.to_string()), v)).collect();
        ensure!(
            close(&got_map, &want) && got.missing_pages == missing && got.undated == undated,
            "page production differs for {org}"
        );
        let mass: f64 = want.values().sum();
        ensure!((got.series.total() - mass).abs() < EPS, "page mass for {org}");

        let want = brute::conorm_citations(&raw, org);
        let rs = panel(&client, Aspect::Organization, "conorm-citations-raw", org).await?;
        let (rows, _) = stats::citation_rows_from(&rs).map_err(|e| e.to_string())?;
        let series = stats::coauthor_normalized_citations(&rows).map_err(|e| e.to_string())?;
        let got_map = series.values.iter().map(|(&(y, a), &v)| ((y, a.to_string()), v)).collect();
        ensure!(close(&got_map, &want), "co-author normalized citations differ for {org}");
    }

    // Whole-fixture conservation: every work credited to every author slot.
    let mut everyone = BTreeSet::new();
    let mut records = Vec::new();
    let mut page_total = 0.0;
    let mut works = BTreeSet::new();
    for t in raw.iter().filter(|t| t.p == "P50" || t.p == "P2093") {
        works.insert(t.s.as_str());
    }
    let slots = |w: &str| -> Vec<EntityId> {
        let mut out = Vec::new();
        let mut names: Vec<&str> = Vec::new();
        for t in raw.iter().filter(|t| t.s == w && (t.p == "P50" || t.p == "P2093")) {
            let e = match t.o.strip_prefix("s:") {
                Some(name) => {
                    let i = names.iter().position(|n| *n == name).unwrap_or_else(|| {
                        names.push(name);
                        names.len() - 1
                    });
                    EntityId::item(900_000_000 + i as u64).unwrap()
                }
                None => id(&t.o),
            };
            if !out.contains(&e) {
                out.push(e);
            }
        }
        out
    };
    for w in &works {
        let mut rec = scholia::model::WorkRecord::new(id(w), *w);
        rec.publication_year = brute::year(&raw, w);
        rec.pages = brute::pages(&raw, w).map(|p| p as u32);
        for a in slots(w) {
            everyone.insert(a);
            rec.authors.push(scholia::model::AuthorEntry {
                author: scholia::model::AuthorRef::Item(a),
                ordinal: None,
            });
        }
        if let (Some(p), Some(_)) = (rec.pages, rec.publication_year) {
            page_total += p as f64;
        }
        records.push(rec);
    }
    let production = stats::normalized_page_production(&records, &everyone);
    ensure!((production.series.total() - page_total).abs() < EPS, "page mass not conserved");

    let mut rows = Vec::new();
    let mut dated = 0;
    for t in raw.iter().filter(|t| t.p == "P2860") {
        let Some(y) = brute::year(&raw, &t.s) else { continue };
        dated += 1;
        let cited = slots(&t.o);
        for a in &cited {
            rows.push(stats::CitationRow {
                citing_work: id(&t.s),
                cited_work: id(&t.o),
                year: y,
                cited_author_count: cited.len() as u32,
                cited_author: *a,
            });
        }
    }
    let series = stats::coauthor_normalized_citations(&rows).map_err(|e| e.to_string())?;
    ensure!((series.total() - dated as f64).abs() < EPS, "citation mass not conserved");
    Ok(())
}

async fn redirect_chain() -> Check {
    let stack = Stack::start().await;
    let first = stack.get("/twitter/utafrith").await;
    let location = first.headers().get("location").and_then(|v| v.to_str().ok()).unwrap_or("");
    ensure!(first.status() == 302 && location == "/Q8219", "first hop {} to {location:?}", first.status());
    let (statuses, last) = stack.follow("/twitter/utafrith", 5).await;
    ensure!(statuses == [302, 302, 200], "statuses {statuses:?}");
    ensure!(last == "/author/Q8219", "ended at {last}");
    Ok(())
}

async fn bib_pipeline() -> Outcome {
    let server = common::fixture_server().await;
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let result = common::bib_workflow(&server, dir.path()).await;
    let check = || -> Check {
        for (step, code) in &result.steps {
            ensure!(*code == 0, "{step} exited {code}");
        }
        let bib = Bibliography::parse(&result.bib).map_err(|e| format!("bib rejected: {e}"))?;
        let keys: Vec<_> = bib.keys().collect();
        ensure!(keys == ["Q18507561"], "entries {keys:?}");
        if result.latex_ran {
            let bbl = result.bbl.clone().unwrap_or_default();
            ensure!(bbl.matches("\\bibitem").count() == 1, "bbl has no single citation");
            ensure!(!result.log.clone().unwrap_or_default().contains("undefined"), "citation unresolved");
        }
        Ok(())
    };
    match (check(), &result.notice) {
        (Err(e), _) => Outcome::Fail(e),
        (Ok(()), Some(notice)) => {
            println!("  notice: {notice}");
            Outcome::Pass
        }
        (Ok(()), None) => Outcome::Pass,
    }
}

fn arbitrary_json() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("null".to_string()),
        any::<i64>().prop_map(|n| n.to_string()),
        "[a-z\"{}:,\\[\\]]{0,12}".prop_map(|s| serde_json::Value::String(s).to_string()),
    ];
    let value = leaf.prop_recursive(4, 32, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(|v| format!("[{}]", v.join(","))),
            prop::collection::vec(
                (prop_oneof![Just("head"), Just("vars"), Just("results"), Just("bindings"), Just("type"),
                    Just("value"), Just("datatype"), Just("xml:lang"), Just("boolean"), Just("x")], inner),
                0..4
            )
            .prop_map(|kv| format!(
                "{{{}}}",
                kv.iter().map(|(k, v)| format!("\"{k}\":{v}")).collect::<Vec<_>>().join(",")
            )),
        ]
    });
    value
}

fn cases(n: u32) -> Config {
    Config {
        cases: n,
        failure_persistence: None,
        ..Config::default()
    }
}

async fn property_suites() -> Check {
    let mut runner = TestRunner::new(cases(10_000));
    runner
        .run(&(1u64..=u64::MAX, any::<bool>()), |(n, item)| {
            let e = if item { EntityId::item(n) } else { EntityId::property(n) }.unwrap();
            prop_assert_eq!(EntityId::parse(&e.to_string()).unwrap(), e);
            prop_assert_eq!(EntityId::from_iri(&e.iri()), Some(e));
            Ok(())
        })
        .map_err(|e| format!("entity id round trip: {e}"))?;

    let mut runner = TestRunner::new(cases(2_000));
    runner
        .run(&prop::collection::vec(any::<u8>(), 0..256), |bytes| {
            let _ = parse_results(&bytes);
            Ok(())
        })
        .map_err(|e| format!("parse_results on bytes: {e}"))?;
    runner
        .run(&arbitrary_json(), |text| {
            let _ = parse_results(text.as_bytes());
            Ok(())
        })
        .map_err(|e| format!("parse_results on json: {e}"))?;

    let ds = common::dataset();
    let reg = PropertyRegistry::default();
    let mut parsed = 0;
    for def in catalog::PANELS.iter().filter(|p| p.tier == Tier::One) {
        for subject in oracle::panel_subjects(&ds, def.aspect) {
            let q = query::build_panel_query(&PanelQuerySpec::new(def.aspect, def.name, subject), &reg)
                .map_err(|e| e.to_string())?;
            spargebra::SparqlParser::new()
                .parse_query(&format!("{STANDARD_PREFIXES}{}", q.as_str()))
                .map_err(|e| format!("{}/{} for {subject}: {e}", def.aspect, def.name))?;
            parsed += 1;
        }
    }
    ensure!(parsed > 100, "only {parsed} panel queries checked");

    let stack = Stack::start().await;
    for item in ds.items() {
        let (statuses, last) = stack.follow(&format!("/{item}"), 4).await;
        let hops = statuses.iter().filter(|&&s| s == 302).count();
        ensure!(hops <= 2 && statuses.last() != Some(&302), "/{item}: {statuses:?} ending at {last}");
    }
    Ok(())
}

async fn live_smoke() -> Outcome {
    if std::env::var_os("SCHOLIA_LIVE_SMOKE").is_none() {
        return Outcome::Skip("set SCHOLIA_LIVE_SMOKE=1 to query the public endpoint".into());
    }
    let result = async {
        let mut config = EndpointConfig::from_env().map_err(|e| e.to_string())?;
        config.timeout = Duration::from_secs(120);
        let client = SparqlClient::new(config).map_err(|e| e.to_string())?;
        let rs = client.execute(&query::build_count_scientific_articles()).await.map_err(|e| e.to_string())?;
        let n = count(&rs).ok_or("no count in response")?;
        ensure!(n >= 615_182, "count {n} below the 615182 floor");
        println!("  live count: {n}");
        Ok(())
    }
    .await;
    outcome(result)
}

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().expect("runtime");
    let secs = Duration::from_secs;
    let ok = rt.block_on(async {
        let results = [
            run("query-fidelity", secs(1), async { outcome(query_fidelity().await) }).await,
            run("fixture-counts", secs(5), async { outcome(fixture_counts().await) }).await,
            run("claims-supported", secs(5), async { outcome(claims_supported().await) }).await,
            run("stats-oracle", secs(5), async { outcome(stats_oracle().await) }).await,
            run("redirect-chain", secs(5), async { outcome(redirect_chain().await) }).await,
            run("bib-pipeline", secs(30), bib_pipeline()).await,
            run("property-suites", secs(60), async { outcome(property_suites().await) }).await,
            run("live-smoke", secs(300), live_smoke()).await,
        ];
        results.iter().all(|&r| r)
    });
    if !ok {
        std::process::exit(1);
    }
}
