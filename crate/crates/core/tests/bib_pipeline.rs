mod common;

use biblatex::{Bibliography, ChunksExt};
use scholia::bibgen::{self, format_bibtex};
use scholia::fixture::oracle::panel_subjects;
use scholia::model::{Aspect, PropertyRegistry};

fn field(bib: &Bibliography, key: &str, name: &str) -> Option<String> {
    bib.get(key)?.get(name).map(|c| c.format_verbatim())
}

#[tokio::test]
async fn example_document_workflow() {
    let server = common::fixture_server().await;
    let dir = tempfile::tempdir().unwrap();
    let outcome = common::bib_workflow(&server, dir.path()).await;
    if let Some(notice) = &outcome.notice {
        eprintln!("notice: {notice}");
    }
    for (name, code) in &outcome.steps {
        assert_eq!(*code, 0, "{name}");
    }

    let bib = Bibliography::parse(&outcome.bib).expect("BibTeX grammar accepts output");
    assert_eq!(bib.keys().collect::<Vec<_>>(), ["Q18507561"]);
    assert_eq!(
        field(&bib, "Q18507561", "title").as_deref(),
        Some("Wikidata: a free collaborative knowledgebase")
    );
    assert_eq!(field(&bib, "Q18507561", "year").as_deref(), Some("2014"));
    assert_eq!(
        field(&bib, "Q18507561", "author").as_deref(),
        Some("Denny Vrandečić and Markus Krötzsch")
    );
    assert_eq!(field(&bib, "Q18507561", "journal").as_deref(), Some("Communications of the ACM"));
    assert!(outcome.bib.starts_with("@article{Q18507561,\n"));
    assert!(!outcome.bib.contains('\r'));

    if outcome.latex_ran {
        let bbl = outcome.bbl.expect("bibtex wrote example.bbl");
        assert_eq!(bbl.matches("\\bibitem").count(), 1);
        assert!(bbl.contains("\\bibitem{Q18507561}"));
        let log = outcome.log.unwrap();
        assert!(!log.contains("undefined"), "unresolved citation");
    }
}

/// Every fixture work yields an entry the grammar accepts, with escaped
/// specials and UTF-8 preserved.
#[tokio::test]
async fn corpus_entries_parse() {
    let server = common::fixture_server().await;
    let api = common::api_for(&server);
    let ds = common::dataset();
    let works: Vec<_> = panel_subjects(&ds, Aspect::Work).into_iter().filter(|w| ds.is_known(*w)).collect();
    assert!(works.len() >= 15);
    let entries = bibgen::fetch_entries(&works, &api, &PropertyRegistry::default(), "en").await;
    let mut text = String::new();
    for (id, entry) in entries {
        let entry = entry.unwrap_or_else(|e| panic!("{id}: {e}"));
        assert_eq!(entry.cite_key, id);
        text.push_str(&format_bibtex(&entry));
        text.push('\n');
    }
    let bib = Bibliography::parse(&text).expect("corpus parses");
    assert_eq!(bib.len(), works.len());

    assert!(text.contains("title = {Sentiment \\& citations in 100\\% open chemistry}"));
    assert!(text.contains("doi = {10.1007/978-3-319-70407-4\\_36}"));
    assert!(text.contains("Finn Årup Nielsen"));
    assert_eq!(field(&bib, "Q90001001", "author").as_deref(),
        Some("Finn Årup Nielsen and Daniel Mietchen and Egon Willighagen"));
    // books and preprints
    assert!(text.contains("@book{Q90001007,"));
    assert!(text.contains("@misc{Q90001003,"));
}
