//! Deterministic SPARQL generation for every query the engine issues.
//!
//! Generated text uses the prefixes the public query service predeclares
//! (`wd:`, `wdt:`, `p:`, `ps:`, `pq:`, `wikibase:`, `bd:`, `prov:`) and
//! always ends with a newline.

pub mod catalog;

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Aspect, EntityId, PropertyRegistry, Role};
use crate::sparql::QueryText;

pub use catalog::{PanelDef, PanelKind, Tier, PANELS};

pub const DEFAULT_LANGUAGE: &str = "en";
pub const DEFAULT_LIMIT: u32 = 500;
pub const MAX_GRAPH_DEPTH: u8 = 3;
/// Depth and edge cap used by the work aspect's citation graph panel.
pub const PANEL_GRAPH_DEPTH: u8 = 2;
pub const PANEL_GRAPH_CAP: u32 = 200;

/// Prefix declarations matching the public endpoint's predeclared set, for
/// tools that evaluate generated text outside that endpoint.
pub const STANDARD_PREFIXES: &str = "\
PREFIX wd: <http://www.wikidata.org/entity/>
PREFIX wdt: <http://www.wikidata.org/prop/direct/>
PREFIX p: <http://www.wikidata.org/prop/>
PREFIX ps: <http://www.wikidata.org/prop/statement/>
PREFIX pq: <http://www.wikidata.org/prop/qualifier/>
PREFIX pr: <http://www.wikidata.org/prop/reference/>
PREFIX wikibase: <http://wikiba.se/ontology#>
PREFIX bd: <http://www.bigdata.com/rdf#>
PREFIX prov: <http://www.w3.org/ns/prov#>
PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>
";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown panel {panel:?} for aspect {aspect}")]
    UnknownPanel { aspect: Aspect, panel: String },
    #[error("{0} is not an item id")]
    NotAnItem(EntityId),
    #[error("invalid language tag {0:?}")]
    InvalidLanguage(String),
    #[error("limit must be positive")]
    ZeroLimit,
    #[error("graph depth {0} outside 1..={MAX_GRAPH_DEPTH}")]
    DepthOutOfRange(u8),
    #[error("node cap must be positive")]
    ZeroNodeCap,
    #[error("malformed URL prefix {0:?}")]
    MalformedPrefix(String),
    #[error("identifier value must be non-empty")]
    EmptyValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelQuerySpec {
    pub aspect: Aspect,
    pub panel: String,
    pub subject: EntityId,
    pub language: String,
    pub limit: u32,
}

impl PanelQuerySpec {
    pub fn new(aspect: Aspect, panel: impl Into<String>, subject: EntityId) -> Self {
        PanelQuerySpec {
            aspect,
            panel: panel.into(),
            subject,
            language: DEFAULT_LANGUAGE.to_string(),
            limit: DEFAULT_LIMIT,
        }
    }

    pub fn definition(&self) -> Result<&'static PanelDef, QueryError> {
        catalog::find(self.aspect, &self.panel).ok_or_else(|| QueryError::UnknownPanel {
            aspect: self.aspect,
            panel: self.panel.clone(),
        })
    }
}

fn check_language(language: &str) -> Result<(), QueryError> {
    let ok = !language.is_empty()
        && language.len() <= 35
        && language
            .split('-')
            .all(|part| !part.is_empty() && part.bytes().all(|b| b.is_ascii_alphanumeric()));
    if ok {
        Ok(())
    } else {
        Err(QueryError::InvalidLanguage(language.to_string()))
    }
}

fn require_item(id: EntityId) -> Result<(), QueryError> {
    if id.is_item() {
        Ok(())
    } else {
        Err(QueryError::NotAnItem(id))
    }
}

/// Escapes a string for use inside a double-quoted SPARQL literal.
pub fn escape_literal(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// Token helper bound to one registry and language.
struct Vocab<'a> {
    registry: &'a PropertyRegistry,
    language: &'a str,
}

impl Vocab<'_> {
    fn pid(&self, role: Role) -> EntityId {
        self.registry.get(role)
    }
    fn wdt(&self, role: Role) -> String {
        format!("wdt:{}", self.pid(role))
    }
    fn p(&self, role: Role) -> String {
        format!("p:{}", self.pid(role))
    }
    fn ps(&self, role: Role) -> String {
        format!("ps:{}", self.pid(role))
    }
    fn pq(&self, role: Role) -> String {
        format!("pq:{}", self.pid(role))
    }
    fn label_service(&self) -> String {
        format!(
            "  SERVICE wikibase:label {{ bd:serviceParam wikibase:language \"{}\" }}\n",
            self.language
        )
    }
    /// `(employer|affiliation)/part-of*`: authors of an organization or
    /// any of its suborganizations.
    fn affiliation_path(&self) -> String {
        format!(
            "({}|{})/{}*",
            self.wdt(Role::Employer),
            self.wdt(Role::Affiliation),
            self.wdt(Role::PartOf)
        )
    }
    fn year_bind(&self, date_var: &str, year_var: &str) -> String {
        format!(
            "?work {} ?{date_var} . BIND(YEAR(?{date_var}) AS ?{year_var})",
            self.wdt(Role::PublicationDate)
        )
    }
    fn author_values(&self, work_var: &str) -> String {
        format!(
            "      {{ ?{work_var} {} ?author_value . }}\n      UNION\n      {{ ?{work_var} {} ?author_value . }}\n",
            self.wdt(Role::Author),
            self.wdt(Role::AuthorNameString)
        )
    }
}

/// Wraps an aggregating subquery with the label service and final ordering.
fn wrap_aggregate(
    vocab: &Vocab<'_>,
    projection: &str,
    inner: &str,
    order_by: &str,
    limit: Option<u32>,
) -> String {
    let mut q = String::new();
    let _ = writeln!(q, "SELECT {projection} WHERE {{");
    q.push_str("  {\n");
    q.push_str(inner);
    q.push_str("  }\n");
    q.push_str(&vocab.label_service());
    q.push_str("}\n");
    let _ = writeln!(q, "ORDER BY {order_by}");
    if let Some(limit) = limit {
        let _ = writeln!(q, "LIMIT {limit}");
    }
    q
}

/// A plain pattern query with label service.
fn simple_select(
    vocab: &Vocab<'_>,
    projection: &str,
    patterns: &str,
    order_by: &str,
    limit: Option<u32>,
) -> String {
    let mut q = String::new();
    let _ = writeln!(q, "SELECT {projection} WHERE {{");
    q.push_str(patterns);
    q.push_str(&vocab.label_service());
    q.push_str("}\n");
    let _ = writeln!(q, "ORDER BY {order_by}");
    if let Some(limit) = limit {
        let _ = writeln!(q, "LIMIT {limit}");
    }
    q
}

/// `?key (COUNT(DISTINCT ?counted) AS ?out)` grouped over `patterns`.
fn counted(
    vocab: &Vocab<'_>,
    key: &str,
    counted_var: &str,
    out: &str,
    distinct: bool,
    patterns: &str,
    limit: u32,
) -> String {
    let distinct_kw = if distinct { "DISTINCT " } else { "" };
    let inner = format!(
        "    SELECT ?{key} (COUNT({distinct_kw}?{counted_var}) AS ?{out}) WHERE {{\n{patterns}    }}\n    GROUP BY ?{key}\n"
    );
    wrap_aggregate(
        vocab,
        &format!("?{key} ?{key}Label ?{out}"),
        &inner,
        &format!("DESC(?{out}) ?{key}"),
        Some(limit),
    )
}

fn recent_works(vocab: &Vocab<'_>, patterns: &str, limit: u32) -> String {
    let mut body = patterns.to_string();
    let _ = writeln!(
        body,
        "  OPTIONAL {{ ?work {} ?date . }}",
        vocab.wdt(Role::PublicationDate)
    );
    simple_select(
        vocab,
        "DISTINCT ?work ?workLabel ?date",
        &body,
        "DESC(?date) ?work",
        Some(limit),
    )
}

pub fn build_panel_query(
    spec: &PanelQuerySpec,
    registry: &PropertyRegistry,
) -> Result<QueryText, QueryError> {
    let def = spec.definition()?;
    require_item(spec.subject)?;
    check_language(&spec.language)?;
    if spec.limit == 0 {
        return Err(QueryError::ZeroLimit);
    }
    let v = Vocab {
        registry,
        language: &spec.language,
    };
    let s = format!("wd:{}", spec.subject);
    let limit = spec.limit;
    let text = match (def.aspect, def.name) {
        (Aspect::Author, "works-raw") | (Aspect::Author, "works-per-year-by-role") => {
            let inner = format!(
                "    SELECT ?work (SAMPLE(?year_) AS ?year) (SAMPLE(?ordinal_) AS ?ordinal) (COUNT(DISTINCT ?author_value) AS ?author_count) WHERE {{\n\
                 \x20     ?work {p_author} ?author_statement .\n\
                 \x20     ?author_statement {ps_author} {s} .\n\
                 \x20     OPTIONAL {{ ?author_statement {pq_ordinal} ?ordinal_ . }}\n\
                 \x20     OPTIONAL {{ {year} }}\n\
                 {authors}\
                 \x20   }}\n\
                 \x20   GROUP BY ?work\n",
                p_author = v.p(Role::Author),
                ps_author = v.ps(Role::Author),
                pq_ordinal = v.pq(Role::SeriesOrdinal),
                year = v.year_bind("date", "year_"),
                authors = v.author_values("work"),
            );
            wrap_aggregate(
                &v,
                "?work ?workLabel ?year ?ordinal ?author_count",
                &inner,
                "DESC(?year) ?work",
                Some(limit),
            )
        }
        (Aspect::Author, "coauthors") => counted(
            &v,
            "coauthor",
            "work",
            "works",
            true,
            &format!(
                "      ?work {a} {s} .\n      ?work {a} ?coauthor .\n      FILTER (?coauthor != {s})\n",
                a = v.wdt(Role::Author)
            ),
            limit,
        ),
        (Aspect::Author, "topics") => counted(
            &v,
            "topic",
            "work",
            "works",
            true,
            &format!(
                "      ?work {} {s} .\n      ?work {} ?topic .\n",
                v.wdt(Role::Author),
                v.wdt(Role::MainTheme)
            ),
            limit,
        ),
        (Aspect::Author, "venue-stats") => counted(
            &v,
            "venue",
            "work",
            "works",
            true,
            &format!(
                "      ?work {} {s} .\n      ?work {} ?venue .\n",
                v.wdt(Role::Author),
                v.wdt(Role::PublishedIn)
            ),
            limit,
        ),
        (Aspect::Author, "education-employment-timeline") => {
            let patterns = format!(
                "  {{ {s} {p_edu} ?statement . ?statement {ps_edu} ?organization . BIND(\"education\" AS ?relation) }}\n\
                 \x20 UNION\n\
                 \x20 {{ {s} {p_emp} ?statement . ?statement {ps_emp} ?organization . BIND(\"employment\" AS ?relation) }}\n\
                 \x20 OPTIONAL {{ ?statement {start} ?start . }}\n\
                 \x20 OPTIONAL {{ ?statement {end} ?end . }}\n",
                p_edu = v.p(Role::EducatedAt),
                ps_edu = v.ps(Role::EducatedAt),
                p_emp = v.p(Role::Employer),
                ps_emp = v.ps(Role::Employer),
                start = v.pq(Role::StartTime),
                end = v.pq(Role::EndTime),
            );
            simple_select(
                &v,
                "?organization ?organizationLabel ?relation ?start ?end",
                &patterns,
                "?start ?organization",
                Some(limit),
            )
        }
        (Aspect::Author, "locations-map") => simple_select(
            &v,
            "DISTINCT ?organization ?organizationLabel ?coordinates",
            &format!(
                "  {s} ({}|{}) ?organization .\n  ?organization {} ?coordinates .\n",
                v.wdt(Role::Employer),
                v.wdt(Role::EducatedAt),
                v.wdt(Role::CoordinateLocation)
            ),
            "?organization",
            Some(limit),
        ),
        (Aspect::Author, "citations-per-year") => {
            let inner = format!(
                "    SELECT ?year (COUNT(?citing_work) AS ?citations) WHERE {{\n\
                 \x20     ?work {author} {s} .\n\
                 \x20     ?citing_work {cites} ?work .\n\
                 \x20     ?citing_work {date} ?date .\n\
                 \x20     BIND(YEAR(?date) AS ?year)\n\
                 \x20   }}\n\
                 \x20   GROUP BY ?year\n",
                author = v.wdt(Role::Author),
                cites = v.wdt(Role::Cites),
                date = v.wdt(Role::PublicationDate),
            );
            wrap_aggregate(&v, "?year ?citations", &inner, "?year", None)
        }
        (Aspect::Author, "most-cited-work") => counted(
            &v,
            "work",
            "citing_work",
            "citations",
            false,
            &format!(
                "      ?work {} {s} .\n      ?citing_work {} ?work .\n",
                v.wdt(Role::Author),
                v.wdt(Role::Cites)
            ),
            limit,
        ),
        (Aspect::Author, "citing-authors") => counted(
            &v,
            "citing_author",
            "citing_work",
            "citations",
            true,
            &format!(
                "      ?work {a} {s} .\n      ?citing_work {} ?work .\n      ?citing_work {a} ?citing_author .\n",
                v.wdt(Role::Cites),
                a = v.wdt(Role::Author)
            ),
            limit,
        ),
        (Aspect::Author, "academic-tree") => {
            let adv = v.wdt(Role::DoctoralAdvisor);
            simple_select(
                &v,
                "DISTINCT ?student ?studentLabel ?advisor ?advisorLabel",
                &format!(
                    "  {{ ?student {adv} ?advisor . ?advisor {adv}? {s} . }}\n  UNION\n  {{ {s} {adv}? ?student . ?student {adv} ?advisor . }}\n"
                ),
                "?advisor ?student",
                Some(limit),
            )
        }
        (Aspect::Work, "citations-to") => simple_select(
            &v,
            "DISTINCT ?citing_work ?citing_workLabel ?date",
            &format!(
                "  ?citing_work {} {s} .\n  OPTIONAL {{ ?citing_work {} ?date . }}\n",
                v.wdt(Role::Cites),
                v.wdt(Role::PublicationDate)
            ),
            "DESC(?date) ?citing_work",
            Some(limit),
        ),
        (Aspect::Work, "citations-in") => simple_select(
            &v,
            "DISTINCT ?cited_work ?cited_workLabel ?date",
            &format!(
                "  {s} {} ?cited_work .\n  OPTIONAL {{ ?cited_work {} ?date . }}\n",
                v.wdt(Role::Cites),
                v.wdt(Role::PublicationDate)
            ),
            "DESC(?date) ?cited_work",
            Some(limit),
        ),
        (Aspect::Work, "claims-supported") => claims_supported_text(&v, spec.subject),
        (Aspect::Work, "citation-graph") => {
            citation_graph_text(&v, spec.subject, PANEL_GRAPH_DEPTH, PANEL_GRAPH_CAP)
        }
        (Aspect::Organization, "associated-authors") => counted(
            &v,
            "author",
            "work",
            "works",
            true,
            &format!(
                "      ?author {} {s} .\n      OPTIONAL {{ ?work {} ?author . }}\n",
                v.affiliation_path(),
                v.wdt(Role::Author)
            ),
            limit,
        ),
        (Aspect::Organization, "recent-works") => recent_works(
            &v,
            &format!(
                "  ?author {} {s} .\n  ?work {} ?author .\n",
                v.affiliation_path(),
                v.wdt(Role::Author)
            ),
            limit,
        ),
        (Aspect::Organization, "coauthor-graph") => {
            let inner = format!(
                "    SELECT ?author1 ?author2 (COUNT(DISTINCT ?work) AS ?works) WHERE {{\n\
                 \x20     ?author1 {path} {s} .\n\
                 \x20     ?author2 {path} {s} .\n\
                 \x20     ?work {a} ?author1 .\n\
                 \x20     ?work {a} ?author2 .\n\
                 \x20     FILTER (STR(?author1) < STR(?author2))\n\
                 \x20   }}\n\
                 \x20   GROUP BY ?author1 ?author2\n",
                path = v.affiliation_path(),
                a = v.wdt(Role::Author),
            );
            wrap_aggregate(
                &v,
                "?author1 ?author1Label ?author2 ?author2Label ?works",
                &inner,
                "?author1 ?author2",
                Some(limit),
            )
        }
        (Aspect::Organization, "page-production-raw") => {
            let inner = format!(
                "    SELECT ?work ?author (SAMPLE(?year_) AS ?year) (SAMPLE(?pages_) AS ?pages) (COUNT(DISTINCT ?author_value) AS ?author_count) WHERE {{\n\
                 \x20     ?author {path} {s} .\n\
                 \x20     ?work {a} ?author .\n\
                 \x20     OPTIONAL {{ ?work {pages} ?pages_ . }}\n\
                 \x20     OPTIONAL {{ {year} }}\n\
                 {authors}\
                 \x20   }}\n\
                 \x20   GROUP BY ?work ?author\n",
                path = v.affiliation_path(),
                a = v.wdt(Role::Author),
                pages = v.wdt(Role::NumberOfPages),
                year = v.year_bind("date", "year_"),
                authors = v.author_values("work"),
            );
            wrap_aggregate(
                &v,
                "?work ?workLabel ?year ?pages ?author ?authorLabel ?author_count",
                &inner,
                "?work ?author",
                Some(limit),
            )
        }
        (Aspect::Organization, "conorm-citations-raw") => {
            let inner = format!(
                "    SELECT ?citing_work ?work ?author (SAMPLE(?year_) AS ?year) (COUNT(DISTINCT ?author_value) AS ?author_count) WHERE {{\n\
                 \x20     ?author {path} {s} .\n\
                 \x20     ?work {a} ?author .\n\
                 \x20     ?citing_work {cites} ?work .\n\
                 \x20     ?citing_work {date} ?citing_date .\n\
                 \x20     BIND(YEAR(?citing_date) AS ?year_)\n\
                 {authors}\
                 \x20   }}\n\
                 \x20   GROUP BY ?citing_work ?work ?author\n",
                path = v.affiliation_path(),
                a = v.wdt(Role::Author),
                cites = v.wdt(Role::Cites),
                date = v.wdt(Role::PublicationDate),
                authors = v.author_values("work"),
            );
            wrap_aggregate(
                &v,
                "?citing_work ?year ?work ?author ?authorLabel ?author_count",
                &inner,
                "?year ?work ?citing_work ?author",
                Some(limit),
            )
        }
        (Aspect::Organization, "most-cited-affiliated") => {
            let inner = format!(
                "    SELECT ?work ?author (COUNT(DISTINCT ?citing_work) AS ?citations) WHERE {{\n\
                 \x20     ?author {path} {s} .\n\
                 \x20     ?work {p_author} ?author_statement .\n\
                 \x20     ?author_statement {ps_author} ?author .\n\
                 \x20     ?author_statement {pq_ordinal} \"1\" .\n\
                 \x20     ?citing_work {cites} ?work .\n\
                 \x20   }}\n\
                 \x20   GROUP BY ?work ?author\n",
                path = v.affiliation_path(),
                p_author = v.p(Role::Author),
                ps_author = v.ps(Role::Author),
                pq_ordinal = v.pq(Role::SeriesOrdinal),
                cites = v.wdt(Role::Cites),
            );
            wrap_aggregate(
                &v,
                "?work ?workLabel ?author ?authorLabel ?citations",
                &inner,
                "DESC(?citations) ?work",
                Some(limit),
            )
        }
        (Aspect::Venue, "recent-works") => recent_works(
            &v,
            &format!("  ?work {} {s} .\n", v.wdt(Role::PublishedIn)),
            limit,
        ),
        (Aspect::Venue, "topics") => counted(
            &v,
            "topic",
            "work",
            "works",
            true,
            &format!(
                "      ?work {} {s} .\n      ?work {} ?topic .\n",
                v.wdt(Role::PublishedIn),
                v.wdt(Role::MainTheme)
            ),
            limit,
        ),
        (Aspect::Venue, "author-images") => simple_select(
            &v,
            "DISTINCT ?author ?authorLabel ?image",
            &format!(
                "  ?work {} {s} .\n  ?work {} ?author .\n  ?author {} ?image .\n",
                v.wdt(Role::PublishedIn),
                v.wdt(Role::Author),
                v.wdt(Role::Image)
            ),
            "?author",
            Some(limit),
        ),
        (Aspect::Venue, "prolific-authors") => counted(
            &v,
            "author",
            "work",
            "works",
            true,
            &format!(
                "      ?work {} {s} .\n      ?work {} ?author .\n",
                v.wdt(Role::PublishedIn),
                v.wdt(Role::Author)
            ),
            limit,
        ),
        (Aspect::Venue, "most-cited-works") => counted(
            &v,
            "work",
            "citing_work",
            "citations",
            false,
            &format!(
                "      ?work {} {s} .\n      ?citing_work {} ?work .\n",
                v.wdt(Role::PublishedIn),
                v.wdt(Role::Cites)
            ),
            limit,
        ),
        (Aspect::Venue, "most-cited-authors") => counted(
            &v,
            "author",
            "citing_work",
            "citations",
            false,
            &format!(
                "      ?work {} {s} .\n      ?work {} ?author .\n      ?citing_work {} ?work .\n",
                v.wdt(Role::PublishedIn),
                v.wdt(Role::Author),
                v.wdt(Role::Cites)
            ),
            limit,
        ),
        (Aspect::Venue, "most-cited-venues") => counted(
            &v,
            "cited_venue",
            "cited_work",
            "citations",
            false,
            &format!(
                "      ?citing_work {pub_in} {s} .\n      ?citing_work {} ?cited_work .\n      ?cited_work {pub_in} ?cited_venue .\n",
                v.wdt(Role::Cites),
                pub_in = v.wdt(Role::PublishedIn)
            ),
            limit,
        ),
        (Aspect::Series, "items-in-series") => counted(
            &v,
            "venue",
            "work",
            "works",
            true,
            &format!(
                "      ?venue {} {s} .\n      OPTIONAL {{ ?work {} ?venue . }}\n",
                v.wdt(Role::Series),
                v.wdt(Role::PublishedIn)
            ),
            limit,
        ),
        (Aspect::Series, "works-from-series-venues") => simple_select(
            &v,
            "DISTINCT ?work ?workLabel ?venue ?venueLabel ?date",
            &format!(
                "  ?venue {} {s} .\n  ?work {} ?venue .\n  OPTIONAL {{ ?work {} ?date . }}\n",
                v.wdt(Role::Series),
                v.wdt(Role::PublishedIn),
                v.wdt(Role::PublicationDate)
            ),
            "DESC(?date) ?work",
            Some(limit),
        ),
        (Aspect::Publisher, "venues-by-works") => counted(
            &v,
            "venue",
            "work",
            "works",
            true,
            &format!(
                "      ?venue {} {s} .\n      OPTIONAL {{ ?work {} ?venue . }}\n",
                v.wdt(Role::Publisher),
                v.wdt(Role::PublishedIn)
            ),
            limit,
        ),
        (Aspect::Publisher, "most-cited-papers") => counted(
            &v,
            "work",
            "citing_work",
            "citations",
            false,
            &format!(
                "      ?venue {} {s} .\n      ?work {} ?venue .\n      ?citing_work {} ?work .\n",
                v.wdt(Role::Publisher),
                v.wdt(Role::PublishedIn),
                v.wdt(Role::Cites)
            ),
            limit,
        ),
        (Aspect::Publisher, "editors") => simple_select(
            &v,
            "DISTINCT ?editor ?editorLabel ?venue ?venueLabel",
            &format!(
                "  ?venue {} {s} .\n  ?venue {} ?editor .\n",
                v.wdt(Role::Publisher),
                v.wdt(Role::Editor)
            ),
            "?venue ?editor",
            Some(limit),
        ),
        (Aspect::Publisher, "works-vs-citations-scatter") => {
            let inner = format!(
                "    SELECT ?venue (COUNT(DISTINCT ?work) AS ?works) (COUNT(?citing_work) AS ?citations) WHERE {{\n\
                 \x20     ?venue {publisher} {s} .\n\
                 \x20     ?work {published_in} ?venue .\n\
                 \x20     OPTIONAL {{ ?citing_work {cites} ?work . }}\n\
                 \x20   }}\n\
                 \x20   GROUP BY ?venue\n",
                publisher = v.wdt(Role::Publisher),
                published_in = v.wdt(Role::PublishedIn),
                cites = v.wdt(Role::Cites),
            );
            wrap_aggregate(
                &v,
                "?venue ?venueLabel ?works ?citations",
                &inner,
                "DESC(?works) ?venue",
                Some(limit),
            )
        }
        (Aspect::Sponsor, "funded-works") => recent_works(
            &v,
            &format!("  ?work {} {s} .\n", v.wdt(Role::Sponsor)),
            limit,
        ),
        (Aspect::Sponsor, "sponsored-authors") => counted(
            &v,
            "author",
            "work",
            "works",
            true,
            &format!(
                "      ?work {} {s} .\n      ?work {} ?author .\n",
                v.wdt(Role::Sponsor),
                v.wdt(Role::Author)
            ),
            limit,
        ),
        (Aspect::Sponsor, "co-sponsors") => counted(
            &v,
            "sponsor",
            "work",
            "works",
            true,
            &format!(
                "      ?work {sp} {s} .\n      ?work {sp} ?sponsor .\n      FILTER (?sponsor != {s})\n",
                sp = v.wdt(Role::Sponsor)
            ),
            limit,
        ),
        (Aspect::Topic, "recent-works") => recent_works(
            &v,
            &format!(
                "  ?work {}/{}* {s} .\n",
                v.wdt(Role::MainTheme),
                v.wdt(Role::SubclassOf)
            ),
            limit,
        ),
        (Aspect::Topic, "co-occurring-topics") => counted(
            &v,
            "topic",
            "work",
            "works",
            true,
            &format!(
                "      ?work {theme}/{}* {s} .\n      ?work {theme} ?topic .\n      FILTER (?topic != {s})\n",
                v.wdt(Role::SubclassOf),
                theme = v.wdt(Role::MainTheme)
            ),
            limit,
        ),
        (aspect, name) => unreachable!("catalog panel {aspect}/{name} has no builder"),
    };
    Ok(QueryText::new(text))
}

/// Number of works typed as scientific article.
pub fn build_count_scientific_articles() -> QueryText {
    build_count_scientific_articles_with(&PropertyRegistry::default())
}

pub fn build_count_scientific_articles_with(registry: &PropertyRegistry) -> QueryText {
    QueryText::new(format!(
        "select (count(?work) as ?count) where {{\n  ?work wdt:{} wd:{} . }}\n",
        registry.get(Role::InstanceOf),
        crate::model::classes::scientific_article()
    ))
}

/// Number of citation links.
pub fn build_count_citations() -> QueryText {
    build_count_citations_with(&PropertyRegistry::default())
}

pub fn build_count_citations_with(registry: &PropertyRegistry) -> QueryText {
    QueryText::new(format!(
        "select (count(?citedwork) as ?count) where {{\n  ?work wdt:{} ?citedwork . }}\n",
        registry.get(Role::Cites)
    ))
}

/// Items whose external-data URL starts with `url_prefix`.
pub fn build_external_resource_query(url_prefix: &str) -> Result<QueryText, QueryError> {
    build_external_resource_query_with(url_prefix, &PropertyRegistry::default())
}

pub fn build_external_resource_query_with(
    url_prefix: &str,
    registry: &PropertyRegistry,
) -> Result<QueryText, QueryError> {
    let malformed = || QueryError::MalformedPrefix(url_prefix.to_string());
    let parsed = url::Url::parse(url_prefix).map_err(|_| malformed())?;
    if parsed.cannot_be_a_base() || !matches!(parsed.scheme(), "http" | "https" | "ftp") {
        return Err(malformed());
    }
    if url_prefix.chars().any(|c| c.is_whitespace() || c == '"' || c == '\\') {
        return Err(malformed());
    }
    let v = Vocab {
        registry,
        language: DEFAULT_LANGUAGE,
    };
    let patterns = format!(
        "?item {} ?resource .\nfilter strstarts(str(?resource),\n                 \"{url_prefix}\")\n",
        v.wdt(Role::ExternalDataUrl)
    );
    Ok(QueryText::new(simple_select(
        &v,
        "?item ?itemLabel ?resource",
        &patterns,
        "?item ?resource",
        None,
    )))
}

fn claims_supported_text(v: &Vocab<'_>, work: EntityId) -> String {
    format!(
        "SELECT distinct ?item ?itemLabel ?property ?propertyLabel\n\
         \x20      ?value ?valueLabel WHERE {{\n\
         \x20 ?item ?p ?statement .\n\
         \x20 ?property wikibase:claim ?p . \n\
         \x20 ?statement ?a ?value .\n\
         \x20 ?item ?b ?value . \n\
         \x20 ?statement prov:wasDerivedFrom/\n\
         \x20   <http://www.wikidata.org/prop/reference/{stated_in}>\n\
         \x20   wd:{work} .\n\
         \x20 SERVICE wikibase:label {{\n\
         \x20   bd:serviceParam wikibase:language \"{lang}\" }}\n\
         }} ORDER BY ?itemLabel\n",
        stated_in = v.pid(Role::StatedIn),
        lang = v.language,
    )
}

/// Statements whose references cite `work` via stated-in.
pub fn build_claims_supported_query(work: EntityId) -> Result<QueryText, QueryError> {
    build_claims_supported_query_with(work, &PropertyRegistry::default(), DEFAULT_LANGUAGE)
}

pub fn build_claims_supported_query_with(
    work: EntityId,
    registry: &PropertyRegistry,
    language: &str,
) -> Result<QueryText, QueryError> {
    require_item(work)?;
    check_language(language)?;
    let v = Vocab { registry, language };
    Ok(QueryText::new(claims_supported_text(&v, work)))
}

/// One undirected cites hop.
fn cites_step(v: &Vocab<'_>) -> String {
    let cites = v.wdt(Role::Cites);
    format!("({cites}|^{cites})")
}

fn citation_graph_text(v: &Vocab<'_>, work: EntityId, depth: u8, node_cap: u32) -> String {
    let cites = v.wdt(Role::Cites);
    let w = format!("wd:{work}");
    let mut q = String::new();
    q.push_str("SELECT DISTINCT ?citing ?citingLabel ?cited ?citedLabel WHERE {\n");
    // ?node ranges over works within depth-1 undirected hops of the root
    q.push_str("  {\n");
    let _ = writeln!(q, "    {{ BIND({w} AS ?node) }}");
    for hops in 1..depth {
        let path = vec![cites_step(v); hops as usize].join("/");
        q.push_str("    UNION\n");
        let _ = writeln!(q, "    {{ {w} {path} ?node . }}");
    }
    q.push_str("  }\n");
    let _ = writeln!(
        q,
        "  {{ ?node {cites} ?cited . BIND(?node AS ?citing) }}\n  UNION\n  {{ ?citing {cites} ?node . BIND(?node AS ?cited) }}"
    );
    q.push_str(&v.label_service());
    q.push_str("}\n");
    q.push_str("ORDER BY ?citing ?cited\n");
    let _ = writeln!(q, "LIMIT {node_cap}");
    q
}

/// Citation edges within `depth` undirected hops of `work`, capped at
/// `node_cap` edges.
pub fn build_citation_graph_query(
    work: EntityId,
    depth: u8,
    node_cap: u32,
) -> Result<QueryText, QueryError> {
    build_citation_graph_query_with(
        work,
        depth,
        node_cap,
        &PropertyRegistry::default(),
        DEFAULT_LANGUAGE,
    )
}

pub fn build_citation_graph_query_with(
    work: EntityId,
    depth: u8,
    node_cap: u32,
    registry: &PropertyRegistry,
    language: &str,
) -> Result<QueryText, QueryError> {
    require_item(work)?;
    check_language(language)?;
    if !(1..=MAX_GRAPH_DEPTH).contains(&depth) {
        return Err(QueryError::DepthOutOfRange(depth));
    }
    if node_cap == 0 {
        return Err(QueryError::ZeroNodeCap);
    }
    let v = Vocab { registry, language };
    Ok(QueryText::new(citation_graph_text(&v, work, depth, node_cap)))
}

/// Instance-of classes of `subject`, used for aspect guessing.
pub fn build_instance_of_query(
    subject: EntityId,
    registry: &PropertyRegistry,
) -> Result<QueryText, QueryError> {
    require_item(subject)?;
    Ok(QueryText::new(format!(
        "SELECT ?class WHERE {{\n  wd:{subject} wdt:{} ?class .\n}}\nORDER BY ?class\n",
        registry.get(Role::InstanceOf)
    )))
}

/// Items carrying exactly `value` for the identifier property `property`.
pub fn build_identifier_lookup_query(
    property: EntityId,
    value: &str,
) -> Result<QueryText, QueryError> {
    if value.is_empty() {
        return Err(QueryError::EmptyValue);
    }
    Ok(QueryText::new(format!(
        "SELECT ?item WHERE {{\n  ?item wdt:{property} \"{}\" .\n}}\nORDER BY ?item\n",
        escape_literal(value)
    )))
}
