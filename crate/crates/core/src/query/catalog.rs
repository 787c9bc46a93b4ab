//! The panel registry: which panels each aspect shows, how they render,
//! and the JSON schema of their API responses.

use serde::Serialize;
use serde_json::{json, Value};

use crate::model::Aspect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    /// Backed by the fixture oracle and fully tested.
    #[serde(rename = "1")]
    One,
    /// Named but only loosely specified; query is generated, no oracle.
    #[serde(rename = "2")]
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PanelKind {
    Table,
    /// Stacked per-year bars, one series per author role.
    RoleBars,
    /// Stacked per-year bars, one series per author.
    AuthorBars,
    Scatter,
    Graph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PanelDef {
    pub aspect: Aspect,
    pub name: &'static str,
    pub tier: Tier,
    pub kind: PanelKind,
    /// Projection of the generated query, in order.
    pub columns: &'static [&'static str],
    pub title: &'static str,
}

macro_rules! panel {
    ($aspect:ident, $name:literal, $tier:ident, $kind:ident, [$($col:literal),*], $title:literal) => {
        PanelDef {
            aspect: Aspect::$aspect,
            name: $name,
            tier: Tier::$tier,
            kind: PanelKind::$kind,
            columns: &[$($col),*],
            title: $title,
        }
    };
}

const WORKS_RAW: &[&str] = &["work", "workLabel", "year", "ordinal", "author_count"];
const PAGE_RAW: &[&str] = &[
    "work",
    "workLabel",
    "year",
    "pages",
    "author",
    "authorLabel",
    "author_count",
];
const CONORM_RAW: &[&str] = &[
    "citing_work",
    "year",
    "work",
    "author",
    "authorLabel",
    "author_count",
];

pub static PANELS: &[PanelDef] = &[
    PanelDef { aspect: Aspect::Author, name: "works-raw", tier: Tier::One, kind: PanelKind::Table, columns: WORKS_RAW, title: "List of publications" },
    PanelDef { aspect: Aspect::Author, name: "works-per-year-by-role", tier: Tier::One, kind: PanelKind::RoleBars, columns: WORKS_RAW, title: "Publications per year by author role" },
    panel!(Author, "coauthors", One, Table, ["coauthor", "coauthorLabel", "works"], "Co-authors"),
    panel!(Author, "topics", One, Table, ["topic", "topicLabel", "works"], "Topics"),
    panel!(Author, "venue-stats", One, Table, ["venue", "venueLabel", "works"], "Venues"),
    panel!(Author, "education-employment-timeline", Two, Table, ["organization", "organizationLabel", "relation", "start", "end"], "Education and employment"),
    panel!(Author, "locations-map", Two, Table, ["organization", "organizationLabel", "coordinates"], "Associated locations"),
    panel!(Author, "citations-per-year", One, Table, ["year", "citations"], "Citations per year"),
    panel!(Author, "most-cited-work", One, Table, ["work", "workLabel", "citations"], "Most cited works"),
    panel!(Author, "citing-authors", One, Table, ["citing_author", "citing_authorLabel", "citations"], "Citing authors"),
    panel!(Author, "academic-tree", Two, Graph, ["student", "studentLabel", "advisor", "advisorLabel"], "Academic tree"),
    panel!(Work, "citations-to", One, Table, ["citing_work", "citing_workLabel", "date"], "Citing works"),
    panel!(Work, "citations-in", One, Table, ["cited_work", "cited_workLabel", "date"], "Works cited"),
    panel!(Work, "claims-supported", One, Table, ["item", "itemLabel", "property", "propertyLabel", "value", "valueLabel"], "Statements supported by the work"),
    panel!(Work, "citation-graph", One, Graph, ["citing", "citingLabel", "cited", "citedLabel"], "Citation graph"),
    panel!(Organization, "associated-authors", One, Table, ["author", "authorLabel", "works"], "Affiliated authors"),
    panel!(Organization, "recent-works", One, Table, ["work", "workLabel", "date"], "Recent publications"),
    panel!(Organization, "coauthor-graph", One, Graph, ["author1", "author1Label", "author2", "author2Label", "works"], "Co-author graph"),
    PanelDef { aspect: Aspect::Organization, name: "page-production-raw", tier: Tier::One, kind: PanelKind::AuthorBars, columns: PAGE_RAW, title: "Author-normalized page production" },
    PanelDef { aspect: Aspect::Organization, name: "conorm-citations-raw", tier: Tier::One, kind: PanelKind::AuthorBars, columns: CONORM_RAW, title: "Co-author-normalized citations per year" },
    panel!(Organization, "most-cited-affiliated", One, Table, ["work", "workLabel", "author", "authorLabel", "citations"], "Most cited works with affiliated first author"),
    panel!(Venue, "recent-works", One, Table, ["work", "workLabel", "date"], "Recent publications"),
    panel!(Venue, "topics", One, Table, ["topic", "topicLabel", "works"], "Topics"),
    panel!(Venue, "author-images", Two, Table, ["author", "authorLabel", "image"], "Author images"),
    panel!(Venue, "prolific-authors", One, Table, ["author", "authorLabel", "works"], "Prolific authors"),
    panel!(Venue, "most-cited-works", One, Table, ["work", "workLabel", "citations"], "Most cited works"),
    panel!(Venue, "most-cited-authors", One, Table, ["author", "authorLabel", "citations"], "Most cited authors"),
    panel!(Venue, "most-cited-venues", One, Table, ["cited_venue", "cited_venueLabel", "citations"], "Most cited venues"),
    panel!(Series, "items-in-series", One, Table, ["venue", "venueLabel", "works"], "Venues in the series"),
    panel!(Series, "works-from-series-venues", One, Table, ["work", "workLabel", "venue", "venueLabel", "date"], "Works from venues in the series"),
    panel!(Publisher, "venues-by-works", One, Table, ["venue", "venueLabel", "works"], "Venues by number of works"),
    panel!(Publisher, "most-cited-papers", One, Table, ["work", "workLabel", "citations"], "Most cited papers"),
    panel!(Publisher, "editors", Two, Table, ["editor", "editorLabel", "venue", "venueLabel"], "Associated editors"),
    panel!(Publisher, "works-vs-citations-scatter", One, Scatter, ["venue", "venueLabel", "works", "citations"], "Citations versus published works"),
    panel!(Sponsor, "funded-works", One, Table, ["work", "workLabel", "date"], "Funded works"),
    panel!(Sponsor, "sponsored-authors", One, Table, ["author", "authorLabel", "works"], "Sponsored authors"),
    panel!(Sponsor, "co-sponsors", One, Table, ["sponsor", "sponsorLabel", "works"], "Co-sponsors"),
    panel!(Topic, "recent-works", One, Table, ["work", "workLabel", "date"], "Recent publications on the topic"),
    panel!(Topic, "co-occurring-topics", One, Table, ["topic", "topicLabel", "works"], "Co-occurring topics"),
];

pub fn find(aspect: Aspect, name: &str) -> Option<&'static PanelDef> {
    PANELS.iter().find(|p| p.aspect == aspect && p.name == name)
}

pub fn panels_for(aspect: Aspect) -> impl Iterator<Item = &'static PanelDef> {
    PANELS.iter().filter(move |p| p.aspect == aspect)
}

fn cell_schema() -> Value {
    json!({"type": ["string", "number", "null"]})
}

fn year_points(value_key: &str) -> Value {
    json!({
        "type": "array",
        "items": {
            "type": "object",
            "required": ["year", value_key],
            "properties": {
                "year": {"type": "integer"},
                value_key: {"type": "number", "minimum": 0}
            }
        }
    })
}

impl PanelDef {
    /// JSON schema of the `/api/panel/...` response for this panel.
    pub fn response_schema(&self) -> Value {
        let mut required = vec![
            "aspect",
            "panel",
            "subject",
            "kind",
            "schema",
            "generated_query",
            "query_editor_url",
            "cache",
        ];
        let mut properties = json!({
            "aspect": {"const": self.aspect.segment()},
            "panel": {"const": self.name},
            "subject": {"type": "string", "pattern": "^Q[1-9][0-9]*$"},
            "kind": {"const": serde_json::to_value(self.kind).unwrap()},
            "schema": {"type": "object"},
            "generated_query": {"type": "string", "minLength": 1},
            "query_editor_url": {"type": "string"},
            "cache": {"enum": ["hit", "miss"]},
        });
        let props = properties.as_object_mut().unwrap();
        match self.kind {
            PanelKind::Table => {
                required.push("rows");
                let row_props: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .map(|c| (c.to_string(), cell_schema()))
                    .collect();
                props.insert(
                    "columns".into(),
                    json!({"type": "array", "items": {"type": "string"}}),
                );
                props.insert(
                    "rows".into(),
                    json!({
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": row_props,
                            "additionalProperties": false
                        }
                    }),
                );
            }
            PanelKind::RoleBars => {
                required.push("series");
                props.insert(
                    "series".into(),
                    json!({
                        "type": "array",
                        "minItems": 5,
                        "maxItems": 5,
                        "items": {
                            "type": "object",
                            "required": ["key", "points"],
                            "properties": {
                                "key": {"enum": ["first", "middle", "last", "solo", "unknown"]},
                                "points": year_points("count")
                            }
                        }
                    }),
                );
            }
            PanelKind::AuthorBars => {
                required.push("series");
                props.insert(
                    "series".into(),
                    json!({
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["key", "label", "points"],
                            "properties": {
                                "key": {"type": "string", "pattern": "^Q[1-9][0-9]*$"},
                                "label": {"type": "string"},
                                "points": year_points("value")
                            }
                        }
                    }),
                );
                props.insert(
                    "missing_pages".into(),
                    json!({"type": "integer", "minimum": 0}),
                );
            }
            PanelKind::Scatter => {
                required.push("points");
                props.insert(
                    "points".into(),
                    json!({
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["x", "y", "venue", "label"],
                            "properties": {
                                "x": {"type": "integer", "minimum": 0},
                                "y": {"type": "integer", "minimum": 0},
                                "venue": {"type": "string"},
                                "label": {"type": "string"}
                            }
                        }
                    }),
                );
            }
            PanelKind::Graph => {
                required.push("nodes");
                required.push("edges");
                props.insert(
                    "nodes".into(),
                    json!({
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["id", "label"],
                            "properties": {
                                "id": {"type": "string"},
                                "label": {"type": "string"}
                            }
                        }
                    }),
                );
                props.insert(
                    "edges".into(),
                    json!({
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["source", "target"],
                            "properties": {
                                "source": {"type": "string"},
                                "target": {"type": "string"},
                                "weight": {"type": "number"}
                            }
                        }
                    }),
                );
            }
        }
        json!({
            "$schema": "https://json-schema.org/draft/2020-12/schema",
            "title": format!("{}/{}", self.aspect, self.name),
            "type": "object",
            "required": required,
            "properties": properties,
        })
    }

    /// Catalog entry as served at `/api/panels`.
    pub fn catalog_entry(&self) -> Value {
        json!({
            "aspect": self.aspect.segment(),
            "name": self.name,
            "title": self.title,
            "tier": serde_json::to_value(self.tier).unwrap(),
            "kind": serde_json::to_value(self.kind).unwrap(),
            "columns": self.columns,
            "response_schema": self.response_schema(),
        })
    }
}

pub fn catalog_json() -> Value {
    Value::from(PANELS.iter().map(PanelDef::catalog_entry).collect::<Vec<_>>())
}
