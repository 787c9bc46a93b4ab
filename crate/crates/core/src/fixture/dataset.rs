//! The versioned fixture graph: statements, labels, sitelinks and probes,
//! read from tab-separated files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use crate::entity_api::{DataValue, Entity, Statement};
use crate::model::{EntityId, Term, XSD_DATETIME, XSD_DECIMAL};

pub const GEO_WKT_LITERAL: &str = "http://www.opengis.net/ont/geosparql#wktLiteral";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{file}:{line}: {message}")]
    Syntax {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}: {source}")]
    Io {
        file: String,
        source: std::io::Error,
    },
}

/// A statement value in fixture notation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FixtureValue {
    Entity(EntityId),
    String(String),
    /// ISO timestamp such as `2014-10-01T00:00:00Z`.
    Time(String),
    Quantity(String),
    Monolingual { text: String, lang: String },
    /// `lat,lon` as written.
    Coordinate(String),
    Url(String),
}

impl FixtureValue {
    /// Parses `Q42`, `s:text`, `t:2014-10-01`, `q:12`, `m:en:text`,
    /// `g:55.7,12.5` or `u:https://...`.
    pub fn parse(text: &str) -> Result<FixtureValue, String> {
        if let Ok(id) = EntityId::parse(text) {
            return Ok(FixtureValue::Entity(id));
        }
        let (tag, rest) = text
            .split_once(':')
            .ok_or_else(|| format!("untagged value {text:?}"))?;
        Ok(match tag {
            "s" => FixtureValue::String(rest.to_string()),
            "t" => {
                let full = if rest.contains('T') {
                    rest.to_string()
                } else {
                    format!("{rest}T00:00:00Z")
                };
                FixtureValue::Time(full)
            }
            "q" => {
                rest.parse::<f64>()
                    .map_err(|_| format!("bad quantity {rest:?}"))?;
                FixtureValue::Quantity(rest.to_string())
            }
            "m" => {
                let (lang, text) = rest
                    .split_once(':')
                    .ok_or_else(|| format!("bad monolingual {rest:?}"))?;
                FixtureValue::Monolingual {
                    text: text.to_string(),
                    lang: lang.to_string(),
                }
            }
            "g" => {
                let (lat, lon) = rest
                    .split_once(',')
                    .ok_or_else(|| format!("bad coordinate {rest:?}"))?;
                lat.trim()
                    .parse::<f64>()
                    .and(lon.trim().parse::<f64>())
                    .map_err(|_| format!("bad coordinate {rest:?}"))?;
                FixtureValue::Coordinate(rest.to_string())
            }
            "u" => FixtureValue::Url(rest.to_string()),
            _ => return Err(format!("unknown value tag {tag:?}")),
        })
    }

    pub fn as_entity(&self) -> Option<EntityId> {
        match self {
            FixtureValue::Entity(id) => Some(*id),
            _ => None,
        }
    }

    /// Lexical text of string-like values, as matched by literal patterns.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            FixtureValue::String(s) | FixtureValue::Url(s) => Some(s),
            FixtureValue::Monolingual { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn year(&self) -> Option<i32> {
        match self {
            FixtureValue::Time(t) => crate::model::parse_year(t),
            _ => None,
        }
    }

    pub fn quantity(&self) -> Option<f64> {
        match self {
            FixtureValue::Quantity(q) => q.parse().ok(),
            _ => None,
        }
    }

    /// The RDF term the query service would bind for this value.
    pub fn to_term(&self) -> Term {
        match self {
            FixtureValue::Entity(id) => Term::entity(*id),
            FixtureValue::String(s) => Term::plain(s.clone()),
            FixtureValue::Time(t) => Term::typed(t.clone(), XSD_DATETIME),
            FixtureValue::Quantity(q) => Term::typed(q.clone(), XSD_DECIMAL),
            FixtureValue::Monolingual { text, lang } => Term::lang(text.clone(), lang.clone()),
            FixtureValue::Coordinate(c) => {
                let (lat, lon) = c.split_once(',').unwrap_or((c, ""));
                Term::typed(format!("Point({} {})", lon.trim(), lat.trim()), GEO_WKT_LITERAL)
            }
            FixtureValue::Url(u) => Term::iri(u.clone()),
        }
    }

    /// The entity-API datavalue for this value.
    pub fn to_datavalue(&self) -> DataValue {
        match self {
            FixtureValue::Entity(id) => DataValue::Entity(*id),
            FixtureValue::String(s) | FixtureValue::Url(s) => DataValue::String(s.clone()),
            FixtureValue::Time(t) => DataValue::Time {
                time: if t.starts_with(['+', '-']) {
                    t.clone()
                } else {
                    format!("+{t}")
                },
                precision: 11,
            },
            FixtureValue::Quantity(q) => DataValue::Quantity {
                amount: if q.starts_with(['+', '-']) {
                    q.clone()
                } else {
                    format!("+{q}")
                },
                unit: "1".into(),
            },
            FixtureValue::Monolingual { text, lang } => DataValue::Monolingual {
                text: text.clone(),
                language: lang.clone(),
            },
            FixtureValue::Coordinate(c) => {
                let (lat, lon) = c.split_once(',').unwrap_or((c, "0"));
                DataValue::Coordinate {
                    latitude: lat.trim().parse().unwrap_or(0.0),
                    longitude: lon.trim().parse().unwrap_or(0.0),
                }
            }
        }
    }
}

pub type Snaks = Vec<(EntityId, FixtureValue)>;

/// One statement: `subject property object` with qualifiers and references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub subject: EntityId,
    pub property: EntityId,
    pub object: FixtureValue,
    pub qualifiers: Snaks,
    pub references: Vec<Snaks>,
}

impl Triple {
    pub fn qualifier(&self, property: EntityId) -> Option<&FixtureValue> {
        self.qualifiers
            .iter()
            .find(|(p, _)| *p == property)
            .map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sitelink {
    pub site: String,
    pub title: String,
    pub extract: Option<String>,
}

/// Inputs that exist only to exercise misses and extra subjects.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Probes {
    /// Items given canned answers for every panel and lookup.
    pub subjects: Vec<EntityId>,
    /// (kind, value) identifier lookups expected to miss.
    pub identifiers: Vec<(String, String)>,
    pub url_prefixes: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub triples: Vec<Triple>,
    /// (id, language) → (label, description)
    pub labels: BTreeMap<(EntityId, String), (String, Option<String>)>,
    pub sitelinks: BTreeMap<EntityId, Vec<Sitelink>>,
    pub probes: Probes,
}

fn rows(text: &str) -> Vec<(usize, Vec<String>)> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty() && !line.starts_with('#'))
        .map(|(i, line)| (i + 1, line.split('\t').map(str::to_string).collect()))
        .collect()
}

fn syntax(file: &str, line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Syntax {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_snaks(file: &str, line: usize, value: &Value) -> Result<Snaks, DatasetError> {
    let object = value
        .as_object()
        .ok_or_else(|| syntax(file, line, "snaks must be a JSON object"))?;
    let mut out = Vec::new();
    for (property, values) in object {
        let property = EntityId::parse(property)
            .ok()
            .filter(EntityId::is_property)
            .ok_or_else(|| syntax(file, line, format!("bad snak property {property:?}")))?;
        let list: Vec<&Value> = match values {
            Value::Array(items) => items.iter().collect(),
            other => vec![other],
        };
        for v in list {
            let text = v
                .as_str()
                .ok_or_else(|| syntax(file, line, "snak values must be strings"))?;
            let parsed = FixtureValue::parse(text).map_err(|m| syntax(file, line, m))?;
            out.push((property, parsed));
        }
    }
    Ok(out)
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Dataset, DatasetError> {
        let read = |name: &str, required: bool| -> Result<String, DatasetError> {
            match std::fs::read_to_string(dir.join(name)) {
                Ok(text) => Ok(text),
                Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => {
                    Ok(String::new())
                }
                Err(source) => Err(DatasetError::Io {
                    file: name.to_string(),
                    source,
                }),
            }
        };
        Dataset::parse(
            &read("triples.tsv", true)?,
            &read("labels.tsv", true)?,
            &read("sitelinks.tsv", false)?,
            &read("probes.tsv", false)?,
        )
    }

    pub fn parse(
        triples: &str,
        labels: &str,
        sitelinks: &str,
        probes: &str,
    ) -> Result<Dataset, DatasetError> {
        let mut ds = Dataset::default();

        const T: &str = "triples.tsv";
        for (line, cols) in rows(triples) {
            if cols.len() < 3 || cols.len() > 5 {
                return Err(syntax(T, line, "expected 3 to 5 columns"));
            }
            let subject = EntityId::parse(&cols[0]).map_err(|e| syntax(T, line, e.to_string()))?;
            let property = EntityId::parse(&cols[1])
                .ok()
                .filter(EntityId::is_property)
                .ok_or_else(|| syntax(T, line, format!("bad property {:?}", cols[1])))?;
            let object = FixtureValue::parse(&cols[2]).map_err(|m| syntax(T, line, m))?;
            let json = |i: usize| -> Result<Option<Value>, DatasetError> {
                match cols.get(i).map(|s| s.trim()).filter(|s| !s.is_empty()) {
                    None => Ok(None),
                    Some(text) => serde_json::from_str(text)
                        .map(Some)
                        .map_err(|e| syntax(T, line, e.to_string())),
                }
            };
            let qualifiers = match json(3)? {
                Some(v) => parse_snaks(T, line, &v)?,
                None => Vec::new(),
            };
            let references = match json(4)? {
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|r| parse_snaks(T, line, r))
                    .collect::<Result<_, _>>()?,
                Some(_) => return Err(syntax(T, line, "references must be a JSON array")),
                None => Vec::new(),
            };
            ds.triples.push(Triple {
                subject,
                property,
                object,
                qualifiers,
                references,
            });
        }

        const L: &str = "labels.tsv";
        for (line, cols) in rows(labels) {
            if cols.len() < 3 || cols.len() > 4 {
                return Err(syntax(L, line, "expected 3 or 4 columns"));
            }
            let id = EntityId::parse(&cols[0]).map_err(|e| syntax(L, line, e.to_string()))?;
            let description = cols.get(3).filter(|d| !d.is_empty()).cloned();
            if ds
                .labels
                .insert((id, cols[1].clone()), (cols[2].clone(), description))
                .is_some()
            {
                return Err(syntax(L, line, format!("duplicate label for {id}")));
            }
        }

        const S: &str = "sitelinks.tsv";
        for (line, cols) in rows(sitelinks) {
            if cols.len() < 3 || cols.len() > 4 {
                return Err(syntax(S, line, "expected 3 or 4 columns"));
            }
            let id = EntityId::parse(&cols[0]).map_err(|e| syntax(S, line, e.to_string()))?;
            ds.sitelinks.entry(id).or_default().push(Sitelink {
                site: cols[1].clone(),
                title: cols[2].clone(),
                extract: cols.get(3).filter(|e| !e.is_empty()).cloned(),
            });
        }

        const P: &str = "probes.tsv";
        for (line, cols) in rows(probes) {
            match (cols[0].as_str(), cols.len()) {
                ("subject", 2) => ds.probes.subjects.push(
                    EntityId::parse(&cols[1]).map_err(|e| syntax(P, line, e.to_string()))?,
                ),
                ("identifier", 3) => ds
                    .probes
                    .identifiers
                    .push((cols[1].clone(), cols[2].clone())),
                ("url-prefix", 2) => ds.probes.url_prefixes.push(cols[1].clone()),
                _ => return Err(syntax(P, line, "unknown probe row")),
            }
        }
        Ok(ds)
    }

    pub fn label(&self, id: EntityId, lang: &str) -> Option<&str> {
        self.labels
            .get(&(id, lang.to_string()))
            .map(|(l, _)| l.as_str())
    }

    pub fn description(&self, id: EntityId, lang: &str) -> Option<&str> {
        self.labels
            .get(&(id, lang.to_string()))
            .and_then(|(_, d)| d.as_deref())
    }

    pub fn statements(&self, subject: EntityId, property: EntityId) -> impl Iterator<Item = &Triple> {
        self.triples
            .iter()
            .filter(move |t| t.subject == subject && t.property == property)
    }

    pub fn values(&self, subject: EntityId, property: EntityId) -> impl Iterator<Item = &FixtureValue> {
        self.statements(subject, property).map(|t| &t.object)
    }

    pub fn entity_values(&self, subject: EntityId, property: EntityId) -> BTreeSet<EntityId> {
        self.values(subject, property)
            .filter_map(FixtureValue::as_entity)
            .collect()
    }

    pub fn has(&self, subject: EntityId, property: EntityId, object: &FixtureValue) -> bool {
        self.values(subject, property).any(|v| v == object)
    }

    /// Subjects with a `property` statement whose value is `object`.
    pub fn subjects_with(&self, property: EntityId, object: &FixtureValue) -> BTreeSet<EntityId> {
        self.triples
            .iter()
            .filter(|t| t.property == property && &t.object == object)
            .map(|t| t.subject)
            .collect()
    }

    /// Every id that appears as a subject or entity value.
    pub fn entities(&self) -> BTreeSet<EntityId> {
        let mut out = BTreeSet::new();
        for t in &self.triples {
            out.insert(t.subject);
            if let Some(id) = t.object.as_entity() {
                out.insert(id);
            }
        }
        out.extend(self.labels.keys().map(|(id, _)| *id));
        out
    }

    pub fn items(&self) -> BTreeSet<EntityId> {
        self.entities().into_iter().filter(EntityId::is_item).collect()
    }

    pub fn is_known(&self, id: EntityId) -> bool {
        self.triples.iter().any(|t| t.subject == id)
            || self.labels.keys().any(|(l, _)| *l == id)
    }

    /// The entity as the entity API would return it.
    pub fn entity(&self, id: EntityId) -> Option<Entity> {
        if !self.is_known(id) {
            return None;
        }
        let mut entity = Entity::default();
        for ((lid, lang), (label, description)) in &self.labels {
            if *lid == id {
                entity.labels.insert(lang.clone(), label.clone());
                if let Some(d) = description {
                    entity.descriptions.insert(lang.clone(), d.clone());
                }
            }
        }
        for t in self.triples.iter().filter(|t| t.subject == id) {
            let snaks = |s: &Snaks| {
                let mut map: BTreeMap<EntityId, Vec<DataValue>> = BTreeMap::new();
                for (p, v) in s {
                    map.entry(*p).or_default().push(v.to_datavalue());
                }
                map
            };
            entity
                .claims
                .entry(t.property)
                .or_default()
                .push(Statement {
                    value: Some(t.object.to_datavalue()),
                    qualifiers: snaks(&t.qualifiers),
                    references: t.references.iter().map(snaks).collect(),
                });
        }
        for link in self.sitelinks.get(&id).into_iter().flatten() {
            entity.sitelinks.insert(link.site.clone(), link.title.clone());
        }
        Some(entity)
    }

    /// Extract for a wiki page title on `site`.
    pub fn extract(&self, site: &str, title: &str) -> Option<&str> {
        self.sitelinks
            .values()
            .flatten()
            .find(|l| l.site == site && l.title == title)
            .and_then(|l| l.extract.as_deref())
    }
}
