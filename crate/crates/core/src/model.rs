//! Domain types shared across the crate: entity identifiers, the property
//! vocabulary, aspects, work records and SPARQL result sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::num::NonZeroU64;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Base IRI of entity nodes in the knowledge graph.
pub const ENTITY_IRI_PREFIX: &str = "http://www.wikidata.org/entity/";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed entity id {0:?}")]
    MalformedId(String),
    #[error("role {role} must map to a property id, got {id}")]
    NotAProperty { role: Role, id: EntityId },
    #[error("unknown property role {0:?}")]
    UnknownRole(String),
    #[error("unknown aspect {0:?}")]
    UnknownAspect(String),
    #[error("work {work}: duplicate author ordinal {ordinal}")]
    DuplicateOrdinal { work: EntityId, ordinal: u32 },
    #[error("work {0}: page count must be at least 1")]
    ZeroPages(EntityId),
    #[error("work {work}: declared author count {declared} is below the {listed} listed authors")]
    AuthorCountTooSmall {
        work: EntityId,
        declared: u32,
        listed: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Item,
    Property,
}

impl EntityKind {
    fn letter(self) -> char {
        match self {
            EntityKind::Item => 'Q',
            EntityKind::Property => 'P',
        }
    }
}

/// A validated `Q<n>` or `P<n>` identifier.
///
/// Ordering is by kind, then numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId {
    kind: EntityKind,
    number: NonZeroU64,
}

impl EntityId {
    pub fn item(number: u64) -> Option<Self> {
        NonZeroU64::new(number).map(|number| EntityId {
            kind: EntityKind::Item,
            number,
        })
    }

    pub fn property(number: u64) -> Option<Self> {
        NonZeroU64::new(number).map(|number| EntityId {
            kind: EntityKind::Property,
            number,
        })
    }

    /// Parses the canonical text form. Anything that is not exactly
    /// `^[QP][1-9][0-9]*$` is rejected.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let malformed = || ModelError::MalformedId(text.to_string());
        let mut chars = text.chars();
        let kind = match chars.next() {
            Some('Q') => EntityKind::Item,
            Some('P') => EntityKind::Property,
            _ => return Err(malformed()),
        };
        let digits = &text[1..];
        if digits.is_empty()
            || digits.starts_with('0')
            || !digits.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(malformed());
        }
        let number: u64 = digits.parse().map_err(|_| malformed())?;
        let number = NonZeroU64::new(number).ok_or_else(malformed)?;
        Ok(EntityId { kind, number })
    }

    /// Parses an entity IRI such as `http://www.wikidata.org/entity/Q5`.
    pub fn from_iri(iri: &str) -> Option<Self> {
        iri.strip_prefix(ENTITY_IRI_PREFIX)
            .and_then(|rest| EntityId::parse(rest).ok())
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn number(&self) -> u64 {
        self.number.get()
    }

    pub fn is_item(&self) -> bool {
        self.kind == EntityKind::Item
    }

    pub fn is_property(&self) -> bool {
        self.kind == EntityKind::Property
    }

    pub fn iri(&self) -> String {
        format!("{ENTITY_IRI_PREFIX}{self}")
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.letter(), self.number)
    }
}

impl FromStr for EntityId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityId::parse(s)
    }
}

impl Serialize for EntityId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        EntityId::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Convenience for ids known at compile time. Panics on malformed input.
pub(crate) fn qid(text: &str) -> EntityId {
    EntityId::parse(text).expect("static entity id")
}

/// Semantic roles that map onto graph properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Author,
    AuthorNameString,
    PublishedIn,
    Publisher,
    Series,
    MainTheme,
    EducatedAt,
    Employer,
    Affiliation,
    PartOf,
    Sponsor,
    Cites,
    InstanceOf,
    SubclassOf,
    PublicationDate,
    NumberOfPages,
    SeriesOrdinal,
    ExternalDataUrl,
    StatedIn,
    Doi,
    Orcid,
    Twitter,
    Github,
    Title,
    Volume,
    Pages,
    Issue,
    FullWorkUrl,
    Editor,
    Image,
    CoordinateLocation,
    StartTime,
    EndTime,
    DoctoralAdvisor,
}

impl Role {
    pub const ALL: [Role; 34] = [
        Role::Author,
        Role::AuthorNameString,
        Role::PublishedIn,
        Role::Publisher,
        Role::Series,
        Role::MainTheme,
        Role::EducatedAt,
        Role::Employer,
        Role::Affiliation,
        Role::PartOf,
        Role::Sponsor,
        Role::Cites,
        Role::InstanceOf,
        Role::SubclassOf,
        Role::PublicationDate,
        Role::NumberOfPages,
        Role::SeriesOrdinal,
        Role::ExternalDataUrl,
        Role::StatedIn,
        Role::Doi,
        Role::Orcid,
        Role::Twitter,
        Role::Github,
        Role::Title,
        Role::Volume,
        Role::Pages,
        Role::Issue,
        Role::FullWorkUrl,
        Role::Editor,
        Role::Image,
        Role::CoordinateLocation,
        Role::StartTime,
        Role::EndTime,
        Role::DoctoralAdvisor,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Author => "author",
            Role::AuthorNameString => "author-name-string",
            Role::PublishedIn => "published-in",
            Role::Publisher => "publisher",
            Role::Series => "series",
            Role::MainTheme => "main-theme",
            Role::EducatedAt => "educated-at",
            Role::Employer => "employer",
            Role::Affiliation => "affiliation",
            Role::PartOf => "part-of",
            Role::Sponsor => "sponsor",
            Role::Cites => "cites",
            Role::InstanceOf => "instance-of",
            Role::SubclassOf => "subclass-of",
            Role::PublicationDate => "publication-date",
            Role::NumberOfPages => "number-of-pages",
            Role::SeriesOrdinal => "series-ordinal",
            Role::ExternalDataUrl => "external-data-url",
            Role::StatedIn => "stated-in",
            Role::Doi => "doi",
            Role::Orcid => "orcid",
            Role::Twitter => "twitter",
            Role::Github => "github",
            Role::Title => "title",
            Role::Volume => "volume",
            Role::Pages => "pages",
            Role::Issue => "issue",
            Role::FullWorkUrl => "full-work-url",
            Role::Editor => "editor",
            Role::Image => "image",
            Role::CoordinateLocation => "coordinate-location",
            Role::StartTime => "start-time",
            Role::EndTime => "end-time",
            Role::DoctoralAdvisor => "doctoral-advisor",
        }
    }

    fn default_property(self) -> u64 {
        match self {
            Role::Author => 50,
            Role::AuthorNameString => 2093,
            Role::PublishedIn => 1433,
            Role::Publisher => 123,
            Role::Series => 179,
            Role::MainTheme => 921,
            Role::EducatedAt => 69,
            Role::Employer => 108,
            Role::Affiliation => 1416,
            Role::PartOf => 361,
            Role::Sponsor => 859,
            Role::Cites => 2860,
            Role::InstanceOf => 31,
            Role::SubclassOf => 279,
            Role::PublicationDate => 577,
            Role::NumberOfPages => 1104,
            Role::SeriesOrdinal => 1545,
            Role::ExternalDataUrl => 1325,
            Role::StatedIn => 248,
            Role::Doi => 356,
            Role::Orcid => 496,
            Role::Twitter => 2002,
            Role::Github => 2037,
            Role::Title => 1476,
            Role::Volume => 478,
            Role::Pages => 304,
            Role::Issue => 433,
            Role::FullWorkUrl => 953,
            Role::Editor => 98,
            Role::Image => 18,
            Role::CoordinateLocation => 625,
            Role::StartTime => 580,
            Role::EndTime => 582,
            Role::DoctoralAdvisor => 184,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .iter()
            .copied()
            .find(|role| role.name() == s)
            .ok_or_else(|| ModelError::UnknownRole(s.to_string()))
    }
}

/// Role → property mapping. Every role is always present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyRegistry {
    properties: [EntityId; Role::ALL.len()],
}

impl Default for PropertyRegistry {
    fn default() -> Self {
        let properties = Role::ALL.map(|role| {
            EntityId::property(role.default_property()).expect("non-zero default property")
        });
        PropertyRegistry { properties }
    }
}

impl PropertyRegistry {
    pub fn get(&self, role: Role) -> EntityId {
        self.properties[role.index()]
    }

    /// Returns a copy with `role` remapped to `property`.
    pub fn with(mut self, role: Role, property: EntityId) -> Result<Self, ModelError> {
        if !property.is_property() {
            return Err(ModelError::NotAProperty { role, id: property });
        }
        self.properties[role.index()] = property;
        Ok(self)
    }

    /// Applies `role = P123` overrides, one per line; `#` starts a comment.
    pub fn with_overrides(mut self, text: &str) -> Result<Self, ModelError> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (role, id) = line
                .split_once('=')
                .ok_or_else(|| ModelError::UnknownRole(line.to_string()))?;
            let role: Role = role.trim().parse()?;
            let id = EntityId::parse(id.trim())?;
            self = self.with(role, id)?;
        }
        Ok(self)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Role, EntityId)> + '_ {
        Role::ALL.iter().map(move |&role| (role, self.get(role)))
    }
}

/// Well-known class and entity items.
pub mod classes {
    use super::{qid, EntityId};

    pub fn human() -> EntityId {
        qid("Q5")
    }
    pub fn scientific_article() -> EntityId {
        qid("Q13442814")
    }
    pub fn book() -> EntityId {
        qid("Q571")
    }
    pub fn preprint() -> EntityId {
        qid("Q580922")
    }
    pub fn university() -> EntityId {
        qid("Q3918")
    }
    pub fn research_institute() -> EntityId {
        qid("Q31855")
    }
    pub fn business() -> EntityId {
        qid("Q4830453")
    }
    pub fn scientific_journal() -> EntityId {
        qid("Q5633421")
    }
    pub fn proceedings() -> EntityId {
        qid("Q1143604")
    }
    pub fn book_series() -> EntityId {
        qid("Q277759")
    }
    pub fn proceedings_series() -> EntityId {
        qid("Q27785883")
    }
    pub fn publisher() -> EntityId {
        qid("Q2085381")
    }
    pub fn foundation() -> EntityId {
        qid("Q157031")
    }
    pub fn government_agency() -> EntityId {
        qid("Q327333")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Author,
    Work,
    Organization,
    Venue,
    Series,
    Publisher,
    Sponsor,
    Topic,
}

impl Aspect {
    pub const ALL: [Aspect; 8] = [
        Aspect::Author,
        Aspect::Work,
        Aspect::Organization,
        Aspect::Venue,
        Aspect::Series,
        Aspect::Publisher,
        Aspect::Sponsor,
        Aspect::Topic,
    ];

    /// URL path segment, also used as the display name.
    pub fn segment(self) -> &'static str {
        match self {
            Aspect::Author => "author",
            Aspect::Work => "work",
            Aspect::Organization => "organization",
            Aspect::Venue => "venue",
            Aspect::Series => "series",
            Aspect::Publisher => "publisher",
            Aspect::Sponsor => "sponsor",
            Aspect::Topic => "topic",
        }
    }

    pub fn from_segment(segment: &str) -> Option<Self> {
        Aspect::ALL.iter().copied().find(|a| a.segment() == segment)
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.segment())
    }
}

impl FromStr for Aspect {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Aspect::from_segment(s).ok_or_else(|| ModelError::UnknownAspect(s.to_string()))
    }
}

/// An author slot on a work: either a resolved item or a bare name string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorRef {
    Item(EntityId),
    Name(String),
}

impl AuthorRef {
    pub fn item(&self) -> Option<EntityId> {
        match self {
            AuthorRef::Item(id) => Some(*id),
            AuthorRef::Name(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorEntry {
    pub author: AuthorRef,
    pub ordinal: Option<u32>,
}

/// One scholarly work as consumed by the statistics module.
///
/// `authors` may be a partial listing (e.g. only the authors affiliated
/// with an organization); `declared_author_count` then carries the full
/// count used for normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkRecord {
    pub work: EntityId,
    pub title: String,
    pub authors: Vec<AuthorEntry>,
    pub declared_author_count: Option<u32>,
    pub venue: Option<EntityId>,
    pub publication_year: Option<i32>,
    pub pages: Option<u32>,
    pub cited_works: Vec<EntityId>,
    pub instance_of: Vec<EntityId>,
}

impl WorkRecord {
    pub fn new(work: EntityId, title: impl Into<String>) -> Self {
        WorkRecord {
            work,
            title: title.into(),
            authors: Vec::new(),
            declared_author_count: None,
            venue: None,
            publication_year: None,
            pages: None,
            cited_works: Vec::new(),
            instance_of: Vec::new(),
        }
    }

    /// Total number of authors on the work, listed or not.
    pub fn author_count(&self) -> u32 {
        self.declared_author_count
            .unwrap_or(self.authors.len() as u32)
    }

    pub fn author_entry(&self, author: EntityId) -> Option<&AuthorEntry> {
        self.authors
            .iter()
            .find(|entry| entry.author == AuthorRef::Item(author))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = BTreeSet::new();
        for ordinal in self.authors.iter().filter_map(|a| a.ordinal) {
            if !seen.insert(ordinal) {
                return Err(ModelError::DuplicateOrdinal {
                    work: self.work,
                    ordinal,
                });
            }
        }
        if self.pages == Some(0) {
            return Err(ModelError::ZeroPages(self.work));
        }
        if let Some(declared) = self.declared_author_count {
            if (declared as usize) < self.authors.len() {
                return Err(ModelError::AuthorCountTooSmall {
                    work: self.work,
                    declared,
                    listed: self.authors.len(),
                });
            }
        }
        Ok(())
    }
}

/// An RDF term as returned in SPARQL JSON results.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Literal {
        value: String,
        datatype: Option<String>,
        lang: Option<String>,
    },
    BlankNode(String),
}

pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";

impl Term {
    pub fn iri(value: impl Into<String>) -> Self {
        Term::Iri(value.into())
    }

    pub fn entity(id: EntityId) -> Self {
        Term::Iri(id.iri())
    }

    pub fn plain(value: impl Into<String>) -> Self {
        Term::Literal {
            value: value.into(),
            datatype: None,
            lang: None,
        }
    }

    pub fn lang(value: impl Into<String>, lang: impl Into<String>) -> Self {
        Term::Literal {
            value: value.into(),
            datatype: None,
            lang: Some(lang.into()),
        }
    }

    pub fn typed(value: impl Into<String>, datatype: &str) -> Self {
        Term::Literal {
            value: value.into(),
            datatype: Some(datatype.to_string()),
            lang: None,
        }
    }

    pub fn integer(value: i64) -> Self {
        Term::typed(value.to_string(), XSD_INTEGER)
    }

    /// Lexical value: the IRI, literal text, or blank node label.
    pub fn value(&self) -> &str {
        match self {
            Term::Iri(v) | Term::BlankNode(v) => v,
            Term::Literal { value, .. } => value,
        }
    }

    pub fn as_entity(&self) -> Option<EntityId> {
        match self {
            Term::Iri(iri) => EntityId::from_iri(iri),
            _ => None,
        }
    }

    /// Integer view of a numeric literal. Decimals must be integral.
    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Term::Literal { value, .. } => {
                let trimmed = value.trim().trim_start_matches('+');
                if let Ok(v) = trimmed.parse::<i64>() {
                    return Some(v);
                }
                let (whole, frac) = trimmed.split_once('.')?;
                if frac.bytes().all(|b| b == b'0') {
                    whole.parse().ok()
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Term::Literal { value, .. } => value.trim().parse().ok(),
            _ => None,
        }
    }

    /// Year component of an `xsd:dateTime`-style literal, or of a bare
    /// integer literal.
    pub fn as_year(&self) -> Option<i32> {
        match self {
            Term::Literal { value, datatype, .. } => {
                if datatype.as_deref() == Some(XSD_DATETIME) || value.contains('-') {
                    parse_year(value)
                } else {
                    value.trim().parse().ok()
                }
            }
            _ => None,
        }
    }
}

/// Extracts the (possibly signed) year from an ISO-8601-like date string.
pub fn parse_year(value: &str) -> Option<i32> {
    let value = value.trim();
    let (sign, rest) = match value.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, value.strip_prefix('+').unwrap_or(value)),
    };
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return None;
    }
    digits.parse::<i32>().ok().map(|y| sign * y)
}

pub type Row = BTreeMap<String, Term>;

/// Parsed SPARQL SELECT results.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResultSet {
    pub variables: Vec<String>,
    pub rows: Vec<Row>,
}

impl ResultSet {
    pub fn new(variables: Vec<String>) -> Self {
        ResultSet {
            variables,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Serializes to the SPARQL 1.1 Query Results JSON format.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::{json, Map, Value};
        let bindings: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                // head order keeps the output stable and readable
                for var in &self.variables {
                    if let Some(term) = row.get(var) {
                        obj.insert(var.clone(), term_to_json(term));
                    }
                }
                Value::Object(obj)
            })
            .collect();
        json!({
            "head": { "vars": self.variables },
            "results": { "bindings": bindings },
        })
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_json()).expect("result set serializes")
    }
}

pub(crate) fn term_to_json(term: &Term) -> serde_json::Value {
    use serde_json::{json, Map, Value};
    match term {
        Term::Iri(v) => json!({"type": "uri", "value": v}),
        Term::BlankNode(v) => json!({"type": "bnode", "value": v}),
        Term::Literal {
            value,
            datatype,
            lang,
        } => {
            let mut obj = Map::new();
            obj.insert("type".into(), Value::from("literal"));
            if let Some(lang) = lang {
                obj.insert("xml:lang".into(), Value::from(lang.as_str()));
            }
            if let Some(dt) = datatype {
                obj.insert("datatype".into(), Value::from(dt.as_str()));
            }
            obj.insert("value".into(), Value::from(value.as_str()));
            Value::Object(obj)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_known_ids() {
        let article = EntityId::parse("Q13442814").unwrap();
        assert_eq!(article.kind(), EntityKind::Item);
        assert_eq!(article.number(), 13442814);
        let cites = EntityId::parse("P2860").unwrap();
        assert_eq!(cites.kind(), EntityKind::Property);
        assert_eq!(cites.number(), 2860);
    }

    #[test]
    fn rejects_non_canonical_ids() {
        for bad in [
            "Q01",
            "Q0",
            "q5",
            "Q",
            "",
            " Q5",
            "Q5 ",
            "L5",
            "Q-5",
            "Q+5",
            "Q5a",
            "wd:Q5",
            "http://www.wikidata.org/entity/Q5",
            "Q99999999999999999999999",
        ] {
            assert!(
                matches!(EntityId::parse(bad), Err(ModelError::MalformedId(_))),
                "{bad:?} should be rejected"
            );
        }
    }

    #[test]
    fn iri_round_trip() {
        let id = EntityId::parse("Q8219").unwrap();
        assert_eq!(id.iri(), "http://www.wikidata.org/entity/Q8219");
        assert_eq!(EntityId::from_iri(&id.iri()), Some(id));
        assert_eq!(EntityId::from_iri("http://example.org/Q8219"), None);
    }

    #[test]
    fn registry_defaults_match_vocabulary() {
        let registry = PropertyRegistry::default();
        let expect = [
            (Role::Author, "P50"),
            (Role::PublishedIn, "P1433"),
            (Role::Publisher, "P123"),
            (Role::Series, "P179"),
            (Role::MainTheme, "P921"),
            (Role::EducatedAt, "P69"),
            (Role::Employer, "P108"),
            (Role::PartOf, "P361"),
            (Role::Sponsor, "P859"),
            (Role::Cites, "P2860"),
            (Role::InstanceOf, "P31"),
            (Role::NumberOfPages, "P1104"),
            (Role::ExternalDataUrl, "P1325"),
        ];
        for (role, id) in expect {
            assert_eq!(registry.get(role).to_string(), id, "{role}");
        }
    }

    #[test]
    fn registry_is_total_and_property_kinded() {
        let registry = PropertyRegistry::default();
        let mut seen = BTreeSet::new();
        for (role, id) in registry.iter() {
            assert!(id.is_property());
            assert!(seen.insert(role));
        }
        assert_eq!(seen.len(), Role::ALL.len());
        for (i, role) in Role::ALL.iter().enumerate() {
            assert_eq!(role.index(), i);
            assert_eq!(role.name().parse::<Role>().unwrap(), *role);
        }
    }

    #[test]
    fn registry_rejects_items() {
        let err = PropertyRegistry::default()
            .with(Role::Cites, qid("Q5"))
            .unwrap_err();
        assert!(matches!(err, ModelError::NotAProperty { .. }));
    }

    #[test]
    fn registry_overrides_from_text() {
        let registry = PropertyRegistry::default()
            .with_overrides("# local mirror\ncites = P9999\n\ndoi=P1\n")
            .unwrap();
        assert_eq!(registry.get(Role::Cites).to_string(), "P9999");
        assert_eq!(registry.get(Role::Doi).to_string(), "P1");
        assert!(PropertyRegistry::default()
            .with_overrides("nonsense = P1")
            .is_err());
    }

    #[test]
    fn aspects_have_unique_segments() {
        let segments: BTreeSet<_> = Aspect::ALL.iter().map(|a| a.segment()).collect();
        assert_eq!(segments.len(), 8);
        for aspect in Aspect::ALL {
            assert_eq!(Aspect::from_segment(aspect.segment()), Some(aspect));
            assert_eq!(aspect.segment(), aspect.segment().to_lowercase());
        }
        assert_eq!(Aspect::from_segment("Author"), None);
    }

    #[test]
    fn work_record_invariants() {
        let mut record = WorkRecord::new(qid("Q1"), "t");
        record.authors.push(AuthorEntry {
            author: AuthorRef::Item(qid("Q2")),
            ordinal: Some(1),
        });
        record.authors.push(AuthorEntry {
            author: AuthorRef::Name("X".into()),
            ordinal: Some(1),
        });
        assert!(matches!(
            record.validate(),
            Err(ModelError::DuplicateOrdinal { ordinal: 1, .. })
        ));
        record.authors[1].ordinal = Some(2);
        assert!(record.validate().is_ok());
        record.pages = Some(0);
        assert!(matches!(record.validate(), Err(ModelError::ZeroPages(_))));
        record.pages = Some(3);
        record.declared_author_count = Some(1);
        assert!(record.validate().is_err());
        record.declared_author_count = Some(5);
        assert_eq!(record.author_count(), 5);
    }

    #[test]
    fn term_numeric_views() {
        assert_eq!(Term::typed("12", XSD_DECIMAL).as_integer(), Some(12));
        assert_eq!(Term::typed("+12.000", XSD_DECIMAL).as_integer(), Some(12));
        assert_eq!(Term::typed("12.5", XSD_DECIMAL).as_integer(), None);
        assert_eq!(
            Term::typed("2014-10-01T00:00:00Z", XSD_DATETIME).as_year(),
            Some(2014)
        );
        assert_eq!(Term::integer(2009).as_year(), Some(2009));
        assert_eq!(parse_year("-0300-01-01"), Some(-300));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn entity_id_round_trips(number in 1u64..=u64::MAX, is_item in any::<bool>()) {
            let id = if is_item { EntityId::item(number) } else { EntityId::property(number) }.unwrap();
            let text = id.to_string();
            prop_assert_eq!(EntityId::parse(&text).unwrap(), id);
            prop_assert!(!text[1..].starts_with('0'));
        }

        #[test]
        fn parse_accepts_exactly_the_canonical_pattern(text in "[QPqp0-9 x]{0,6}") {
            let canonical = {
                let b = text.as_bytes();
                b.len() >= 2
                    && (b[0] == b'Q' || b[0] == b'P')
                    && b[1] != b'0'
                    && b[1..].iter().all(u8::is_ascii_digit)
            };
            match EntityId::parse(&text) {
                Ok(id) => { prop_assert!(canonical); prop_assert_eq!(id.to_string(), text); }
                Err(_) => prop_assert!(!canonical),
            }
        }
    }
}
