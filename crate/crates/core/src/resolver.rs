//! Aspect guessing and external-identifier resolution.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::model::{classes, Aspect, EntityId, PropertyRegistry, Role};
use crate::query::{build_identifier_lookup_query, build_instance_of_query};
use crate::sparql::{SparqlClient, SparqlError};

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error(transparent)]
    Sparql(#[from] SparqlError),
    #[error("{0} is not an item id")]
    NotAnItem(EntityId),
    #[error("identifier value must be non-empty")]
    EmptyValue,
    #[error("no item has {kind} {value:?}")]
    NotFound { kind: ExternalIdKind, value: String },
    #[error("{kind} {value:?} matches several items")]
    Ambiguous {
        kind: ExternalIdKind,
        value: String,
        candidates: Vec<EntityId>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("class {0} has more than one rule")]
    DuplicateClass(EntityId),
    #[error("priority {0} used by more than one rule")]
    DuplicatePriority(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AspectRule {
    pub class: EntityId,
    pub aspect: Aspect,
    pub priority: i64,
}

/// Instance-of class to aspect table; the highest priority match wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectRules {
    rules: Vec<AspectRule>,
}

impl AspectRules {
    pub fn new(rules: Vec<AspectRule>) -> Result<Self, RuleError> {
        let mut classes = BTreeSet::new();
        let mut priorities = BTreeSet::new();
        for rule in &rules {
            if !classes.insert(rule.class) {
                return Err(RuleError::DuplicateClass(rule.class));
            }
            if !priorities.insert(rule.priority) {
                return Err(RuleError::DuplicatePriority(rule.priority));
            }
        }
        let mut rules = rules;
        rules.sort_by_key(|r| std::cmp::Reverse(r.priority));
        Ok(AspectRules { rules })
    }

    /// Parses `class-id = aspect, priority` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, RuleError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: &str| RuleError::Syntax {
                line: i + 1,
                message: message.to_string(),
            };
            let (class, rest) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected `class = aspect, priority`"))?;
            let class = EntityId::parse(class.trim()).map_err(|e| syntax(&e.to_string()))?;
            if !class.is_item() {
                return Err(syntax("class must be an item id"));
            }
            let (aspect, priority) = rest
                .split_once(',')
                .ok_or_else(|| syntax("expected `aspect, priority`"))?;
            let aspect = Aspect::from_segment(aspect.trim())
                .ok_or_else(|| syntax(&format!("unknown aspect {:?}", aspect.trim())))?;
            let priority = priority
                .trim()
                .parse()
                .map_err(|_| syntax("priority must be an integer"))?;
            rules.push(AspectRule {
                class,
                aspect,
                priority,
            });
        }
        AspectRules::new(rules)
    }

    pub fn rules(&self) -> &[AspectRule] {
        &self.rules
    }

    /// Aspect of the best rule matching any of `instance_of`, else Topic.
    pub fn aspect_for(&self, instance_of: &[EntityId]) -> Aspect {
        self.rules
            .iter()
            .find(|rule| instance_of.contains(&rule.class))
            .map(|rule| rule.aspect)
            .unwrap_or(Aspect::Topic)
    }
}

impl Default for AspectRules {
    fn default() -> Self {
        let table = [
            (classes::human(), Aspect::Author, 100),
            (classes::scientific_article(), Aspect::Work, 90),
            (classes::book(), Aspect::Work, 89),
            (classes::preprint(), Aspect::Work, 88),
            (classes::scientific_journal(), Aspect::Venue, 80),
            (classes::proceedings(), Aspect::Venue, 79),
            (classes::book_series(), Aspect::Series, 70),
            (classes::proceedings_series(), Aspect::Series, 69),
            (classes::publisher(), Aspect::Publisher, 60),
            (classes::university(), Aspect::Organization, 50),
            (classes::research_institute(), Aspect::Organization, 49),
            (classes::business(), Aspect::Organization, 48),
            (classes::foundation(), Aspect::Sponsor, 40),
            (classes::government_agency(), Aspect::Sponsor, 39),
        ];
        AspectRules::new(
            table
                .into_iter()
                .map(|(class, aspect, priority)| AspectRule {
                    class,
                    aspect,
                    priority,
                })
                .collect(),
        )
        .expect("default rule table is consistent")
    }
}

/// Queries the subject's instance-of classes and picks an aspect.
pub async fn guess_aspect(
    subject: EntityId,
    client: &SparqlClient,
    registry: &PropertyRegistry,
    rules: &AspectRules,
) -> Result<Aspect, ResolveError> {
    let query =
        build_instance_of_query(subject, registry).map_err(|_| ResolveError::NotAnItem(subject))?;
    let results = client.execute(&query).await?;
    let classes: Vec<EntityId> = results
        .rows
        .iter()
        .filter_map(|row| row.get("class")?.as_entity())
        .collect();
    Ok(rules.aspect_for(&classes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExternalIdKind {
    Doi,
    Orcid,
    Twitter,
    Github,
}

impl ExternalIdKind {
    pub const ALL: [ExternalIdKind; 4] = [
        ExternalIdKind::Doi,
        ExternalIdKind::Orcid,
        ExternalIdKind::Twitter,
        ExternalIdKind::Github,
    ];

    pub fn role(self) -> Role {
        match self {
            ExternalIdKind::Doi => Role::Doi,
            ExternalIdKind::Orcid => Role::Orcid,
            ExternalIdKind::Twitter => Role::Twitter,
            ExternalIdKind::Github => Role::Github,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExternalIdKind::Doi => "doi",
            ExternalIdKind::Orcid => "orcid",
            ExternalIdKind::Twitter => "twitter",
            ExternalIdKind::Github => "github",
        }
    }

    /// Lookup form of a value: trimmed, DOIs uppercased.
    pub fn normalize(self, value: &str) -> String {
        let value = value.trim();
        match self {
            ExternalIdKind::Doi => value.to_uppercase(),
            _ => value.to_string(),
        }
    }
}

impl fmt::Display for ExternalIdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExternalIdKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExternalIdKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown identifier kind {s:?}"))
    }
}

/// The unique item whose identifier property for `kind` equals `value`.
pub async fn resolve_external(
    kind: ExternalIdKind,
    value: &str,
    client: &SparqlClient,
    registry: &PropertyRegistry,
) -> Result<EntityId, ResolveError> {
    let normalized = kind.normalize(value);
    if normalized.is_empty() {
        return Err(ResolveError::EmptyValue);
    }
    let query = build_identifier_lookup_query(registry.get(kind.role()), &normalized)
        .map_err(|_| ResolveError::EmptyValue)?;
    let results = client.execute(&query).await?;
    let candidates: Vec<EntityId> = results
        .rows
        .iter()
        .filter_map(|row| row.get("item")?.as_entity())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    match candidates.as_slice() {
        [] => Err(ResolveError::NotFound {
            kind,
            value: normalized,
        }),
        [one] => Ok(*one),
        _ => Err(ResolveError::Ambiguous {
            kind,
            value: normalized,
            candidates,
        }),
    }
}
