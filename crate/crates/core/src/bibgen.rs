//! `.aux` to `.bib`: collect item-id cite keys, fetch the items from the
//! entity API and write BibTeX entries in citation order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use indexmap::IndexMap;
use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::entity_api::{DataValue, Entity, EntityApiClient, EntityApiError};
use crate::model::{classes, EntityId, PropertyRegistry, Role};

#[derive(Debug, Error)]
pub enum BibError {
    #[error("{0} does not exist")]
    NotFound(EntityId),
    #[error("{0} is not an item id")]
    NotAnItem(EntityId),
    #[error(transparent)]
    Api(#[from] EntityApiError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryType {
    Article,
    Book,
    Misc,
}

impl EntryType {
    pub fn name(self) -> &'static str {
        match self {
            EntryType::Article => "article",
            EntryType::Book => "book",
            EntryType::Misc => "misc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BibEntry {
    pub entry_type: EntryType,
    pub cite_key: EntityId,
    pub fields: IndexMap<String, String>,
}

impl BibEntry {
    pub fn new(entry_type: EntryType, cite_key: EntityId) -> Self {
        BibEntry {
            entry_type,
            cite_key,
            fields: IndexMap::new(),
        }
    }
}

/// Keys found in an `.aux` file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuxKeys {
    pub ids: Vec<EntityId>,
    pub skipped: Vec<String>,
}

static CITATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\citation\{([^}]*)\}").unwrap());

/// Scans `\citation{...}` lines. Item-id keys come back in first-seen
/// order; other keys and unparseable citation lines go to `skipped`.
pub fn parse_aux(content: &str) -> AuxKeys {
    let mut out = AuxKeys::default();
    let mut seen_ids = BTreeSet::new();
    let mut seen_skipped = BTreeSet::new();
    let mut skip = |out: &mut AuxKeys, key: String| {
        if seen_skipped.insert(key.clone()) {
            out.skipped.push(key);
        }
    };
    for line in content.lines() {
        if !line.contains("\\citation") {
            continue;
        }
        let mut matched = false;
        for caps in CITATION.captures_iter(line) {
            matched = true;
            for key in caps[1].split(',').map(str::trim).filter(|k| !k.is_empty()) {
                match EntityId::parse(key) {
                    Ok(id) if id.is_item() => {
                        if seen_ids.insert(id) {
                            out.ids.push(id);
                        }
                    }
                    _ => skip(&mut out, key.to_string()),
                }
            }
        }
        if !matched {
            skip(&mut out, line.trim().to_string());
        }
    }
    out
}

/// Escapes BibTeX/LaTeX specials. Braces pass through when balanced.
pub fn escape_value(value: &str) -> String {
    let mut depth = 0i64;
    let mut balanced = true;
    for c in value.chars() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth < 0 {
                    balanced = false;
                }
            }
            _ => {}
        }
    }
    balanced &= depth == 0;
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' | '%' | '#' | '_' | '$' => {
                out.push('\\');
                out.push(c);
            }
            '\\' => out.push_str("\\textbackslash{}"),
            '~' => out.push_str("\\textasciitilde{}"),
            '^' => out.push_str("\\textasciicircum{}"),
            '{' if !balanced => out.push_str("\\textbraceleft{}"),
            '}' if !balanced => out.push_str("\\textbraceright{}"),
            '\r' | '\n' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

pub fn format_bibtex(entry: &BibEntry) -> String {
    let mut out = format!("@{}{{{},\n", entry.entry_type.name(), entry.cite_key);
    for (name, value) in &entry.fields {
        let _ = writeln!(out, "  {name} = {{{}}},", escape_value(value));
    }
    out.push_str("}\n");
    out
}

fn text_value(value: &DataValue) -> Option<String> {
    match value {
        DataValue::Quantity { amount, .. } => Some(amount.trim_start_matches('+').to_string()),
        other => other.as_text().map(str::to_string),
    }
}

/// Entity ids whose labels an entry needs.
fn label_dependencies(entity: &Entity, registry: &PropertyRegistry) -> Vec<EntityId> {
    entity
        .values(registry.get(Role::Author))
        .chain(entity.values(registry.get(Role::PublishedIn)))
        .filter_map(DataValue::as_entity)
        .collect()
}

fn build_entry(
    id: EntityId,
    entity: &Entity,
    labels: &BTreeMap<EntityId, String>,
    registry: &PropertyRegistry,
    language: &str,
) -> BibEntry {
    let p = |role| registry.get(role);
    let instance_of: Vec<EntityId> = entity
        .values(p(Role::InstanceOf))
        .filter_map(DataValue::as_entity)
        .collect();
    let entry_type = if instance_of.contains(&classes::scientific_article()) {
        EntryType::Article
    } else if instance_of.contains(&classes::book()) {
        EntryType::Book
    } else {
        EntryType::Misc
    };
    let mut entry = BibEntry::new(entry_type, id);
    let label_of = |id: EntityId| labels.get(&id).cloned().unwrap_or_else(|| id.to_string());

    let title = entity
        .values(p(Role::Title))
        .find_map(text_value)
        .or_else(|| entity.labels.get(language).cloned());
    if let Some(title) = title {
        entry.fields.insert("title".into(), title);
    }

    let ordinal_property = p(Role::SeriesOrdinal);
    let mut authors: Vec<(Option<u32>, String)> = Vec::new();
    for statement in entity.statements(p(Role::Author)) {
        if let Some(author) = statement.value.as_ref().and_then(DataValue::as_entity) {
            authors.push((ordinal(statement.qualifier(ordinal_property)), label_of(author)));
        }
    }
    for statement in entity.statements(p(Role::AuthorNameString)) {
        if let Some(name) = statement.value.as_ref().and_then(DataValue::as_text) {
            authors.push((ordinal(statement.qualifier(ordinal_property)), name.to_string()));
        }
    }
    authors.sort_by_key(|(o, _)| (o.is_none(), *o));
    if !authors.is_empty() {
        let names: Vec<String> = authors.into_iter().map(|(_, n)| n).collect();
        entry.fields.insert("author".into(), names.join(" and "));
    }

    if let Some(venue) = entity
        .values(p(Role::PublishedIn))
        .find_map(DataValue::as_entity)
    {
        let key = if entry_type == EntryType::Book {
            "series"
        } else {
            "journal"
        };
        entry.fields.insert(key.into(), label_of(venue));
    }
    for (role, field) in [
        (Role::Volume, "volume"),
        (Role::Issue, "number"),
        (Role::Pages, "pages"),
    ] {
        if let Some(value) = entity.values(p(role)).find_map(text_value) {
            entry.fields.insert(field.into(), value);
        }
    }
    if let Some(year) = entity.values(p(Role::PublicationDate)).find_map(DataValue::year) {
        entry.fields.insert("year".into(), year.to_string());
    }
    for (role, field) in [(Role::Doi, "doi"), (Role::FullWorkUrl, "url")] {
        if let Some(value) = entity.values(p(role)).find_map(text_value) {
            entry.fields.insert(field.into(), value);
        }
    }
    entry
}

fn ordinal(value: Option<&DataValue>) -> Option<u32> {
    value?.as_text()?.trim().parse().ok()
}

async fn fetch_entities_tolerant(
    ids: &[EntityId],
    client: &EntityApiClient,
) -> Result<BTreeMap<EntityId, Entity>, EntityApiError> {
    match client.fetch_entities(ids).await {
        // one bad id poisons a batch request; retry one by one
        Err(EntityApiError::Api { code, .. }) if code == "no-such-entity" && ids.len() > 1 => {
            let mut out = BTreeMap::new();
            for id in ids {
                match client.fetch_entities(&[*id]).await {
                    Ok(found) => out.extend(found),
                    Err(EntityApiError::Api { code, .. }) if code == "no-such-entity" => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        }
        Err(EntityApiError::Api { code, .. }) if code == "no-such-entity" => Ok(BTreeMap::new()),
        other => other,
    }
}

/// Entries for `ids` in the given order, with per-id failures.
pub async fn fetch_entries(
    ids: &[EntityId],
    client: &EntityApiClient,
    registry: &PropertyRegistry,
    language: &str,
) -> Vec<(EntityId, Result<BibEntry, BibError>)> {
    let items: Vec<EntityId> = ids.iter().copied().filter(|id| id.is_item()).collect();
    let entities = if items.is_empty() {
        Ok(BTreeMap::new())
    } else {
        fetch_entities_tolerant(&items, client).await
    };
    let entities = match entities {
        Ok(entities) => entities,
        Err(error) => {
            let message = error.to_string();
            return ids
                .iter()
                .map(|&id| {
                    let err = if id.is_item() {
                        BibError::Api(EntityApiError::Transport(message.clone()))
                    } else {
                        BibError::NotAnItem(id)
                    };
                    (id, Err(err))
                })
                .collect();
        }
    };
    let wanted: Vec<EntityId> = entities
        .values()
        .flat_map(|e| label_dependencies(e, registry))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // labels are cosmetic; ids stand in when they cannot be fetched
    let labels = if wanted.is_empty() {
        BTreeMap::new()
    } else {
        client
            .fetch_labels(&wanted, language)
            .await
            .unwrap_or_default()
    };
    ids.iter()
        .map(|&id| {
            let result = if !id.is_item() {
                Err(BibError::NotAnItem(id))
            } else {
                match entities.get(&id) {
                    Some(entity) => Ok(build_entry(id, entity, &labels, registry, language)),
                    None => Err(BibError::NotFound(id)),
                }
            };
            (id, result)
        })
        .collect()
}

pub async fn fetch_entry(
    id: EntityId,
    client: &EntityApiClient,
    registry: &PropertyRegistry,
) -> Result<BibEntry, BibError> {
    fetch_entries(&[id], client, registry, "en")
        .await
        .pop()
        .map(|(_, r)| r)
        .unwrap_or(Err(BibError::NotFound(id)))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BibReport {
    pub written: usize,
    pub skipped: Vec<String>,
    pub failures: Vec<BibFailure>,
    pub out_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BibFailure {
    pub id: EntityId,
    pub error: String,
}

/// `paper.aux` → `paper.bib`; other names get `.bib` appended.
pub fn default_bib_path(aux_path: &Path) -> PathBuf {
    if aux_path.extension().is_some_and(|e| e == "aux") {
        aux_path.with_extension("bib")
    } else {
        let mut name = aux_path.as_os_str().to_owned();
        name.push(".bib");
        PathBuf::from(name)
    }
}

pub async fn write_bib_from_aux(
    aux_path: &Path,
    out_path: Option<&Path>,
    client: &EntityApiClient,
    registry: &PropertyRegistry,
) -> Result<BibReport, BibError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BibError::Io { path, source }
    };
    let content = std::fs::read_to_string(aux_path).map_err(io(aux_path))?;
    let keys = parse_aux(&content);
    let out_path = out_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_bib_path(aux_path));
    let mut report = BibReport {
        skipped: keys.skipped,
        out_path: out_path.clone(),
        ..BibReport::default()
    };
    let mut text = String::new();
    if !keys.ids.is_empty() {
        for (id, result) in fetch_entries(&keys.ids, client, registry, "en").await {
            match result {
                Ok(entry) => {
                    if !text.is_empty() {
                        text.push('\n');
                    }
                    text.push_str(&format_bibtex(&entry));
                    report.written += 1;
                }
                Err(error) => report.failures.push(BibFailure {
                    id,
                    error: error.to_string(),
                }),
            }
        }
    }
    std::fs::write(&out_path, text).map_err(io(&out_path))?;
    Ok(report)
}
