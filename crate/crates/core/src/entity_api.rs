//! Client for the MediaWiki action API: `wbgetentities`, `wbsearchentities`
//! and TextExtracts.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tracing::debug;

use crate::model::EntityId;
use crate::sparql::DEFAULT_USER_AGENT;

pub const DEFAULT_API_URL: &str = "https://www.wikidata.org/w/api.php";
/// Maximum ids per `wbgetentities` request.
pub const BATCH_LIMIT: usize = 50;

#[derive(Debug, Error)]
pub enum EntityApiError {
    #[error("at least one entity id is required")]
    EmptyInput,
    #[error("search term is blank")]
    BlankTerm,
    #[error("{0} is not an item id")]
    NotAnItem(EntityId),
    #[error("unrecognised site tag {0:?}")]
    BadSite(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("API error {code}: {info}")]
    Api { code: String, info: String },
    #[error("unexpected API response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub api_url: String,
    /// Overrides the per-wiki API URL (normally derived from the site tag).
    pub wiki_api_url: Option<String>,
    pub timeout: Duration,
    pub user_agent: String,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            api_url: DEFAULT_API_URL.to_string(),
            wiki_api_url: None,
            timeout: Duration::from_secs(30),
            user_agent: DEFAULT_USER_AGENT.to_string(),
        }
    }
}

impl ApiConfig {
    pub fn new(api_url: impl Into<String>) -> Self {
        ApiConfig {
            api_url: api_url.into(),
            ..ApiConfig::default()
        }
    }

    /// Defaults overridden by `SCHOLIA_API_URL` and `SCHOLIA_WIKI_API_URL`.
    pub fn from_env() -> Self {
        let mut config = ApiConfig::default();
        if let Ok(url) = std::env::var("SCHOLIA_API_URL") {
            config.api_url = url;
        }
        if let Ok(url) = std::env::var("SCHOLIA_WIKI_API_URL") {
            config.wiki_api_url = Some(url);
        }
        config
    }

    fn wiki_api_for(&self, site: &str) -> Result<String, EntityApiError> {
        if let Some(url) = &self.wiki_api_url {
            return Ok(url.clone());
        }
        let lang = site
            .strip_suffix("wiki")
            .filter(|l| !l.is_empty() && l.bytes().all(|b| b.is_ascii_lowercase() || b == b'_'))
            .ok_or_else(|| EntityApiError::BadSite(site.to_string()))?;
        Ok(format!("https://{}.wikipedia.org/w/api.php", lang.replace('_', "-")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchHit {
    pub id: EntityId,
    pub label: String,
    pub description: Option<String>,
}

/// A statement value, decoded from a Wikibase `datavalue`.
#[derive(Debug, Clone, PartialEq)]
pub enum DataValue {
    Entity(EntityId),
    String(String),
    Time { time: String, precision: u8 },
    Quantity { amount: String, unit: String },
    Monolingual { text: String, language: String },
    Coordinate { latitude: f64, longitude: f64 },
    Other(Value),
}

impl DataValue {
    pub fn as_entity(&self) -> Option<EntityId> {
        match self {
            DataValue::Entity(id) => Some(*id),
            _ => None,
        }
    }

    /// Text view for string-like values.
    pub fn as_text(&self) -> Option<&str> {
        match self {
            DataValue::String(s) => Some(s),
            DataValue::Monolingual { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn year(&self) -> Option<i32> {
        match self {
            DataValue::Time { time, .. } => crate::model::parse_year(time),
            _ => None,
        }
    }

    pub fn from_json(value: &Value) -> Option<DataValue> {
        let inner = value.get("value")?;
        Some(match value.get("type")?.as_str()? {
            "wikibase-entityid" => {
                DataValue::Entity(EntityId::parse(inner.get("id")?.as_str()?).ok()?)
            }
            "string" => DataValue::String(inner.as_str()?.to_string()),
            "time" => DataValue::Time {
                time: inner.get("time")?.as_str()?.to_string(),
                precision: inner.get("precision").and_then(Value::as_u64).unwrap_or(11) as u8,
            },
            "quantity" => DataValue::Quantity {
                amount: inner.get("amount")?.as_str()?.to_string(),
                unit: inner
                    .get("unit")
                    .and_then(Value::as_str)
                    .unwrap_or("1")
                    .to_string(),
            },
            "monolingualtext" => DataValue::Monolingual {
                text: inner.get("text")?.as_str()?.to_string(),
                language: inner.get("language")?.as_str()?.to_string(),
            },
            "globecoordinate" => DataValue::Coordinate {
                latitude: inner.get("latitude")?.as_f64()?,
                longitude: inner.get("longitude")?.as_f64()?,
            },
            _ => DataValue::Other(value.clone()),
        })
    }

    pub fn to_json(&self) -> Value {
        match self {
            DataValue::Entity(id) => json!({
                "type": "wikibase-entityid",
                "value": {
                    "entity-type": if id.is_item() { "item" } else { "property" },
                    "numeric-id": id.number(),
                    "id": id.to_string(),
                }
            }),
            DataValue::String(s) => json!({"type": "string", "value": s}),
            DataValue::Time { time, precision } => json!({
                "type": "time",
                "value": {
                    "time": time,
                    "timezone": 0,
                    "before": 0,
                    "after": 0,
                    "precision": precision,
                    "calendarmodel": "http://www.wikidata.org/entity/Q1985727",
                }
            }),
            DataValue::Quantity { amount, unit } => json!({
                "type": "quantity",
                "value": {"amount": amount, "unit": unit}
            }),
            DataValue::Monolingual { text, language } => json!({
                "type": "monolingualtext",
                "value": {"text": text, "language": language}
            }),
            DataValue::Coordinate {
                latitude,
                longitude,
            } => json!({
                "type": "globecoordinate",
                "value": {
                    "latitude": latitude,
                    "longitude": longitude,
                    "precision": 0.0001,
                    "globe": "http://www.wikidata.org/entity/Q2",
                }
            }),
            DataValue::Other(v) => v.clone(),
        }
    }
}

pub type SnakMap = BTreeMap<EntityId, Vec<DataValue>>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Statement {
    /// `None` for "no value"/"unknown value" snaks.
    pub value: Option<DataValue>,
    pub qualifiers: SnakMap,
    pub references: Vec<SnakMap>,
}

impl Statement {
    pub fn qualifier(&self, property: EntityId) -> Option<&DataValue> {
        self.qualifiers.get(&property).and_then(|v| v.first())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Entity {
    pub labels: BTreeMap<String, String>,
    pub descriptions: BTreeMap<String, String>,
    pub claims: BTreeMap<EntityId, Vec<Statement>>,
    pub sitelinks: BTreeMap<String, String>,
}

impl Entity {
    pub fn statements(&self, property: EntityId) -> &[Statement] {
        self.claims.get(&property).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn values(&self, property: EntityId) -> impl Iterator<Item = &DataValue> {
        self.statements(property)
            .iter()
            .filter_map(|s| s.value.as_ref())
    }

    pub fn first_value(&self, property: EntityId) -> Option<&DataValue> {
        self.values(property).next()
    }

    /// Parses one entity object of a `wbgetentities` response.
    pub fn from_json(value: &Value) -> Result<Entity, EntityApiError> {
        let mut entity = Entity::default();
        let text_map = |key: &str| -> BTreeMap<String, String> {
            value
                .get(key)
                .and_then(Value::as_object)
                .map(|m| {
                    m.iter()
                        .filter_map(|(lang, v)| {
                            Some((lang.clone(), v.get("value")?.as_str()?.to_string()))
                        })
                        .collect()
                })
                .unwrap_or_default()
        };
        entity.labels = text_map("labels");
        entity.descriptions = text_map("descriptions");
        if let Some(sitelinks) = value.get("sitelinks").and_then(Value::as_object) {
            for (site, link) in sitelinks {
                if let Some(title) = link.get("title").and_then(Value::as_str) {
                    entity.sitelinks.insert(site.clone(), title.to_string());
                }
            }
        }
        if let Some(claims) = value.get("claims").and_then(Value::as_object) {
            for (property, statements) in claims {
                let property = EntityId::parse(property)
                    .map_err(|_| EntityApiError::Malformed(format!("claim key {property:?}")))?;
                let list = statements.as_array().ok_or_else(|| {
                    EntityApiError::Malformed(format!("claims.{property} is not an array"))
                })?;
                let parsed = list.iter().map(parse_statement).collect();
                entity.claims.insert(property, parsed);
            }
        }
        Ok(entity)
    }

    pub fn to_json(&self, id: EntityId) -> Value {
        let text_map = |m: &BTreeMap<String, String>| -> Value {
            m.iter()
                .map(|(lang, text)| (lang.clone(), json!({"language": lang, "value": text})))
                .collect::<serde_json::Map<_, _>>()
                .into()
        };
        let snak = |property: EntityId, value: Option<&DataValue>| -> Value {
            match value {
                Some(v) => json!({
                    "snaktype": "value",
                    "property": property.to_string(),
                    "datavalue": v.to_json(),
                }),
                None => json!({"snaktype": "novalue", "property": property.to_string()}),
            }
        };
        let snak_map = |map: &SnakMap| -> Value {
            map.iter()
                .map(|(p, values)| {
                    let snaks: Vec<Value> = values.iter().map(|v| snak(*p, Some(v))).collect();
                    (p.to_string(), Value::from(snaks))
                })
                .collect::<serde_json::Map<_, _>>()
                .into()
        };
        let claims: serde_json::Map<String, Value> = self
            .claims
            .iter()
            .map(|(property, statements)| {
                let list: Vec<Value> = statements
                    .iter()
                    .map(|st| {
                        json!({
                            "mainsnak": snak(*property, st.value.as_ref()),
                            "type": "statement",
                            "rank": "normal",
                            "qualifiers": snak_map(&st.qualifiers),
                            "references": st.references.iter()
                                .map(|r| json!({"snaks": snak_map(r)}))
                                .collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                (property.to_string(), Value::from(list))
            })
            .collect();
        let sitelinks: serde_json::Map<String, Value> = self
            .sitelinks
            .iter()
            .map(|(site, title)| (site.clone(), json!({"site": site, "title": title})))
            .collect();
        json!({
            "type": if id.is_item() { "item" } else { "property" },
            "id": id.to_string(),
            "labels": text_map(&self.labels),
            "descriptions": text_map(&self.descriptions),
            "claims": claims,
            "sitelinks": sitelinks,
        })
    }
}

fn parse_snak_map(value: Option<&Value>) -> SnakMap {
    let mut map = SnakMap::new();
    let Some(object) = value.and_then(Value::as_object) else {
        return map;
    };
    for (property, snaks) in object {
        let Ok(property) = EntityId::parse(property) else {
            continue;
        };
        let values = snaks
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|snak| snak.get("datavalue").and_then(DataValue::from_json))
            .collect();
        map.insert(property, values);
    }
    map
}

fn parse_statement(value: &Value) -> Statement {
    Statement {
        value: value
            .get("mainsnak")
            .and_then(|s| s.get("datavalue"))
            .and_then(DataValue::from_json),
        qualifiers: parse_snak_map(value.get("qualifiers")),
        references: value
            .get("references")
            .and_then(Value::as_array)
            .map(|refs| {
                refs.iter()
                    .map(|r| parse_snak_map(r.get("snaks")))
                    .collect()
            })
            .unwrap_or_default(),
    }
}

#[derive(Deserialize)]
struct ApiErrorBody {
    code: String,
    info: String,
}

/// Shareable entity API client.
#[derive(Clone)]
pub struct EntityApiClient {
    config: ApiConfig,
    http: reqwest::Client,
}

impl EntityApiClient {
    pub fn new(config: ApiConfig) -> Result<Self, EntityApiError> {
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .user_agent(config.user_agent.clone())
            .build()
            .map_err(|e| EntityApiError::Transport(e.to_string()))?;
        Ok(EntityApiClient { config, http })
    }

    pub fn config(&self) -> &ApiConfig {
        &self.config
    }

    async fn call(&self, url: &str, params: &[(&str, &str)]) -> Result<Value, EntityApiError> {
        debug!(url, ?params, "entity api request");
        let response = self
            .http
            .get(url)
            .query(params)
            .query(&[("format", "json"), ("formatversion", "1")])
            .send()
            .await
            .map_err(|e| EntityApiError::Transport(e.to_string()))?;
        let status = response.status();
        let body: Value = response.json().await.map_err(|e| {
            EntityApiError::Malformed(format!("HTTP {status}: body is not JSON ({e})"))
        })?;
        if let Some(error) = body.get("error") {
            let error: ApiErrorBody = serde_json::from_value(error.clone())
                .map_err(|e| EntityApiError::Malformed(format!("error object: {e}")))?;
            return Err(EntityApiError::Api {
                code: error.code,
                info: error.info,
            });
        }
        if !status.is_success() {
            return Err(EntityApiError::Malformed(format!("HTTP {status}")));
        }
        Ok(body)
    }

    /// Fetches raw entity objects in batches of [`BATCH_LIMIT`]. Missing
    /// entities are absent from the returned map.
    async fn get_entities(
        &self,
        ids: &[EntityId],
        props: &str,
        extra: &[(&str, &str)],
    ) -> Result<BTreeMap<EntityId, Value>, EntityApiError> {
        if ids.is_empty() {
            return Err(EntityApiError::EmptyInput);
        }
        let mut out = BTreeMap::new();
        for chunk in ids.chunks(BATCH_LIMIT) {
            let joined = chunk
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("|");
            let mut params = vec![
                ("action", "wbgetentities"),
                ("ids", joined.as_str()),
                ("props", props),
            ];
            params.extend_from_slice(extra);
            let body = self.call(&self.config.api_url, &params).await?;
            let entities = body
                .get("entities")
                .and_then(Value::as_object)
                .ok_or_else(|| EntityApiError::Malformed("missing entities".into()))?;
            for (key, entity) in entities {
                if entity.get("missing").is_some() {
                    continue;
                }
                if let Ok(id) = EntityId::parse(key) {
                    out.insert(id, entity.clone());
                }
            }
        }
        Ok(out)
    }

    /// Labels in `language` for the given ids; ids without one are absent.
    pub async fn fetch_labels(
        &self,
        ids: &[EntityId],
        language: &str,
    ) -> Result<BTreeMap<EntityId, String>, EntityApiError> {
        let entities = self
            .get_entities(ids, "labels", &[("languages", language)])
            .await?;
        Ok(entities
            .into_iter()
            .filter(|(id, _)| ids.contains(id))
            .filter_map(|(id, entity)| {
                let label = entity
                    .get("labels")?
                    .get(language)?
                    .get("value")?
                    .as_str()?;
                Some((id, label.to_string()))
            })
            .collect())
    }

    pub async fn search_entities(
        &self,
        term: &str,
        limit: usize,
        language: &str,
    ) -> Result<Vec<SearchHit>, EntityApiError> {
        let term = term.trim();
        if term.is_empty() {
            return Err(EntityApiError::BlankTerm);
        }
        if limit == 0 {
            return Ok(Vec::new());
        }
        let limit_text = limit.to_string();
        let body = self
            .call(
                &self.config.api_url,
                &[
                    ("action", "wbsearchentities"),
                    ("search", term),
                    ("language", language),
                    ("uselang", language),
                    ("type", "item"),
                    ("limit", &limit_text),
                ],
            )
            .await?;
        let hits = body
            .get("search")
            .and_then(Value::as_array)
            .ok_or_else(|| EntityApiError::Malformed("missing search array".into()))?;
        Ok(hits
            .iter()
            .filter_map(|hit| {
                let id = EntityId::parse(hit.get("id")?.as_str()?).ok()?;
                Some(SearchHit {
                    id,
                    label: hit
                        .get("label")
                        .and_then(Value::as_str)
                        .unwrap_or_default()
                        .to_string(),
                    description: hit
                        .get("description")
                        .and_then(Value::as_str)
                        .map(str::to_string),
                })
            })
            .take(limit)
            .collect())
    }

    /// Plain-text introduction of the item's article on `site` (e.g.
    /// `enwiki`). The second request degrades to `None` on any failure.
    pub async fn fetch_extract(
        &self,
        id: EntityId,
        site: &str,
    ) -> Result<Option<String>, EntityApiError> {
        if !id.is_item() {
            return Err(EntityApiError::NotAnItem(id));
        }
        let wiki_api = self.config.wiki_api_for(site)?;
        let entities = self
            .get_entities(&[id], "sitelinks", &[("sitefilter", site)])
            .await?;
        let Some(title) = entities
            .get(&id)
            .and_then(|e| e.get("sitelinks"))
            .and_then(|s| s.get(site))
            .and_then(|s| s.get("title"))
            .and_then(Value::as_str)
        else {
            return Ok(None);
        };
        let body = match self
            .call(
                &wiki_api,
                &[
                    ("action", "query"),
                    ("prop", "extracts"),
                    ("exintro", "1"),
                    ("explaintext", "1"),
                    ("redirects", "1"),
                    ("titles", title),
                ],
            )
            .await
        {
            Ok(body) => body,
            Err(error) => {
                debug!(%id, %error, "extract fetch failed; omitting");
                return Ok(None);
            }
        };
        let extract = body
            .get("query")
            .and_then(|q| q.get("pages"))
            .and_then(Value::as_object)
            .and_then(|pages| {
                pages
                    .values()
                    .find_map(|p| p.get("extract").and_then(Value::as_str))
            })
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        Ok(extract)
    }

    /// Full entities (labels, claims, sitelinks).
    pub async fn fetch_entities(
        &self,
        ids: &[EntityId],
    ) -> Result<BTreeMap<EntityId, Entity>, EntityApiError> {
        let raw = self
            .get_entities(ids, "labels|descriptions|claims|sitelinks", &[])
            .await?;
        raw.iter()
            .map(|(id, value)| Ok((*id, Entity::from_json(value)?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::qid;

    #[test]
    fn wiki_api_url_from_site() {
        let config = ApiConfig::default();
        assert_eq!(
            config.wiki_api_for("enwiki").unwrap(),
            "https://en.wikipedia.org/w/api.php"
        );
        assert_eq!(
            config.wiki_api_for("zh_yuewiki").unwrap(),
            "https://zh-yue.wikipedia.org/w/api.php"
        );
        assert!(config.wiki_api_for("wiki").is_err());
        assert!(config.wiki_api_for("enwiktionary").is_err());
        let local = ApiConfig {
            wiki_api_url: Some("http://localhost/w/api.php".into()),
            ..ApiConfig::default()
        };
        assert_eq!(
            local.wiki_api_for("dewiki").unwrap(),
            "http://localhost/w/api.php"
        );
    }

    #[test]
    fn datavalue_json_round_trip() {
        let values = [
            DataValue::Entity(qid("Q5")),
            DataValue::String("utafrith".into()),
            DataValue::Time {
                time: "+2014-10-01T00:00:00Z".into(),
                precision: 11,
            },
            DataValue::Quantity {
                amount: "+8".into(),
                unit: "1".into(),
            },
            DataValue::Monolingual {
                text: "Wikidata".into(),
                language: "en".into(),
            },
            DataValue::Coordinate {
                latitude: 55.78,
                longitude: 12.52,
            },
        ];
        for value in values {
            assert_eq!(DataValue::from_json(&value.to_json()).as_ref(), Some(&value));
        }
    }

    #[test]
    fn entity_json_round_trip() {
        let mut entity = Entity::default();
        entity.labels.insert("en".into(), "Uta Frith".into());
        entity.sitelinks.insert("enwiki".into(), "Uta Frith".into());
        let mut qualifiers = SnakMap::new();
        qualifiers.insert(qid("P1545"), vec![DataValue::String("2".into())]);
        let mut reference = SnakMap::new();
        reference.insert(qid("P248"), vec![DataValue::Entity(qid("Q22253877"))]);
        entity.claims.insert(
            qid("P50"),
            vec![Statement {
                value: Some(DataValue::Entity(qid("Q8219"))),
                qualifiers,
                references: vec![reference],
            }],
        );
        let json = entity.to_json(qid("Q1"));
        assert_eq!(Entity::from_json(&json).unwrap(), entity);
        let st = &entity.statements(qid("P50"))[0];
        assert_eq!(
            st.qualifier(qid("P1545")).and_then(DataValue::as_text),
            Some("2")
        );
    }
}
