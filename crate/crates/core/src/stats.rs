//! Client-side aggregation for the chart panels.
//!
//! Fractional quantities are `f64`; counts are exact integers.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{AuthorEntry, AuthorRef, EntityId, ResultSet, Row, WorkRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("ordinal {ordinal} outside 1..={author_count}")]
    OrdinalOutOfRange { ordinal: u32, author_count: u32 },
    #[error("author count of {0} is zero")]
    ZeroAuthorCount(EntityId),
    #[error("row {row}: column {column:?} missing or malformed")]
    MalformedRow { row: usize, column: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthorRole {
    First,
    Middle,
    Last,
    Solo,
    Unknown,
}

impl AuthorRole {
    pub const ALL: [AuthorRole; 5] = [
        AuthorRole::First,
        AuthorRole::Middle,
        AuthorRole::Last,
        AuthorRole::Solo,
        AuthorRole::Unknown,
    ];

    pub fn key(self) -> &'static str {
        match self {
            AuthorRole::First => "first",
            AuthorRole::Middle => "middle",
            AuthorRole::Last => "last",
            AuthorRole::Solo => "solo",
            AuthorRole::Unknown => "unknown",
        }
    }
}

/// Position of an author in a work's author list.
pub fn classify_role(ordinal: Option<u32>, author_count: u32) -> Result<AuthorRole, StatsError> {
    if author_count == 0 {
        return Err(StatsError::OrdinalOutOfRange {
            ordinal: ordinal.unwrap_or(0),
            author_count,
        });
    }
    if let Some(o) = ordinal {
        if o == 0 || o > author_count {
            return Err(StatsError::OrdinalOutOfRange {
                ordinal: o,
                author_count,
            });
        }
    }
    Ok(match (ordinal, author_count) {
        (_, 1) => AuthorRole::Solo,
        (Some(1), _) => AuthorRole::First,
        (Some(o), n) if o == n => AuthorRole::Last,
        (Some(_), _) => AuthorRole::Middle,
        (None, _) => AuthorRole::Unknown,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct YearRoleHistogram {
    pub cells: BTreeMap<(i32, AuthorRole), u64>,
}

impl YearRoleHistogram {
    pub fn get(&self, year: i32, role: AuthorRole) -> u64 {
        self.cells.get(&(year, role)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.cells.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn years(&self) -> BTreeSet<i32> {
        self.cells.keys().map(|(y, _)| *y).collect()
    }

    /// Five stacked series, one per role, each with a point for every year
    /// present in the histogram.
    pub fn series_json(&self) -> Value {
        let years = self.years();
        let series: Vec<Value> = AuthorRole::ALL
            .iter()
            .map(|&role| {
                let points: Vec<Value> = years
                    .iter()
                    .map(|&y| json!({"year": y, "count": self.get(y, role)}))
                    .collect();
                json!({"key": role.key(), "points": points})
            })
            .collect();
        Value::Array(series)
    }
}

/// Counts works of `subject` per publication year and author role.
///
/// An ordinal that contradicts the author count is classified as
/// `Unknown` instead of failing the whole chart.
pub fn papers_per_year_by_role(records: &[WorkRecord], subject: EntityId) -> YearRoleHistogram {
    let mut hist = YearRoleHistogram::default();
    for record in records {
        let Some(year) = record.publication_year else {
            continue;
        };
        let Some(entry) = record.author_entry(subject) else {
            continue;
        };
        let n = record.author_count().max(record.authors.len() as u32).max(1);
        let role = classify_role(entry.ordinal, n).unwrap_or(AuthorRole::Unknown);
        *hist.cells.entry((year, role)).or_default() += 1;
    }
    hist
}

/// Per-(year, author) sums with the labels needed for display.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct YearAuthorSeries {
    pub values: BTreeMap<(i32, EntityId), f64>,
}

impl YearAuthorSeries {
    pub fn total(&self) -> f64 {
        self.values.values().sum()
    }

    pub fn get(&self, year: i32, author: EntityId) -> f64 {
        self.values.get(&(year, author)).copied().unwrap_or(0.0)
    }

    /// One series per author, ordered by author id.
    pub fn series_json(&self, labels: &BTreeMap<EntityId, String>) -> Value {
        let mut by_author: BTreeMap<EntityId, Vec<Value>> = BTreeMap::new();
        for (&(year, author), &value) in &self.values {
            by_author
                .entry(author)
                .or_default()
                .push(json!({"year": year, "value": value}));
        }
        Value::Array(
            by_author
                .into_iter()
                .map(|(author, points)| {
                    let label = labels
                        .get(&author)
                        .cloned()
                        .unwrap_or_else(|| author.to_string());
                    json!({"key": author.to_string(), "label": label, "points": points})
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PageProduction {
    pub series: YearAuthorSeries,
    /// Works without a page count.
    pub missing_pages: u32,
    /// Works with pages but no publication year.
    pub undated: u32,
}

/// Pages of each work divided evenly over its authors, credited to the
/// listed authors in `subject_authors`.
pub fn normalized_page_production(
    records: &[WorkRecord],
    subject_authors: &BTreeSet<EntityId>,
) -> PageProduction {
    let mut out = PageProduction::default();
    for record in records {
        let Some(pages) = record.pages else {
            out.missing_pages += 1;
            continue;
        };
        let Some(year) = record.publication_year else {
            out.undated += 1;
            continue;
        };
        let n = record.author_count().max(record.authors.len() as u32);
        if n == 0 {
            continue;
        }
        let share = pages as f64 / n as f64;
        let credited: BTreeSet<EntityId> = record
            .authors
            .iter()
            .filter_map(|a| a.author.item())
            .filter(|a| subject_authors.contains(a))
            .collect();
        for author in credited {
            *out.series.values.entry((year, author)).or_default() += share;
        }
    }
    out
}

/// One (citation event, affiliated author of the cited work) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CitationRow {
    pub citing_work: EntityId,
    pub cited_work: EntityId,
    /// Publication year of the citing work.
    pub year: i32,
    pub cited_author_count: u32,
    pub cited_author: EntityId,
}

/// Each citation of a work adds `1 / author_count` to every affiliated
/// author of the cited work, in the citing work's year.
pub fn coauthor_normalized_citations(rows: &[CitationRow]) -> Result<YearAuthorSeries, StatsError> {
    let mut out = YearAuthorSeries::default();
    for row in rows {
        if row.cited_author_count == 0 {
            return Err(StatsError::ZeroAuthorCount(row.cited_work));
        }
        *out
            .values
            .entry((row.year, row.cited_author))
            .or_default() += 1.0 / row.cited_author_count as f64;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VenueCounts {
    pub venue: EntityId,
    pub label: String,
    pub works: u64,
    pub citations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScatterPoint {
    pub x: u64,
    pub y: u64,
    pub venue: EntityId,
    pub label: String,
}

/// Works versus citations per venue, most productive venue first.
pub fn publisher_scatter(rows: &[VenueCounts]) -> Vec<ScatterPoint> {
    let mut points: Vec<ScatterPoint> = rows
        .iter()
        .map(|r| ScatterPoint {
            x: r.works,
            y: r.citations,
            venue: r.venue,
            label: r.label.clone(),
        })
        .collect();
    points.sort_by(|a, b| b.x.cmp(&a.x).then(a.venue.cmp(&b.venue)));
    points
}

fn entity(row: &Row, idx: usize, column: &str) -> Result<EntityId, StatsError> {
    row.get(column)
        .and_then(|t| t.as_entity())
        .ok_or_else(|| malformed(idx, column))
}

fn opt_int(row: &Row, idx: usize, column: &str) -> Result<Option<i64>, StatsError> {
    match row.get(column) {
        None => Ok(None),
        Some(t) => t.as_integer().map(Some).ok_or_else(|| malformed(idx, column)),
    }
}

fn count(row: &Row, idx: usize, column: &str) -> Result<u32, StatsError> {
    opt_int(row, idx, column)?
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| malformed(idx, column))
}

fn opt_positive(row: &Row, idx: usize, column: &str) -> Result<Option<u32>, StatsError> {
    match opt_int(row, idx, column)? {
        None => Ok(None),
        Some(v) => u32::try_from(v)
            .ok()
            .filter(|v| *v > 0)
            .map(Some)
            .ok_or_else(|| malformed(idx, column)),
    }
}

fn opt_year(row: &Row, idx: usize, column: &str) -> Result<Option<i32>, StatsError> {
    match row.get(column) {
        None => Ok(None),
        Some(t) => t.as_year().map(Some).ok_or_else(|| malformed(idx, column)),
    }
}

fn label(row: &Row, column: &str, fallback: EntityId) -> String {
    row.get(&format!("{column}Label"))
        .map(|t| t.value().to_string())
        .unwrap_or_else(|| fallback.to_string())
}

fn malformed(row: usize, column: &str) -> StatsError {
    StatsError::MalformedRow {
        row,
        column: column.to_string(),
    }
}

/// Records from an author's works listing (`work, workLabel, year,
/// ordinal, author_count`). Only the subject is listed on each record.
pub fn records_from_author_rows(
    results: &ResultSet,
    subject: EntityId,
) -> Result<Vec<WorkRecord>, StatsError> {
    results
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let work = entity(row, i, "work")?;
            let mut record = WorkRecord::new(work, label(row, "work", work));
            record.publication_year = opt_year(row, i, "year")?;
            record.declared_author_count = Some(count(row, i, "author_count")?);
            record.authors.push(AuthorEntry {
                author: AuthorRef::Item(subject),
                ordinal: opt_positive(row, i, "ordinal")?,
            });
            Ok(record)
        })
        .collect()
}

/// Records from (work, author) page rows, one record per work listing
/// every affiliated author. Also returns author labels.
pub fn records_from_page_rows(
    results: &ResultSet,
) -> Result<(Vec<WorkRecord>, BTreeMap<EntityId, String>), StatsError> {
    let mut records: BTreeMap<EntityId, WorkRecord> = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for (i, row) in results.rows.iter().enumerate() {
        let work = entity(row, i, "work")?;
        let author = entity(row, i, "author")?;
        labels.insert(author, label(row, "author", author));
        let record = records
            .entry(work)
            .or_insert_with(|| WorkRecord::new(work, label(row, "work", work)));
        record.publication_year = opt_year(row, i, "year")?;
        record.pages = opt_positive(row, i, "pages")?;
        record.declared_author_count = Some(count(row, i, "author_count")?);
        if record.author_entry(author).is_none() {
            record.authors.push(AuthorEntry {
                author: AuthorRef::Item(author),
                ordinal: None,
            });
        }
    }
    Ok((records.into_values().collect(), labels))
}

pub fn citation_rows_from(
    results: &ResultSet,
) -> Result<(Vec<CitationRow>, BTreeMap<EntityId, String>), StatsError> {
    let mut labels = BTreeMap::new();
    let mut rows = Vec::with_capacity(results.rows.len());
    for (i, row) in results.rows.iter().enumerate() {
        let cited_author = entity(row, i, "author")?;
        labels.insert(cited_author, label(row, "author", cited_author));
        rows.push(CitationRow {
            citing_work: entity(row, i, "citing_work")?,
            cited_work: entity(row, i, "work")?,
            year: opt_year(row, i, "year")?.ok_or_else(|| malformed(i, "year"))?,
            cited_author_count: count(row, i, "author_count")?,
            cited_author,
        });
    }
    Ok((rows, labels))
}

pub fn venue_counts_from(results: &ResultSet) -> Result<Vec<VenueCounts>, StatsError> {
    results
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let venue = entity(row, i, "venue")?;
            Ok(VenueCounts {
                venue,
                label: label(row, "venue", venue),
                works: count(row, i, "works")? as u64,
                citations: count(row, i, "citations")? as u64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::qid;
    use proptest::prelude::*;

    fn work(n: u64, year: Option<i32>, pages: Option<u32>, authors: &[(u64, Option<u32>)]) -> WorkRecord {
        let mut r = WorkRecord::new(EntityId::item(n).unwrap(), format!("w{n}"));
        r.publication_year = year;
        r.pages = pages;
        r.authors = authors
            .iter()
            .map(|&(a, o)| AuthorEntry {
                author: AuthorRef::Item(EntityId::item(a).unwrap()),
                ordinal: o,
            })
            .collect();
        r
    }

    #[test]
    fn role_examples() {
        assert_eq!(classify_role(Some(1), 1), Ok(AuthorRole::Solo));
        assert_eq!(classify_role(None, 1), Ok(AuthorRole::Solo));
        assert_eq!(classify_role(Some(1), 5), Ok(AuthorRole::First));
        assert_eq!(classify_role(Some(5), 5), Ok(AuthorRole::Last));
        assert_eq!(classify_role(Some(3), 5), Ok(AuthorRole::Middle));
        assert_eq!(classify_role(None, 4), Ok(AuthorRole::Unknown));
        assert!(classify_role(Some(6), 5).is_err());
        assert!(classify_role(Some(0), 5).is_err());
        assert!(classify_role(None, 0).is_err());
    }

    #[test]
    fn histogram_filters() {
        assert!(papers_per_year_by_role(&[], qid("Q1")).is_empty());
        let records = vec![
            work(10, Some(2001), None, &[(2, Some(1)), (3, Some(2))]),
            work(11, Some(2001), None, &[(1, Some(2)), (3, Some(1))]),
            work(12, None, None, &[(1, None)]),
        ];
        let h = papers_per_year_by_role(&records, qid("Q1"));
        assert_eq!(h.total(), 1);
        assert_eq!(h.get(2001, AuthorRole::Last), 1);
        let series = h.series_json();
        assert_eq!(series.as_array().unwrap().len(), 5);
    }

    #[test]
    fn pages_split_evenly() {
        let subjects: BTreeSet<_> = [qid("Q1"), qid("Q2")].into();
        let records = vec![
            work(10, Some(2010), Some(12), &[(1, None), (2, None), (3, None), (4, None)]),
            work(11, Some(2010), None, &[(1, None)]),
        ];
        let out = normalized_page_production(&records, &subjects);
        assert_eq!(out.series.get(2010, qid("Q1")), 3.0);
        assert_eq!(out.series.get(2010, qid("Q2")), 3.0);
        assert_eq!(out.series.get(2010, qid("Q3")), 0.0);
        assert_eq!(out.missing_pages, 1);
    }

    #[test]
    fn citations_split_by_author_count() {
        let rows: Vec<CitationRow> = (0..6)
            .flat_map(|i| {
                (1..=3).map(move |a| CitationRow {
                    citing_work: EntityId::item(100 + i).unwrap(),
                    cited_work: qid("Q10"),
                    year: 2020,
                    cited_author_count: 3,
                    cited_author: EntityId::item(a).unwrap(),
                })
            })
            .collect();
        let out = coauthor_normalized_citations(&rows).unwrap();
        for a in ["Q1", "Q2", "Q3"] {
            assert!((out.get(2020, qid(a)) - 2.0).abs() < 1e-9);
        }
        assert!(coauthor_normalized_citations(&[]).unwrap().values.is_empty());
        let mut bad = rows[0].clone();
        bad.cited_author_count = 0;
        assert_eq!(
            coauthor_normalized_citations(&[bad]),
            Err(StatsError::ZeroAuthorCount(qid("Q10")))
        );
    }

    #[test]
    fn scatter_order() {
        let v = |id: &str, w, c| VenueCounts {
            venue: qid(id),
            label: id.into(),
            works: w,
            citations: c,
        };
        let pts = publisher_scatter(&[v("Q20", 2, 3), v("Q9", 2, 1), v("Q100", 10, 50)]);
        let order: Vec<_> = pts.iter().map(|p| p.venue.to_string()).collect();
        assert_eq!(order, ["Q100", "Q9", "Q20"]);
        assert_eq!((pts[0].x, pts[0].y), (10, 50));
    }

    proptest! {
        #[test]
        fn role_total_and_known_with_ordinal(n in 1u32..50, o in 1u32..50) {
            prop_assume!(o <= n);
            let role = classify_role(Some(o), n).unwrap();
            prop_assert_ne!(role, AuthorRole::Unknown);
            prop_assert_eq!(role == AuthorRole::Solo, n == 1);
        }

        #[test]
        fn page_mass_conserved(pages in 1u32..2000, n in 1u64..30, year in 1900i32..2030) {
            let authors: Vec<(u64, Option<u32>)> = (1..=n).map(|a| (a, None)).collect();
            let r = work(1000, Some(year), Some(pages), &authors);
            let all: BTreeSet<_> = (1..=n).map(|a| EntityId::item(a).unwrap()).collect();
            let out = normalized_page_production(&[r], &all);
            prop_assert!((out.series.total() - pages as f64).abs() < 1e-9);
        }

        #[test]
        fn citation_mass_conserved(counts in proptest::collection::vec((1u32..8, 0u32..6), 0..20)) {
            // each cited work has all its authors listed; mass == citation events
            let mut rows = Vec::new();
            let mut events = 0u32;
            for (w, &(n, cites)) in counts.iter().enumerate() {
                for c in 0..cites {
                    events += 1;
                    for a in 1..=n {
                        rows.push(CitationRow {
                            citing_work: EntityId::item(10_000 + c as u64).unwrap(),
                            cited_work: EntityId::item(1 + w as u64).unwrap(),
                            year: 2000 + c as i32,
                            cited_author_count: n,
                            cited_author: EntityId::item(100 * (w as u64 + 1) + a as u64).unwrap(),
                        });
                    }
                }
            }
            let out = coauthor_normalized_citations(&rows).unwrap();
            prop_assert!((out.total() - events as f64).abs() < 1e-9);
        }

        #[test]
        fn histogram_total_bounded(specs in proptest::collection::vec((proptest::option::of(1990i32..2020), 1u32..6, proptest::option::of(1u32..6), any::<bool>()), 0..40)) {
            let subject = 1u64;
            let mut records = Vec::new();
            let mut expected = 0u64;
            for (i, &(year, n, ordinal, is_author)) in specs.iter().enumerate() {
                let ordinal = ordinal.filter(|o| *o <= n);
                let mut authors: Vec<(u64, Option<u32>)> = (2..=n as u64).map(|a| (a + 100, None)).collect();
                if is_author {
                    authors.push((subject, ordinal));
                    if year.is_some() {
                        expected += 1;
                    }
                } else {
                    authors.push((999, None));
                }
                records.push(work(1000 + i as u64, year, None, &authors));
            }
            let h = papers_per_year_by_role(&records, EntityId::item(subject).unwrap());
            prop_assert_eq!(h.total(), expected);
            prop_assert!(h.total() <= records.len() as u64);
        }
    }
}
