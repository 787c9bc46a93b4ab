//! Answers generated queries by direct interpretation of the fixture
//! statements: explicit loops, closures by graph search, aggregation by
//! hand. Its output is what the fixture endpoint replays.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde_json::{json, Value};

use super::dataset::{Dataset, FixtureValue};
use crate::model::{classes, Aspect, EntityId, PropertyRegistry, ResultSet, Role, Row, Term};
use crate::query::{self, PanelQuerySpec, PANELS};
use crate::resolver::{AspectRules, ExternalIdKind};
use crate::sparql::QueryText;

pub const GRAPH_CAPS: [u32; 2] = [100, query::PANEL_GRAPH_CAP];

/// Brute-force evaluator over one dataset.
pub struct Oracle<'a> {
    ds: &'a Dataset,
    reg: &'a PropertyRegistry,
    lang: &'a str,
}

fn is_numeric(datatype: Option<&str>) -> bool {
    matches!(
        datatype,
        Some(crate::model::XSD_INTEGER) | Some(crate::model::XSD_DECIMAL)
    )
}

/// SPARQL ORDER BY comparison: unbound < blank < IRI < literal; numeric
/// literals by value, everything else by lexical form.
pub fn compare_terms(a: Option<&Term>, b: Option<&Term>) -> Ordering {
    fn rank(t: Option<&Term>) -> u8 {
        match t {
            None => 0,
            Some(Term::BlankNode(_)) => 1,
            Some(Term::Iri(_)) => 2,
            Some(Term::Literal { .. }) => 3,
        }
    }
    match (a, b) {
        (
            Some(Term::Literal {
                value: va,
                datatype: da,
                ..
            }),
            Some(Term::Literal {
                value: vb,
                datatype: db,
                ..
            }),
        ) if is_numeric(da.as_deref()) && is_numeric(db.as_deref()) => {
            let fa: f64 = va.parse().unwrap_or(f64::NAN);
            let fb: f64 = vb.parse().unwrap_or(f64::NAN);
            fa.partial_cmp(&fb).unwrap_or(Ordering::Equal)
        }
        (Some(x), Some(y)) if rank(a) == rank(b) => x.value().cmp(y.value()),
        _ => rank(a).cmp(&rank(b)),
    }
}

/// Sorts by `(variable, descending)` keys; ties keep input order.
pub fn order_rows(rows: &mut [Row], keys: &[(&str, bool)]) {
    rows.sort_by(|x, y| {
        for (var, desc) in keys {
            let ord = compare_terms(x.get(*var), y.get(*var));
            let ord = if *desc { ord.reverse() } else { ord };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    });
}

fn dedup_rows(rows: Vec<Row>) -> Vec<Row> {
    let mut seen = BTreeSet::new();
    rows.into_iter().filter(|r| seen.insert(r.clone())).collect()
}

fn finish(vars: &[&str], mut rows: Vec<Row>, keys: &[(&str, bool)], limit: Option<u32>) -> ResultSet {
    order_rows(&mut rows, keys);
    if let Some(limit) = limit {
        rows.truncate(limit as usize);
    }
    let mut rs = ResultSet::new(vars.iter().map(|v| v.to_string()).collect());
    rs.rows = rows;
    rs
}

fn row(pairs: Vec<(&str, Option<Term>)>) -> Row {
    pairs
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
}

fn ent(id: EntityId) -> Option<Term> {
    Some(Term::entity(id))
}

fn int(v: i64) -> Option<Term> {
    Some(Term::integer(v))
}

impl<'a> Oracle<'a> {
    pub fn new(ds: &'a Dataset, reg: &'a PropertyRegistry) -> Self {
        Oracle { ds, reg, lang: "en" }
    }

    fn p(&self, role: Role) -> EntityId {
        self.reg.get(role)
    }

    /// What the label service binds for `?xLabel`.
    fn label(&self, term: Option<&Term>) -> Option<Term> {
        match term? {
            Term::Iri(iri) => {
                let id = EntityId::from_iri(iri)?;
                Some(match self.ds.label(id, self.lang) {
                    Some(l) => Term::lang(l, self.lang),
                    None => Term::plain(id.to_string()),
                })
            }
            lit @ Term::Literal { .. } => Some(lit.clone()),
            Term::BlankNode(_) => None,
        }
    }

    fn labelled(&self, var: &str, id: EntityId) -> [(String, Option<Term>); 2] {
        let t = Term::entity(id);
        [
            (format!("{var}Label"), self.label(Some(&t))),
            (var.to_string(), Some(t)),
        ]
    }

    fn ev(&self, s: EntityId, role: Role) -> BTreeSet<EntityId> {
        self.ds.entity_values(s, self.p(role))
    }

    /// Subjects `x` with `x role o`.
    fn inverse(&self, role: Role, o: EntityId) -> BTreeSet<EntityId> {
        self.ds.subjects_with(self.p(role), &FixtureValue::Entity(o))
    }

    /// Every `x` with `x role* target` (reflexive).
    fn reaching(&self, role: Role, target: EntityId) -> BTreeSet<EntityId> {
        let mut seen = BTreeSet::from([target]);
        let mut queue = VecDeque::from([target]);
        while let Some(n) = queue.pop_front() {
            for x in self.inverse(role, n) {
                if seen.insert(x) {
                    queue.push_back(x);
                }
            }
        }
        seen
    }

    fn dates(&self, w: EntityId) -> Vec<&FixtureValue> {
        self.ds.values(w, self.p(Role::PublicationDate)).collect()
    }

    fn date_terms(&self, w: EntityId) -> Vec<Option<Term>> {
        let d: Vec<Option<Term>> = self.dates(w).into_iter().map(|v| Some(v.to_term())).collect();
        if d.is_empty() {
            vec![None]
        } else {
            d
        }
    }

    fn year(&self, w: EntityId) -> Option<i64> {
        self.dates(w).first().and_then(|d| d.year()).map(i64::from)
    }

    fn author_count(&self, w: EntityId) -> i64 {
        let items = self
            .ds
            .values(w, self.p(Role::Author))
            .chain(self.ds.values(w, self.p(Role::AuthorNameString)))
            .collect::<BTreeSet<_>>();
        items.len() as i64
    }

    /// Works citing `w`; truthy triples form a set, so each citer once.
    fn citers(&self, w: EntityId) -> Vec<EntityId> {
        self.inverse(Role::Cites, w).into_iter().collect()
    }

    fn affiliated(&self, org: EntityId) -> BTreeSet<EntityId> {
        let orgs = self.reaching(Role::PartOf, org);
        orgs.iter()
            .flat_map(|o| {
                self.inverse(Role::Employer, *o)
                    .into_iter()
                    .chain(self.inverse(Role::Affiliation, *o))
            })
            .collect()
    }

    fn works_of(&self, author: EntityId) -> BTreeSet<EntityId> {
        self.inverse(Role::Author, author)
    }

    fn topic_works(&self, topic: EntityId) -> BTreeSet<EntityId> {
        self.reaching(Role::SubclassOf, topic)
            .into_iter()
            .flat_map(|t| self.inverse(Role::MainTheme, t))
            .collect()
    }

    /// `key → distinct set` grouping rendered as `?key ?keyLabel ?out`.
    fn counted(
        &self,
        key: &str,
        out: &str,
        groups: BTreeMap<EntityId, usize>,
        limit: u32,
    ) -> ResultSet {
        let rows = groups
            .into_iter()
            .map(|(k, n)| {
                let [l, e] = self.labelled(key, k);
                let mut r: Row = [l, e].into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect();
                r.insert(out.to_string(), Term::integer(n as i64));
                r
            })
            .collect();
        let label = format!("{key}Label");
        finish(
            &[key, &label, out],
            rows,
            &[(out, true), (key, false)],
            Some(limit),
        )
    }

    fn distinct_counts<I>(&self, pairs: I) -> BTreeMap<EntityId, usize>
    where
        I: IntoIterator<Item = (EntityId, EntityId)>,
    {
        let mut sets: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
        for (k, v) in pairs {
            sets.entry(k).or_default().insert(v);
        }
        sets.into_iter().map(|(k, s)| (k, s.len())).collect()
    }

    fn plain_counts<I>(&self, keys: I) -> BTreeMap<EntityId, usize>
    where
        I: IntoIterator<Item = EntityId>,
    {
        let mut out = BTreeMap::new();
        for k in keys {
            *out.entry(k).or_default() += 1;
        }
        out
    }

    fn works_with_dates(&self, works: BTreeSet<EntityId>, limit: u32) -> ResultSet {
        let mut rows = Vec::new();
        for w in works {
            for d in self.date_terms(w) {
                let t = Term::entity(w);
                rows.push(row(vec![
                    ("workLabel", self.label(Some(&t))),
                    ("work", Some(t)),
                    ("date", d),
                ]));
            }
        }
        finish(
            &["work", "workLabel", "date"],
            dedup_rows(rows),
            &[("date", true), ("work", false)],
            Some(limit),
        )
    }

    /// Evaluates one panel query.
    pub fn panel(&self, spec: &PanelQuerySpec) -> Option<ResultSet> {
        let def = spec.definition().ok()?;
        let s = spec.subject;
        let limit = spec.limit;
        let author = self.p(Role::Author);
        Some(match (def.aspect, def.name) {
            (Aspect::Author, "works-raw") | (Aspect::Author, "works-per-year-by-role") => {
                let ordinal_p = self.p(Role::SeriesOrdinal);
                let mut rows = Vec::new();
                for w in self.works_of(s) {
                    let ordinal = self
                        .ds
                        .statements(w, author)
                        .filter(|t| t.object == FixtureValue::Entity(s))
                        .find_map(|t| t.qualifier(ordinal_p))
                        .map(FixtureValue::to_term);
                    let t = Term::entity(w);
                    rows.push(row(vec![
                        ("workLabel", self.label(Some(&t))),
                        ("work", Some(t)),
                        ("year", self.year(w).and_then(int)),
                        ("ordinal", ordinal),
                        ("author_count", int(self.author_count(w))),
                    ]));
                }
                finish(
                    def.columns,
                    rows,
                    &[("year", true), ("work", false)],
                    Some(limit),
                )
            }
            (Aspect::Author, "coauthors") => {
                let pairs = self.works_of(s).into_iter().flat_map(|w| {
                    self.ev(w, Role::Author)
                        .into_iter()
                        .filter(|c| *c != s)
                        .map(move |c| (c, w))
                });
                self.counted("coauthor", "works", self.distinct_counts(pairs), limit)
            }
            (Aspect::Author, "topics") => self.counted(
                "topic",
                "works",
                self.distinct_counts(self.works_of(s).into_iter().flat_map(|w| {
                    self.ev(w, Role::MainTheme).into_iter().map(move |t| (t, w))
                })),
                limit,
            ),
            (Aspect::Author, "venue-stats") => self.counted(
                "venue",
                "works",
                self.distinct_counts(self.works_of(s).into_iter().flat_map(|w| {
                    self.ev(w, Role::PublishedIn).into_iter().map(move |v| (v, w))
                })),
                limit,
            ),
            (Aspect::Author, "education-employment-timeline") => {
                let mut rows = Vec::new();
                for (role, relation) in [(Role::EducatedAt, "education"), (Role::Employer, "employment")] {
                    for t in self.ds.statements(s, self.p(role)) {
                        let Some(org) = t.object.as_entity() else { continue };
                        let q = |r| t.qualifier(self.p(r)).map(FixtureValue::to_term);
                        let ot = Term::entity(org);
                        rows.push(row(vec![
                            ("organizationLabel", self.label(Some(&ot))),
                            ("organization", Some(ot)),
                            ("relation", Some(Term::plain(relation))),
                            ("start", q(Role::StartTime)),
                            ("end", q(Role::EndTime)),
                        ]));
                    }
                }
                finish(
                    def.columns,
                    rows,
                    &[("start", false), ("organization", false)],
                    Some(limit),
                )
            }
            (Aspect::Author, "locations-map") => {
                let orgs: BTreeSet<EntityId> = self
                    .ev(s, Role::Employer)
                    .into_iter()
                    .chain(self.ev(s, Role::EducatedAt))
                    .collect();
                let mut rows = Vec::new();
                for o in orgs {
                    for c in self.ds.values(o, self.p(Role::CoordinateLocation)) {
                        let ot = Term::entity(o);
                        rows.push(row(vec![
                            ("organizationLabel", self.label(Some(&ot))),
                            ("organization", Some(ot)),
                            ("coordinates", Some(c.to_term())),
                        ]));
                    }
                }
                finish(def.columns, dedup_rows(rows), &[("organization", false)], Some(limit))
            }
            (Aspect::Author, "citations-per-year") => {
                let mut per_year: BTreeMap<i64, i64> = BTreeMap::new();
                for w in self.works_of(s) {
                    for c in self.citers(w) {
                        for d in self.dates(c) {
                            if let Some(y) = d.year() {
                                *per_year.entry(y as i64).or_default() += 1;
                            }
                        }
                    }
                }
                let rows = per_year
                    .into_iter()
                    .map(|(y, n)| row(vec![("year", int(y)), ("citations", int(n))]))
                    .collect();
                finish(def.columns, rows, &[("year", false)], None)
            }
            (Aspect::Author, "most-cited-work") => self.counted(
                "work",
                "citations",
                self.plain_counts(
                    self.works_of(s)
                        .into_iter()
                        .flat_map(|w| self.citers(w).into_iter().map(move |_| w)),
                ),
                limit,
            ),
            (Aspect::Author, "citing-authors") => {
                let pairs = self.works_of(s).into_iter().flat_map(|w| {
                    self.citers(w).into_iter().flat_map(move |c| {
                        self.ev(c, Role::Author).into_iter().map(move |a| (a, c))
                    })
                });
                self.counted("citing_author", "citations", self.distinct_counts(pairs), limit)
            }
            (Aspect::Author, "academic-tree") => {
                let adv = Role::DoctoralAdvisor;
                let mut pairs = BTreeSet::new();
                // students of the subject and of the subject's students
                let mut down = BTreeSet::from([s]);
                down.extend(self.inverse(adv, s));
                for a in &down {
                    for st in self.inverse(adv, *a) {
                        pairs.insert((st, *a));
                    }
                }
                // advisors of the subject and of the subject's advisors
                let mut up = BTreeSet::from([s]);
                up.extend(self.ev(s, adv));
                for st in &up {
                    for a in self.ev(*st, adv) {
                        pairs.insert((*st, a));
                    }
                }
                let rows = pairs
                    .into_iter()
                    .map(|(st, a)| {
                        let (tst, ta) = (Term::entity(st), Term::entity(a));
                        row(vec![
                            ("studentLabel", self.label(Some(&tst))),
                            ("student", Some(tst)),
                            ("advisorLabel", self.label(Some(&ta))),
                            ("advisor", Some(ta)),
                        ])
                    })
                    .collect();
                finish(
                    def.columns,
                    rows,
                    &[("advisor", false), ("student", false)],
                    Some(limit),
                )
            }
            (Aspect::Work, "citations-to") | (Aspect::Work, "citations-in") => {
                let (var, others) = if def.name == "citations-to" {
                    ("citing_work", self.citers(s).into_iter().collect::<BTreeSet<_>>())
                } else {
                    ("cited_work", self.ev(s, Role::Cites))
                };
                let label = format!("{var}Label");
                let mut rows = Vec::new();
                for w in others {
                    for d in self.date_terms(w) {
                        let t = Term::entity(w);
                        rows.push(row(vec![
                            (label.as_str(), self.label(Some(&t))),
                            (var, Some(t)),
                            ("date", d),
                        ]));
                    }
                }
                finish(
                    def.columns,
                    dedup_rows(rows),
                    &[("date", true), (var, false)],
                    Some(limit),
                )
            }
            (Aspect::Work, "claims-supported") => self.claims_supported(s),
            (Aspect::Work, "citation-graph") => {
                self.citation_graph(s, query::PANEL_GRAPH_DEPTH, query::PANEL_GRAPH_CAP)
            }
            (Aspect::Organization, "associated-authors") => {
                let groups = self
                    .affiliated(s)
                    .into_iter()
                    .map(|a| (a, self.works_of(a).len()))
                    .collect();
                self.counted("author", "works", groups, limit)
            }
            (Aspect::Organization, "recent-works") => {
                let works = self
                    .affiliated(s)
                    .into_iter()
                    .flat_map(|a| self.works_of(a))
                    .collect();
                self.works_with_dates(works, limit)
            }
            (Aspect::Organization, "coauthor-graph") => {
                let authors = self.affiliated(s);
                let mut rows = Vec::new();
                for a1 in &authors {
                    for a2 in &authors {
                        if a1.iri() >= a2.iri() {
                            continue;
                        }
                        let shared = self.works_of(*a1).intersection(&self.works_of(*a2)).count();
                        if shared == 0 {
                            continue;
                        }
                        let (t1, t2) = (Term::entity(*a1), Term::entity(*a2));
                        rows.push(row(vec![
                            ("author1Label", self.label(Some(&t1))),
                            ("author1", Some(t1)),
                            ("author2Label", self.label(Some(&t2))),
                            ("author2", Some(t2)),
                            ("works", int(shared as i64)),
                        ]));
                    }
                }
                finish(
                    def.columns,
                    rows,
                    &[("author1", false), ("author2", false)],
                    Some(limit),
                )
            }
            (Aspect::Organization, "page-production-raw") => {
                let mut rows = Vec::new();
                for a in self.affiliated(s) {
                    for w in self.works_of(a) {
                        let (tw, ta) = (Term::entity(w), Term::entity(a));
                        let pages = self
                            .ds
                            .values(w, self.p(Role::NumberOfPages))
                            .next()
                            .map(FixtureValue::to_term);
                        rows.push(row(vec![
                            ("workLabel", self.label(Some(&tw))),
                            ("work", Some(tw)),
                            ("year", self.year(w).and_then(int)),
                            ("pages", pages),
                            ("authorLabel", self.label(Some(&ta))),
                            ("author", Some(ta)),
                            ("author_count", int(self.author_count(w))),
                        ]));
                    }
                }
                finish(
                    def.columns,
                    rows,
                    &[("work", false), ("author", false)],
                    Some(limit),
                )
            }
            (Aspect::Organization, "conorm-citations-raw") => {
                let mut groups: BTreeMap<(EntityId, EntityId, EntityId), i64> = BTreeMap::new();
                for a in self.affiliated(s) {
                    for w in self.works_of(a) {
                        for c in self.citers(w) {
                            if let Some(y) = self.dates(c).first().and_then(|d| d.year()) {
                                groups.insert((c, w, a), y as i64);
                            }
                        }
                    }
                }
                let rows = groups
                    .into_iter()
                    .map(|((c, w, a), y)| {
                        let ta = Term::entity(a);
                        row(vec![
                            ("citing_work", ent(c)),
                            ("year", int(y)),
                            ("work", ent(w)),
                            ("authorLabel", self.label(Some(&ta))),
                            ("author", Some(ta)),
                            ("author_count", int(self.author_count(w))),
                        ])
                    })
                    .collect();
                finish(
                    def.columns,
                    rows,
                    &[
                        ("year", false),
                        ("work", false),
                        ("citing_work", false),
                        ("author", false),
                    ],
                    Some(limit),
                )
            }
            (Aspect::Organization, "most-cited-affiliated") => {
                let ordinal_p = self.p(Role::SeriesOrdinal);
                let first = FixtureValue::String("1".into());
                let mut rows = Vec::new();
                for a in self.affiliated(s) {
                    for w in self.works_of(a) {
                        let is_first = self.ds.statements(w, author).any(|t| {
                            t.object == FixtureValue::Entity(a)
                                && t.qualifiers.iter().any(|(p, v)| *p == ordinal_p && *v == first)
                        });
                        let citers: BTreeSet<_> = self.citers(w).into_iter().collect();
                        if !is_first || citers.is_empty() {
                            continue;
                        }
                        let (tw, ta) = (Term::entity(w), Term::entity(a));
                        rows.push(row(vec![
                            ("workLabel", self.label(Some(&tw))),
                            ("work", Some(tw)),
                            ("authorLabel", self.label(Some(&ta))),
                            ("author", Some(ta)),
                            ("citations", int(citers.len() as i64)),
                        ]));
                    }
                }
                finish(
                    def.columns,
                    rows,
                    &[("citations", true), ("work", false)],
                    Some(limit),
                )
            }
            (Aspect::Venue, "recent-works") => {
                self.works_with_dates(self.inverse(Role::PublishedIn, s), limit)
            }
            (Aspect::Venue, "topics") => self.counted(
                "topic",
                "works",
                self.distinct_counts(self.inverse(Role::PublishedIn, s).into_iter().flat_map(
                    |w| self.ev(w, Role::MainTheme).into_iter().map(move |t| (t, w)),
                )),
                limit,
            ),
            (Aspect::Venue, "author-images") => {
                let mut rows = Vec::new();
                for w in self.inverse(Role::PublishedIn, s) {
                    for a in self.ev(w, Role::Author) {
                        for img in self.ds.values(a, self.p(Role::Image)) {
                            let ta = Term::entity(a);
                            rows.push(row(vec![
                                ("authorLabel", self.label(Some(&ta))),
                                ("author", Some(ta)),
                                ("image", Some(img.to_term())),
                            ]));
                        }
                    }
                }
                finish(def.columns, dedup_rows(rows), &[("author", false)], Some(limit))
            }
            (Aspect::Venue, "prolific-authors") => self.counted(
                "author",
                "works",
                self.distinct_counts(self.inverse(Role::PublishedIn, s).into_iter().flat_map(
                    |w| self.ev(w, Role::Author).into_iter().map(move |a| (a, w)),
                )),
                limit,
            ),
            (Aspect::Venue, "most-cited-works") => self.counted(
                "work",
                "citations",
                self.plain_counts(
                    self.inverse(Role::PublishedIn, s)
                        .into_iter()
                        .flat_map(|w| self.citers(w).into_iter().map(move |_| w)),
                ),
                limit,
            ),
            (Aspect::Venue, "most-cited-authors") => self.counted(
                "author",
                "citations",
                self.plain_counts(self.inverse(Role::PublishedIn, s).into_iter().flat_map(
                    |w| {
                        let n = self.citers(w).len();
                        self.ev(w, Role::Author)
                            .into_iter()
                            .flat_map(move |a| std::iter::repeat_n(a, n))
                    },
                )),
                limit,
            ),
            (Aspect::Venue, "most-cited-venues") => {
                let mut keys = Vec::new();
                for c in self.inverse(Role::PublishedIn, s) {
                    for x in self.ev(c, Role::Cites) {
                        keys.extend(self.ev(x, Role::PublishedIn));
                    }
                }
                self.counted("cited_venue", "citations", self.plain_counts(keys), limit)
            }
            (Aspect::Series, "items-in-series") => self.counted(
                "venue",
                "works",
                self.inverse(Role::Series, s)
                    .into_iter()
                    .map(|v| (v, self.inverse(Role::PublishedIn, v).len()))
                    .collect(),
                limit,
            ),
            (Aspect::Series, "works-from-series-venues") => {
                let mut rows = Vec::new();
                for v in self.inverse(Role::Series, s) {
                    for w in self.inverse(Role::PublishedIn, v) {
                        for d in self.date_terms(w) {
                            let (tw, tv) = (Term::entity(w), Term::entity(v));
                            rows.push(row(vec![
                                ("workLabel", self.label(Some(&tw))),
                                ("work", Some(tw)),
                                ("venueLabel", self.label(Some(&tv))),
                                ("venue", Some(tv)),
                                ("date", d),
                            ]));
                        }
                    }
                }
                finish(
                    def.columns,
                    dedup_rows(rows),
                    &[("date", true), ("work", false)],
                    Some(limit),
                )
            }
            (Aspect::Publisher, "venues-by-works") => self.counted(
                "venue",
                "works",
                self.inverse(Role::Publisher, s)
                    .into_iter()
                    .map(|v| (v, self.inverse(Role::PublishedIn, v).len()))
                    .collect(),
                limit,
            ),
            (Aspect::Publisher, "most-cited-papers") => self.counted(
                "work",
                "citations",
                self.plain_counts(self.inverse(Role::Publisher, s).into_iter().flat_map(|v| {
                    self.inverse(Role::PublishedIn, v)
                        .into_iter()
                        .flat_map(|w| self.citers(w).into_iter().map(move |_| w))
                })),
                limit,
            ),
            (Aspect::Publisher, "editors") => {
                let mut rows = Vec::new();
                for v in self.inverse(Role::Publisher, s) {
                    for e in self.ev(v, Role::Editor) {
                        let (te, tv) = (Term::entity(e), Term::entity(v));
                        rows.push(row(vec![
                            ("editorLabel", self.label(Some(&te))),
                            ("editor", Some(te)),
                            ("venueLabel", self.label(Some(&tv))),
                            ("venue", Some(tv)),
                        ]));
                    }
                }
                finish(
                    def.columns,
                    rows,
                    &[("venue", false), ("editor", false)],
                    Some(limit),
                )
            }
            (Aspect::Publisher, "works-vs-citations-scatter") => {
                let mut rows = Vec::new();
                for v in self.inverse(Role::Publisher, s) {
                    let works = self.inverse(Role::PublishedIn, v);
                    if works.is_empty() {
                        continue;
                    }
                    let citations: usize = works.iter().map(|w| self.citers(*w).len()).sum();
                    let tv = Term::entity(v);
                    rows.push(row(vec![
                        ("venueLabel", self.label(Some(&tv))),
                        ("venue", Some(tv)),
                        ("works", int(works.len() as i64)),
                        ("citations", int(citations as i64)),
                    ]));
                }
                finish(
                    def.columns,
                    rows,
                    &[("works", true), ("venue", false)],
                    Some(limit),
                )
            }
            (Aspect::Sponsor, "funded-works") => {
                self.works_with_dates(self.inverse(Role::Sponsor, s), limit)
            }
            (Aspect::Sponsor, "sponsored-authors") => self.counted(
                "author",
                "works",
                self.distinct_counts(self.inverse(Role::Sponsor, s).into_iter().flat_map(|w| {
                    self.ev(w, Role::Author).into_iter().map(move |a| (a, w))
                })),
                limit,
            ),
            (Aspect::Sponsor, "co-sponsors") => self.counted(
                "sponsor",
                "works",
                self.distinct_counts(self.inverse(Role::Sponsor, s).into_iter().flat_map(|w| {
                    self.ev(w, Role::Sponsor)
                        .into_iter()
                        .filter(|x| *x != s)
                        .map(move |x| (x, w))
                })),
                limit,
            ),
            (Aspect::Topic, "recent-works") => self.works_with_dates(self.topic_works(s), limit),
            (Aspect::Topic, "co-occurring-topics") => self.counted(
                "topic",
                "works",
                self.distinct_counts(self.topic_works(s).into_iter().flat_map(|w| {
                    self.ev(w, Role::MainTheme)
                        .into_iter()
                        .filter(|t| *t != s)
                        .map(move |t| (t, w))
                })),
                limit,
            ),
            _ => return None,
        })
    }

    /// Statements referenced "stated in" `work`: the main value and any
    /// qualifier value the item also links to directly.
    pub fn claims_supported(&self, work: EntityId) -> ResultSet {
        let stated_in = self.p(Role::StatedIn);
        let target = FixtureValue::Entity(work);
        let mut rows = Vec::new();
        for t in &self.ds.triples {
            let cited = t
                .references
                .iter()
                .any(|r| r.iter().any(|(p, v)| *p == stated_in && *v == target));
            if !cited {
                continue;
            }
            let candidates = std::iter::once(&t.object).chain(t.qualifiers.iter().map(|(_, v)| v));
            for value in candidates {
                let direct = self
                    .ds
                    .triples
                    .iter()
                    .any(|u| u.subject == t.subject && &u.object == value);
                if !direct {
                    continue;
                }
                let (ti, tp, tv) = (Term::entity(t.subject), Term::entity(t.property), value.to_term());
                rows.push(row(vec![
                    ("itemLabel", self.label(Some(&ti))),
                    ("item", Some(ti)),
                    ("propertyLabel", self.label(Some(&tp))),
                    ("property", Some(tp)),
                    ("valueLabel", self.label(Some(&tv))),
                    ("value", Some(tv)),
                ]));
            }
        }
        finish(
            &["item", "itemLabel", "property", "propertyLabel", "value", "valueLabel"],
            dedup_rows(rows),
            &[("itemLabel", false)],
            None,
        )
    }

    fn neighbours(&self, n: EntityId) -> Vec<EntityId> {
        let mut out: Vec<EntityId> = self.ev(n, Role::Cites).into_iter().collect();
        out.extend(self.citers(n));
        out
    }

    /// Citation edges touching any node reachable from `work` by a walk of
    /// fewer than `depth` undirected hops.
    pub fn citation_graph(&self, work: EntityId, depth: u8, cap: u32) -> ResultSet {
        let mut frontier = BTreeSet::from([work]);
        let mut nodes = frontier.clone();
        for _ in 1..depth {
            frontier = frontier.iter().flat_map(|n| self.neighbours(*n)).collect();
            nodes.extend(frontier.iter().copied());
        }
        let mut edges = BTreeSet::new();
        for n in &nodes {
            for c in self.ev(*n, Role::Cites) {
                edges.insert((*n, c));
            }
            for c in self.citers(*n) {
                edges.insert((c, *n));
            }
        }
        let rows = edges
            .into_iter()
            .map(|(a, b)| {
                let (ta, tb) = (Term::entity(a), Term::entity(b));
                row(vec![
                    ("citingLabel", self.label(Some(&ta))),
                    ("citing", Some(ta)),
                    ("citedLabel", self.label(Some(&tb))),
                    ("cited", Some(tb)),
                ])
            })
            .collect();
        finish(
            &["citing", "citingLabel", "cited", "citedLabel"],
            rows,
            &[("citing", false), ("cited", false)],
            Some(cap),
        )
    }

    fn single_count(&self, n: usize) -> ResultSet {
        let mut rs = ResultSet::new(vec!["count".into()]);
        rs.rows.push(row(vec![("count", int(n as i64))]));
        rs
    }

    pub fn count_scientific_articles(&self) -> ResultSet {
        let class = FixtureValue::Entity(classes::scientific_article());
        let n = self
            .ds
            .triples
            .iter()
            .filter(|t| t.property == self.p(Role::InstanceOf) && t.object == class)
            .count();
        self.single_count(n)
    }

    pub fn count_citations(&self) -> ResultSet {
        let n = self
            .ds
            .triples
            .iter()
            .filter(|t| t.property == self.p(Role::Cites))
            .count();
        self.single_count(n)
    }

    pub fn external_resources(&self, prefix: &str) -> ResultSet {
        let mut rows = Vec::new();
        for t in &self.ds.triples {
            if t.property != self.p(Role::ExternalDataUrl) {
                continue;
            }
            let text = t.object.to_term();
            if !text.value().starts_with(prefix) {
                continue;
            }
            let ti = Term::entity(t.subject);
            rows.push(row(vec![
                ("itemLabel", self.label(Some(&ti))),
                ("item", Some(ti)),
                ("resource", Some(text)),
            ]));
        }
        finish(
            &["item", "itemLabel", "resource"],
            rows,
            &[("item", false), ("resource", false)],
            None,
        )
    }

    pub fn instance_of(&self, subject: EntityId) -> ResultSet {
        let rows = self
            .ds
            .values(subject, self.p(Role::InstanceOf))
            .map(|v| row(vec![("class", Some(v.to_term()))]))
            .collect();
        finish(&["class"], rows, &[("class", false)], None)
    }

    pub fn identifier_lookup(&self, property: EntityId, value: &str) -> ResultSet {
        let rows = self
            .ds
            .triples
            .iter()
            .filter(|t| t.property == property)
            .filter(|t| matches!(&t.object, FixtureValue::String(s) if s == value))
            .map(|t| row(vec![("item", ent(t.subject))]))
            .collect();
        finish(&["item"], rows, &[("item", false)], None)
    }

    /// Aspect the default rule table assigns to `id` in this dataset.
    pub fn aspect_of(&self, id: EntityId, rules: &AspectRules) -> Aspect {
        let classes: Vec<EntityId> = self.ev(id, Role::InstanceOf).into_iter().collect();
        rules.aspect_for(&classes)
    }
}

/// Canned answers keyed by the canonical hash of their query.
#[derive(Debug, Clone, Default)]
pub struct Canned {
    pub entries: BTreeMap<String, (String, ResultSet)>,
}

impl Canned {
    pub fn insert(&mut self, query: &QueryText, results: ResultSet) {
        self.entries
            .insert(query.hash_hex(), (query.normalized(), results));
    }

    pub fn get(&self, query: &QueryText) -> Option<&ResultSet> {
        self.entries.get(&query.hash_hex()).map(|(_, r)| r)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json_string(&self) -> String {
        let map: serde_json::Map<String, Value> = self
            .entries
            .iter()
            .map(|(hash, (text, results))| {
                (hash.clone(), json!({"query": text, "results": results.to_json()}))
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&Value::Object(map)).expect("serializable");
        out.push('\n');
        out
    }

    pub fn from_json_str(text: &str) -> Result<Canned, String> {
        let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let map = value.as_object().ok_or("canned file must be an object")?;
        let mut canned = Canned::default();
        for (hash, entry) in map {
            let query = entry
                .get("query")
                .and_then(Value::as_str)
                .ok_or_else(|| format!("{hash}: missing query"))?;
            let results = entry
                .get("results")
                .ok_or_else(|| format!("{hash}: missing results"))?;
            let bytes = serde_json::to_vec(results).map_err(|e| e.to_string())?;
            let results = crate::sparql::parse_results(&bytes).map_err(|e| format!("{hash}: {e}"))?;
            canned
                .entries
                .insert(hash.clone(), (query.to_string(), results));
        }
        Ok(canned)
    }
}

/// Subjects given canned panel answers for `aspect`.
pub fn panel_subjects(ds: &Dataset, aspect: Aspect) -> BTreeSet<EntityId> {
    let reg = PropertyRegistry::default();
    let oracle = Oracle::new(ds, &reg);
    let rules = AspectRules::default();
    let mut out: BTreeSet<EntityId> = ds
        .items()
        .into_iter()
        .filter(|id| ds.triples.iter().any(|t| t.subject == *id))
        .filter(|id| oracle.aspect_of(*id, &rules) == aspect)
        .collect();
    out.extend(ds.probes.subjects.iter().copied());
    out
}

/// Every work with a citation-graph canned answer.
pub fn graph_subjects(ds: &Dataset) -> BTreeSet<EntityId> {
    let mut out = panel_subjects(ds, Aspect::Work);
    let cites = PropertyRegistry::default().get(Role::Cites);
    for t in ds.triples.iter().filter(|t| t.property == cites) {
        out.insert(t.subject);
        if let Some(o) = t.object.as_entity() {
            out.insert(o);
        }
    }
    out
}

/// Regenerates the whole canned map with the default vocabulary.
pub fn generate(ds: &Dataset) -> Canned {
    let reg = PropertyRegistry::default();
    let oracle = Oracle::new(ds, &reg);
    let mut canned = Canned::default();

    for def in PANELS {
        for subject in panel_subjects(ds, def.aspect) {
            let spec = PanelQuerySpec::new(def.aspect, def.name, subject);
            let q = query::build_panel_query(&spec, &reg).expect("catalog panel builds");
            let rs = oracle.panel(&spec).expect("oracle covers every panel");
            canned.insert(&q, rs);
        }
    }
    for work in graph_subjects(ds) {
        for depth in 1..=query::MAX_GRAPH_DEPTH {
            for cap in GRAPH_CAPS {
                let q = query::build_citation_graph_query(work, depth, cap).expect("valid");
                canned.insert(&q, oracle.citation_graph(work, depth, cap));
            }
        }
    }
    canned.insert(&query::build_count_scientific_articles(), oracle.count_scientific_articles());
    canned.insert(&query::build_count_citations(), oracle.count_citations());
    for prefix in &ds.probes.url_prefixes {
        if let Ok(q) = query::build_external_resource_query(prefix) {
            canned.insert(&q, oracle.external_resources(prefix));
        }
    }
    let mut subjects = ds.items();
    subjects.extend(ds.probes.subjects.iter().copied());
    for id in subjects {
        let q = query::build_instance_of_query(id, &reg).expect("item");
        canned.insert(&q, oracle.instance_of(id));
    }
    for kind in ExternalIdKind::ALL {
        let property = reg.get(kind.role());
        let mut values: BTreeSet<String> = ds
            .triples
            .iter()
            .filter(|t| t.property == property)
            .filter_map(|t| t.object.as_str().map(str::to_string))
            .collect();
        values.extend(
            ds.probes
                .identifiers
                .iter()
                .filter(|(k, _)| k == kind.name())
                .map(|(_, v)| kind.normalize(v)),
        );
        for value in values {
            let q = query::build_identifier_lookup_query(property, &value).expect("non-empty");
            canned.insert(&q, oracle.identifier_lookup(property, &value));
        }
    }
    canned
}
