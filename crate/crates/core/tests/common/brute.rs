//! Plain loops over the raw triple file, the reference for chart statistics.

use std::collections::{BTreeMap, BTreeSet};

use super::{objects, subjects, Raw};

pub fn year(raw: &[Raw], w: &str) -> Option<i32> {
    raw.iter().find(|t| t.s == w && t.p == "P577").and_then(Raw::year)
}

pub fn author_count(raw: &[Raw], w: &str) -> usize {
    raw.iter()
        .filter(|t| t.s == w && (t.p == "P50" || t.p == "P2093"))
        .map(|t| t.o.as_str())
        .collect::<BTreeSet<_>>()
        .len()
}

pub fn pages(raw: &[Raw], w: &str) -> Option<f64> {
    objects(raw, w, "P1104")
        .first()
        .map(|q| q.strip_prefix("q:").unwrap().parse().unwrap())
}

pub fn ordinal(raw: &[Raw], w: &str, a: &str) -> Option<u32> {
    raw.iter()
        .filter(|t| t.s == w && t.p == "P50" && t.o == a)
        .find_map(|t| t.qualifiers.get("P1545"))
        .and_then(|v| v.as_str())
        .and_then(|s| s.strip_prefix("s:"))
        .and_then(|s| s.parse().ok())
}

pub fn affiliated<'a>(raw: &'a [Raw], org: &'a str) -> BTreeSet<&'a str> {
    let mut orgs = BTreeSet::from([org]);
    loop {
        let more: BTreeSet<&str> = raw
            .iter()
            .filter(|t| t.p == "P361" && orgs.contains(t.o.as_str()))
            .map(|t| t.s.as_str())
            .collect();
        let before = orgs.len();
        orgs.extend(more);
        if orgs.len() == before {
            break;
        }
    }
    raw.iter()
        .filter(|t| (t.p == "P108" || t.p == "P1416") && orgs.contains(t.o.as_str()))
        .map(|t| t.s.as_str())
        .collect()
}

pub fn brute_roles(raw: &[Raw], a: &str) -> BTreeMap<(i32, &'static str), u64> {
    let mut out = BTreeMap::new();
    for w in subjects(raw, "P50", a) {
        let Some(y) = year(raw, w) else { continue };
        let n = author_count(raw, w).max(1) as u32;
        let role = match ordinal(raw, w, a) {
            _ if n == 1 => "solo",
            None => "unknown",
            Some(o) if o == 0 || o > n => "unknown",
            Some(1) => "first",
            Some(o) if o == n => "last",
            Some(_) => "middle",
        };
        *out.entry((y, role)).or_default() += 1;
    }
    out
}


/// Expected page production for an organization: per (year, author)
/// shares, plus works without pages and dated-less works with pages.
pub fn page_production(raw: &[Raw], org: &str) -> (BTreeMap<(i32, String), f64>, u32, u32) {
    let staff = affiliated(raw, org);
    let works: BTreeSet<&str> = staff.iter().flat_map(|a| subjects(raw, "P50", a)).collect();
    let mut expected: BTreeMap<(i32, String), f64> = BTreeMap::new();
    let (mut missing, mut undated) = (0u32, 0u32);
    for w in &works {
        let Some(p) = pages(raw, w) else {
            missing += 1;
            continue;
        };
        let Some(y) = year(raw, w) else {
            undated += 1;
            continue;
        };
        let share = p / author_count(raw, w) as f64;
        for t in raw.iter().filter(|t| t.s == *w && t.p == "P50" && staff.contains(t.o.as_str())) {
            *expected.entry((y, t.o.clone())).or_default() += share;
        }
    }
    (expected, missing, undated)
}

/// Expected co-author-normalized citations for an organization.
pub fn conorm_citations(raw: &[Raw], org: &str) -> BTreeMap<(i32, String), f64> {
    let mut expected: BTreeMap<(i32, String), f64> = BTreeMap::new();
    for a in affiliated(raw, org) {
        for w in subjects(raw, "P50", a) {
            let n = author_count(raw, w) as f64;
            for c in subjects(raw, "P2860", w) {
                if let Some(y) = year(raw, c) {
                    *expected.entry((y, a.to_string())).or_default() += 1.0 / n;
                }
            }
        }
    }
    expected
}
