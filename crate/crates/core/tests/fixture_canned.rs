//! The canned answer file must match what the oracle computes from the TSVs.
//! Run with SCHOLIA_BLESS=1 to rewrite it.

use scholia::fixture::{self, oracle, Dataset, CANNED_FILE};

#[test]
fn canned_answers_are_fresh() {
    let dir = fixture::default_dir();
    let ds = Dataset::load(&dir).expect("dataset loads");
    let fresh = oracle::generate(&ds).to_json_string();
    let path = dir.join(CANNED_FILE);
    if std::env::var_os("SCHOLIA_BLESS").is_some() {
        std::fs::write(&path, &fresh).expect("write canned");
        return;
    }
    let stored = std::fs::read_to_string(&path).expect("canned.json present; bless with SCHOLIA_BLESS=1");
    assert!(stored == fresh, "canned.json is stale; rerun with SCHOLIA_BLESS=1");
}
