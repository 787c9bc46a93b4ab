//! Hermetic test backend: a small versioned graph, a brute-force oracle
//! over it, and a server replaying the oracle's answers.

pub mod dataset;
pub mod oracle;
pub mod server;

use std::path::{Path, PathBuf};

pub use dataset::{Dataset, DatasetError, FixtureValue, Triple};
pub use oracle::{Canned, Oracle};
pub use server::{FixtureServer, LoggedRequest};

pub const CANNED_FILE: &str = "canned.json";

/// The fixture directory shipped with this crate.
pub fn default_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Loads the dataset and its canned answers from `dir`.
pub fn load(dir: &Path) -> Result<(Dataset, Canned), String> {
    let dataset = Dataset::load(dir).map_err(|e| e.to_string())?;
    let path = dir.join(CANNED_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let canned = Canned::from_json_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((dataset, canned))
}
