//! Dataset manifest: a JSON array of `{path, label}` records, or an object
//! `{config_hash, entries}` wrapping that array. Relative paths are resolved
//! against the manifest's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum ManifestDocument {
    Bare(Vec<DatasetEntry>),
    Tagged {
        #[serde(default)]
        config_hash: Option<String>,
        entries: Vec<DatasetEntry>,
    },
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<DatasetEntry>> {
    let path = path.as_ref();
    let doc: ManifestDocument = serde_json::from_str(&read_to_string(path)?)?;
    let mut entries = match doc {
        ManifestDocument::Bare(e) | ManifestDocument::Tagged { entries: e, .. } => e,
    };
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    for e in &mut entries {
        if e.path.is_relative() {
            e.path = base.join(&e.path);
        }
    }
    if entries.is_empty() {
        return Err(Error::Empty(format!("manifest {} lists no clouds", path.display())));
    }
    Ok(entries)
}

/// Writes entries exactly as given (callers pass paths relative to the
/// manifest for relocatable datasets).
pub fn write_manifest(path: impl AsRef<Path>, entries: &[DatasetEntry]) -> Result<()> {
    let mut json = serde_json::to_string_pretty(entries)?;
    json.push('\n');
    write_atomic(path.as_ref(), json.as_bytes())
}

/// Object form carrying the hash of the configuration that produced it.
pub fn write_manifest_with_hash(
    path: impl AsRef<Path>,
    entries: &[DatasetEntry],
    config_hash: &str,
) -> Result<()> {
    let doc = ManifestDocument::Tagged {
        config_hash: Some(config_hash.to_string()),
        entries: entries.to_vec(),
    };
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    write_atomic(path.as_ref(), json.as_bytes())
}
