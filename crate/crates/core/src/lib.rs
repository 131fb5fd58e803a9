//! Near-duplicate quote detection over social-media timelines.
//!
//! The pipeline normalizes Arabic text, matches posts against a reference
//! corpus of quotes with MinHash/LSH candidate retrieval and exact Jaccard
//! verification, labels users as circulators or debunkers of fabricated
//! quotes, and fits a logistic-regression model over multi-hot network-tie
//! features whose coefficients describe each group.

pub mod behavior;
pub mod corpus;
pub mod error;
pub mod features;
pub mod matcher;
pub mod model;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod textnorm;

pub use error::{Error, Result};

use std::path::Path;

/// Reads a UTF-8 file, replacing invalid sequences and stripping a leading BOM.
pub(crate) fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    Ok(text.strip_prefix('\u{FEFF}').unwrap_or(&text).to_owned())
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Hex SHA-256 of `bytes`.
pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
