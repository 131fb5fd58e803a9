//! Multi-hot network-tie features.
//!
//! Every distinct `(target account, tie kind)` pair is one binary column, so
//! following an account and liking its posts are separate predictors.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieKind {
    Follow,
    #[serde(rename = "retweet")]
    RetweetAuthor,
    #[serde(rename = "like")]
    LikeAuthor,
}

impl TieKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TieKind::Follow => "follow",
            TieKind::RetweetAuthor => "retweet",
            TieKind::LikeAuthor => "like",
        }
    }
}

impl fmt::Display for TieKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TieKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "follow" => Ok(TieKind::Follow),
            "retweet" => Ok(TieKind::RetweetAuthor),
            "like" => Ok(TieKind::LikeAuthor),
            other => Err(Error::Validation(format!("unknown tie kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TieRecord {
    pub user_id: String,
    pub target_id: String,
    pub kind: TieKind,
}

impl TieRecord {
    pub fn new(user_id: impl Into<String>, target_id: impl Into<String>, kind: TieKind) -> Self {
        TieRecord {
            user_id: user_id.into(),
            target_id: target_id.into(),
            kind,
        }
    }

    pub fn is_self_tie(&self) -> bool {
        self.user_id == self.target_id
    }
}

/// A column's meaning.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Feature {
    pub target_id: String,
    pub kind: TieKind,
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.target_id)
    }
}

/// Bijection between features and dense column indices, sorted by
/// `(target_id, kind)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureSpace {
    columns: Vec<Feature>,
    support: Vec<usize>,
    column_of: HashMap<Feature, usize>,
}

impl FeatureSpace {
    fn from_columns(columns: Vec<Feature>, support: Vec<usize>) -> Self {
        let column_of = columns.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
        FeatureSpace {
            columns,
            support,
            column_of,
        }
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_of(&self, target_id: &str, kind: TieKind) -> Option<usize> {
        // HashMap<Feature, _> needs an owned key
        self.column_of
            .get(&Feature {
                target_id: target_id.to_owned(),
                kind,
            })
            .copied()
    }

    pub fn feature(&self, column: usize) -> Option<&Feature> {
        self.columns.get(column)
    }

    pub fn features(&self) -> &[Feature] {
        &self.columns
    }

    /// Number of distinct users with each column active.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Hash of the column listing; models and reports carry it so that
    /// coefficients are never read against the wrong space.
    pub fn manifest_hash(&self) -> String {
        let mut buf = String::new();
        for f in &self.columns {
            buf.push_str(f.kind.as_str());
            buf.push('\t');
            buf.push_str(&f.target_id);
            buf.push('\n');
        }
        crate::sha256_hex(buf.as_bytes())
    }

    pub fn to_manifest(&self) -> FeatureManifest {
        FeatureManifest {
            version: FeatureManifest::VERSION,
            hash: self.manifest_hash(),
            columns: self
                .columns
                .iter()
                .zip(&self.support)
                .map(|(f, &support)| ManifestColumn {
                    target_id: f.target_id.clone(),
                    kind: f.kind,
                    support,
                })
                .collect(),
        }
    }

    pub fn from_manifest(m: &FeatureManifest) -> Result<Self> {
        if m.version != FeatureManifest::VERSION {
            return Err(Error::VersionMismatch(format!(
                "feature manifest version {}, expected {}",
                m.version,
                FeatureManifest::VERSION
            )));
        }
        let columns: Vec<Feature> = m
            .columns
            .iter()
            .map(|c| Feature {
                target_id: c.target_id.clone(),
                kind: c.kind,
            })
            .collect();
        if columns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("manifest columns are not sorted and unique".into()));
        }
        let space = Self::from_columns(columns, m.columns.iter().map(|c| c.support).collect());
        if space.manifest_hash() != m.hash {
            return Err(Error::VersionMismatch(
                "feature manifest hash does not match its columns".into(),
            ));
        }
        Ok(space)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestColumn {
    pub target_id: String,
    pub kind: TieKind,
    pub support: usize,
}

/// JSON-persisted feature space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub version: u32,
    pub hash: String,
    pub columns: Vec<ManifestColumn>,
}

impl FeatureManifest {
    pub const VERSION: u32 = 1;

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        crate::write_bytes(path, json.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&crate::read_text(path)?)?)
    }
}

/// One column per distinct `(target, kind)` pair; self-ties are dropped.
pub fn build_feature_space(ties: &[TieRecord]) -> FeatureSpace {
    let mut users_per_feature: BTreeMap<Feature, HashSet<&str>> = BTreeMap::new();
    for t in ties.iter().filter(|t| !t.is_self_tie()) {
        users_per_feature
            .entry(Feature {
                target_id: t.target_id.clone(),
                kind: t.kind,
            })
            .or_default()
            .insert(&t.user_id);
    }
    let (columns, support) = users_per_feature.into_iter().map(|(f, users)| (f, users.len())).unzip();
    FeatureSpace::from_columns(columns, support)
}

/// Sparse binary encoding: sorted, distinct active column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub user_id: String,
    pub active: Vec<usize>,
}

impl FeatureVector {
    pub fn new(user_id: impl Into<String>, columns: impl IntoIterator<Item = usize>) -> Self {
        let active: BTreeSet<usize> = columns.into_iter().collect();
        FeatureVector {
            user_id: user_id.into(),
            active: active.into_iter().collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.active.len()
    }

    pub fn to_dense(&self, n_columns: usize) -> Vec<f64> {
        let mut dense = vec![0.0; n_columns];
        for &c in &self.active {
            dense[c] = 1.0;
        }
        dense
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.active.iter().map(|&c| weights[c]).sum()
    }
}

/// Encodes one user's ties. Returns the vector and the number of ties whose
/// `(target, kind)` is not in the space. Self-ties are ignored.
pub fn encode_user(user_id: &str, ties: &[TieRecord], space: &FeatureSpace) -> (FeatureVector, usize) {
    let mut dropped = 0;
    let mut cols = BTreeSet::new();
    for t in ties.iter().filter(|t| t.user_id == user_id && !t.is_self_tie()) {
        match space.column_of(&t.target_id, t.kind) {
            Some(c) => {
                cols.insert(c);
            }
            None => dropped += 1,
        }
    }
    (FeatureVector::new(user_id, cols), dropped)
}

/// Encodes several users in one pass over the ties, in the given user order.
pub fn encode_users(user_ids: &[String], ties: &[TieRecord], space: &FeatureSpace) -> (Vec<FeatureVector>, usize) {
    let mut by_user: HashMap<&str, BTreeSet<usize>> = user_ids.iter().map(|u| (u.as_str(), BTreeSet::new())).collect();
    let mut dropped = 0;
    for t in ties.iter().filter(|t| !t.is_self_tie()) {
        if let Some(cols) = by_user.get_mut(t.user_id.as_str()) {
            match space.column_of(&t.target_id, t.kind) {
                Some(c) => {
                    cols.insert(c);
                }
                None => dropped += 1,
            }
        }
    }
    let vectors = user_ids
        .iter()
        .map(|u| FeatureVector::new(u.clone(), by_user.remove(u.as_str()).unwrap_or_default()))
        .collect();
    (vectors, dropped)
}

/// Removes columns with support below `min_support`, keeping column order,
/// and re-encodes `vectors` against the reduced space.
pub fn prune_features(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    min_support: usize,
) -> (FeatureSpace, Vec<FeatureVector>) {
    let mut remap = vec![None; space.n_columns()];
    let mut columns = Vec::new();
    let mut support = Vec::new();
    for (i, (f, &s)) in space.columns.iter().zip(&space.support).enumerate() {
        if s >= min_support {
            remap[i] = Some(columns.len());
            columns.push(f.clone());
            support.push(s);
        }
    }
    let reduced = FeatureSpace::from_columns(columns, support);
    let vectors = vectors
        .iter()
        .map(|v| FeatureVector::new(v.user_id.clone(), v.active.iter().filter_map(|&c| remap[c])))
        .collect();
    (reduced, vectors)
}

/// Parses `user_id,target_id,kind` CSV with a header row. Exact duplicate
/// records collapse.
pub fn parse_ties_csv(text: &str, path: &Path) -> Result<Vec<TieRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["user_id", "target_id", "kind"] {
        return Err(Error::parse(path, 1, "expected header user_id,target_id,kind"));
    }
    let mut seen = HashSet::new();
    let mut ties = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if row.len() != 3 {
            return Err(Error::parse(path, line, "expected 3 fields"));
        }
        let kind = row[2]
            .parse()
            .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        let tie = TieRecord::new(&row[0], &row[1], kind);
        if seen.insert(tie.clone()) {
            ties.push(tie);
        }
    }
    Ok(ties)
}

pub fn load_ties(path: &Path) -> Result<Vec<TieRecord>> {
    parse_ties_csv(&crate::read_text(path)?, path)
}

pub fn ties_to_csv(ties: &[TieRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["user_id", "target_id", "kind"]).map_err(csv_err)?;
    for t in ties {
        w.write_record([t.user_id.as_str(), t.target_id.as_str(), t.kind.as_str()])
            .map_err(csv_err)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Validation(e.to_string()))?).expect("csv output is UTF-8"))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("csv: {e}"))
}
