//! Reference quote corpora: loading, deduplication, merging and filtering.
//!
//! Corpus files are tab-separated with the header
//! `id<TAB>authenticity<TAB>source<TAB>text`, one quote per line. Quotes are
//! deduplicated on their normalized text; the first-seen id is kept.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::{normalize_arabic, strip_quote_prefix, NormalizedText, PrefixLexicon};

pub const TSV_HEADER: &str = "id\tauthenticity\tsource\ttext";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthenticityLevel {
    Authentic,
    Good,
    Weak,
    Fabricated,
}

impl AuthenticityLevel {
    pub const ALL: [AuthenticityLevel; 4] = [
        AuthenticityLevel::Authentic,
        AuthenticityLevel::Good,
        AuthenticityLevel::Weak,
        AuthenticityLevel::Fabricated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AuthenticityLevel::Authentic => "authentic",
            AuthenticityLevel::Good => "good",
            AuthenticityLevel::Weak => "weak",
            AuthenticityLevel::Fabricated => "fabricated",
        }
    }

    pub fn is_fabricated(self) -> bool {
        self == AuthenticityLevel::Fabricated
    }
}

impl fmt::Display for AuthenticityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuthenticityLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "authentic" | "sahih" => Ok(AuthenticityLevel::Authentic),
            "good" | "hasan" => Ok(AuthenticityLevel::Good),
            "weak" | "daif" => Ok(AuthenticityLevel::Weak),
            "fabricated" | "mawdu" => Ok(AuthenticityLevel::Fabricated),
            other => Err(Error::Validation(format!("unknown authenticity label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceQuote {
    pub id: String,
    pub raw_text: String,
    pub normalized_text: NormalizedText,
    pub authenticity: AuthenticityLevel,
    pub source: String,
}

impl ReferenceQuote {
    /// Normalizes `raw_text` and strips its introduction phrase. Returns
    /// `None` when nothing is left.
    pub fn new(
        id: impl Into<String>,
        raw_text: impl Into<String>,
        authenticity: AuthenticityLevel,
        source: impl Into<String>,
        prefixes: &PrefixLexicon,
    ) -> Option<Self> {
        let raw_text = raw_text.into();
        let normalized_text = strip_quote_prefix(&normalize_arabic(&raw_text), prefixes);
        if normalized_text.is_empty() {
            return None;
        }
        Some(ReferenceQuote {
            id: id.into(),
            raw_text,
            normalized_text,
            authenticity,
            source: source.into(),
        })
    }
}

/// Deduplicated, immutable collection of reference quotes.
#[derive(Debug, Clone, Default)]
pub struct ReferenceCorpus {
    quotes: Vec<ReferenceQuote>,
    provenance: Vec<String>,
    by_id: HashMap<String, usize>,
    by_text: HashMap<String, usize>,
}

impl PartialEq for ReferenceCorpus {
    fn eq(&self, other: &Self) -> bool {
        self.quotes == other.quotes && self.provenance == other.provenance
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub rows: usize,
    pub collapsed: usize,
    /// `(dropped id, kept id)` for every collapsed row.
    pub collapsed_ids: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MergeReport {
    pub collisions: usize,
    /// `(id in b, id kept from a)` per collision.
    pub collided_ids: Vec<(String, String)>,
    /// `(original id in b, new id)` for ids re-namespaced by source tag.
    pub renamed_ids: Vec<(String, String)>,
    pub size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterReport {
    pub removed: usize,
    pub unknown_ids: Vec<String>,
    pub size: usize,
}

impl ReferenceCorpus {
    /// Builds a corpus, collapsing quotes whose normalized text was already
    /// seen. Duplicate ids with distinct texts are a validation error.
    pub fn from_quotes<I>(quotes: I) -> Result<(Self, LoadReport)>
    where
        I: IntoIterator<Item = ReferenceQuote>,
    {
        let mut corpus = ReferenceCorpus::default();
        let mut report = LoadReport::default();
        for q in quotes {
            report.rows += 1;
            if let Some(&kept) = corpus.by_text.get(q.normalized_text.as_str()) {
                report.collapsed += 1;
                report
                    .collapsed_ids
                    .push((q.id.clone(), corpus.quotes[kept].id.clone()));
                continue;
            }
            if corpus.by_id.contains_key(&q.id) {
                return Err(Error::Validation(format!("duplicate quote id {:?}", q.id)));
            }
            corpus.push(q);
        }
        Ok((corpus, report))
    }

    fn push(&mut self, q: ReferenceQuote) {
        let idx = self.quotes.len();
        if !self.provenance.contains(&q.source) {
            self.provenance.push(q.source.clone());
        }
        self.by_id.insert(q.id.clone(), idx);
        self.by_text.insert(q.normalized_text.as_str().to_owned(), idx);
        self.quotes.push(q);
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    pub fn quotes(&self) -> &[ReferenceQuote] {
        &self.quotes
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn get(&self, id: &str) -> Option<&ReferenceQuote> {
        self.by_id.get(id).map(|&i| &self.quotes[i])
    }

    pub fn find_text(&self, normalized: &str) -> Option<&ReferenceQuote> {
        self.by_text.get(normalized).map(|&i| &self.quotes[i])
    }

    pub fn by_level(&self, level: AuthenticityLevel) -> impl Iterator<Item = &ReferenceQuote> {
        self.quotes.iter().filter(move |q| q.authenticity == level)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.quotes.iter().map(|q| q.id.as_str())
    }

    /// Content hash over ids, levels and normalized texts. Binds indexes and
    /// scan outputs to the corpus they were built from.
    pub fn fingerprint(&self) -> String {
        let mut buf = String::new();
        for q in &self.quotes {
            buf.push_str(&q.id);
            buf.push('\t');
            buf.push_str(q.authenticity.as_str());
            buf.push('\t');
            buf.push_str(q.normalized_text.as_str());
            buf.push('\n');
        }
        crate::sha256_hex(buf.as_bytes())
    }

    /// Serializes to the TSV corpus format. Tabs and newlines inside texts
    /// are written as spaces, which normalization treats identically.
    pub fn to_tsv(&self) -> String {
        let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
        let mut out = String::from(TSV_HEADER);
        out.push('\n');
        for q in &self.quotes {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                clean(&q.id),
                q.authenticity,
                clean(&q.source),
                clean(&q.raw_text)
            ));
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        crate::write_bytes(path, self.to_tsv().as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    #[default]
    Tsv,
}

/// Parses TSV corpus text. `path` is only used in error messages.
pub fn parse_corpus(text: &str, path: &Path, prefixes: &PrefixLexicon) -> Result<(ReferenceCorpus, LoadReport)> {
    let text = text.strip_prefix('\u{FEFF}').unwrap_or(text);
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return ReferenceCorpus::from_quotes(std::iter::empty());
    };
    let header_cols: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    if header_cols != ["id", "authenticity", "source", "text"] {
        return Err(Error::parse(path, 1, format!("expected header {TSV_HEADER:?}")));
    }

    let mut quotes = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        let cols: Vec<&str> = line.splitn(4, '\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 4 tab-separated fields, got {}", cols.len()),
            ));
        }
        let id = cols[0].trim();
        if id.is_empty() {
            return Err(Error::parse(path, lineno, "empty id"));
        }
        let level: AuthenticityLevel = cols[1]
            .parse()
            .map_err(|e: Error| Error::Validation(format!("{}:{lineno}: {e}", path.display())))?;
        let source = cols[2].trim();
        let raw = cols[3];
        if raw.trim().is_empty() {
            return Err(Error::parse(path, lineno, "empty text"));
        }
        let quote = ReferenceQuote::new(id, raw, level, source, prefixes)
            .ok_or_else(|| Error::parse(path, lineno, "text is empty after normalization"))?;
        quotes.push(quote);
    }
    ReferenceCorpus::from_quotes(quotes).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn load_corpus(
    path: &Path,
    format: CorpusFormat,
    prefixes: &PrefixLexicon,
) -> Result<(ReferenceCorpus, LoadReport)> {
    match format {
        CorpusFormat::Tsv => parse_corpus(&crate::read_text(path)?, path, prefixes),
    }
}

/// Union by normalized text; quotes from `a` win collisions. An id from `b`
/// that is already taken by a different text in `a` is re-namespaced as
/// `source:id`.
pub fn merge_corpora(a: &ReferenceCorpus, b: &ReferenceCorpus) -> (ReferenceCorpus, MergeReport) {
    let mut merged = a.clone();
    let mut report = MergeReport::default();
    for q in &b.quotes {
        if let Some(&kept) = merged.by_text.get(q.normalized_text.as_str()) {
            report.collisions += 1;
            report.collided_ids.push((q.id.clone(), merged.quotes[kept].id.clone()));
            continue;
        }
        let mut q = q.clone();
        if merged.by_id.contains_key(&q.id) {
            let base = format!("{}:{}", q.source, q.id);
            let mut candidate = base.clone();
            let mut n = 2;
            while merged.by_id.contains_key(&candidate) {
                candidate = format!("{base}#{n}");
                n += 1;
            }
            report.renamed_ids.push((q.id.clone(), candidate.clone()));
            q.id = candidate;
        }
        merged.push(q);
    }
    for tag in &b.provenance {
        if !merged.provenance.contains(tag) {
            merged.provenance.push(tag.clone());
        }
    }
    report.size = merged.len();
    (merged, report)
}

/// Drops every quote whose id is in `exclude`. Unknown ids are reported.
pub fn filter_corpus(c: &ReferenceCorpus, exclude: &HashSet<String>) -> (ReferenceCorpus, FilterReport) {
    let mut out = ReferenceCorpus {
        provenance: c.provenance.clone(),
        ..Default::default()
    };
    for q in &c.quotes {
        if !exclude.contains(&q.id) {
            out.push(q.clone());
        }
    }
    let unknown_ids: BTreeSet<String> = exclude
        .iter()
        .filter(|id| !c.by_id.contains_key(*id))
        .cloned()
        .collect();
    if !unknown_ids.is_empty() {
        log::warn!("{} exclusion ids not in corpus", unknown_ids.len());
    }
    let report = FilterReport {
        removed: c.len() - out.len(),
        unknown_ids: unknown_ids.into_iter().collect(),
        size: out.len(),
    };
    (out, report)
}

/// One id per line; blank lines and `#` comments are ignored.
pub fn parse_exclusion_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().trim_start_matches('\u{FEFF}'))
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

pub fn load_exclusion_list(path: &Path) -> Result<HashSet<String>> {
    Ok(parse_exclusion_list(&crate::read_text(path)?))
}
