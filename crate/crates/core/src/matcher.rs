//! MinHash signatures, LSH banding, and post-to-quote matching.
//!
//! A post is matched by normalizing it, stripping its introduction phrase,
//! shingling, retrieving LSH candidates and verifying each candidate with
//! exact Jaccard similarity. The best candidate above the threshold (ties go
//! to the lowest quote id) becomes the match.
//!
//! The probability that a pair with Jaccard similarity `s` shares at least
//! one band is `1 - (1 - s^rows)^bands`. The default of 128 bands of 2 rows
//! captures pairs at `s = 0.35` with probability above `1 - 1e-7`, so exact
//! verification reproduces all-pairs matching at that threshold.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthenticityLevel, ReferenceCorpus};
use crate::error::{Error, Result};
use crate::textnorm::{normalize_arabic, shingle, strip_quote_prefix, NormalizedText, PrefixLexicon, ShingleSet};

pub const DEFAULT_THRESHOLD: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashParams {
    pub k: usize,
    pub seed: u64,
    pub bands: usize,
    pub rows: usize,
}

impl Default for MinHashParams {
    fn default() -> Self {
        MinHashParams {
            k: 256,
            seed: 42,
            bands: 128,
            rows: 2,
        }
    }
}

impl MinHashParams {
    pub fn new(k: usize, seed: u64, bands: usize, rows: usize) -> Result<Self> {
        let p = MinHashParams { k, seed, bands, rows };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 16 {
            return Err(Error::Params(format!("k must be at least 16, got {}", self.k)));
        }
        if self.bands == 0 || self.rows == 0 {
            return Err(Error::Params("bands and rows must be positive".into()));
        }
        if self.bands * self.rows != self.k {
            return Err(Error::Params(format!(
                "bands x rows must equal k ({} x {} != {})",
                self.bands, self.rows, self.k
            )));
        }
        Ok(())
    }

    /// Probability that a pair with Jaccard `s` shares at least one band.
    pub fn capture_probability(&self, s: f64) -> f64 {
        1.0 - (1.0 - s.powi(self.rows as i32)).powi(self.bands as i32)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a shingle, independent of platform and process.
pub fn shingle_hash(shingle: &str) -> u64 {
    mix64(fnv1a(shingle.as_bytes()))
}

/// Seeded family of `k` multiply-add-shift hash functions
/// `h(x) = ((a * x + b) mod 2^128) >> 64`.
#[derive(Debug, Clone)]
pub struct MinHasher {
    params: MinHashParams,
    coeffs: Vec<(u128, u128)>,
}

impl MinHasher {
    pub fn new(params: MinHashParams) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let coeffs = (0..params.k)
            .map(|_| (rng.gen::<u128>() | 1, rng.gen::<u128>()))
            .collect();
        Ok(MinHasher { params, coeffs })
    }

    pub fn params(&self) -> &MinHashParams {
        &self.params
    }

    pub fn signature(&self, set: &ShingleSet) -> MinHashSignature {
        let mut values = vec![u64::MAX; self.params.k];
        for s in set.iter() {
            let x = u128::from(shingle_hash(s));
            for (v, &(a, b)) in values.iter_mut().zip(&self.coeffs) {
                let h = (a.wrapping_mul(x).wrapping_add(b) >> 64) as u64;
                if h < *v {
                    *v = h;
                }
            }
        }
        MinHashSignature {
            values,
            seed: self.params.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    values: Vec<u64>,
    seed: u64,
}

impl MinHashSignature {
    /// Signature of the empty set.
    pub fn sentinel(k: usize, seed: u64) -> Self {
        MinHashSignature {
            values: vec![u64::MAX; k],
            seed,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.values.iter().all(|&v| v == u64::MAX)
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

pub fn minhash_signature(set: &ShingleSet, params: &MinHashParams) -> Result<MinHashSignature> {
    Ok(MinHasher::new(*params)?.signature(set))
}

/// Fraction of agreeing components. A sentinel (empty-set) signature has
/// similarity 0 with everything, matching the exact-Jaccard convention.
pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Params(format!(
            "signature lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.seed != b.seed {
        return Err(Error::Params(format!(
            "signature seeds differ: {} vs {}",
            a.seed, b.seed
        )));
    }
    if a.is_empty() || a.is_sentinel() || b.is_sentinel() {
        return Ok(0.0);
    }
    let agree = a.values.iter().zip(&b.values).filter(|(x, y)| x == y).count();
    Ok(agree as f64 / a.len() as f64)
}

/// `|a ∩ b| / |a ∪ b|`, defined as 0 when both sets are empty.
pub fn exact_jaccard(a: &ShingleSet, b: &ShingleSet) -> f64 {
    let (a, b) = (a.as_set(), b.as_set());
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let inter = small.iter().filter(|s| large.contains(*s)).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

fn band_key(rows: &[u64]) -> u64 {
    let mut h = FNV_OFFSET;
    for v in rows {
        for b in v.to_le_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
        }
    }
    mix64(h)
}

/// LSH banding index over a reference corpus. Immutable once built.
#[derive(Debug, Clone)]
pub struct LshIndex {
    hasher: MinHasher,
    shingle_n: usize,
    corpus_fingerprint: String,
    ids: Vec<String>,
    shingles: Vec<ShingleSet>,
    signatures: Vec<MinHashSignature>,
    tables: Vec<HashMap<u64, Vec<u32>>>,
}

impl LshIndex {
    pub fn params(&self) -> &MinHashParams {
        self.hasher.params()
    }

    pub fn hasher(&self) -> &MinHasher {
        &self.hasher
    }

    pub fn shingle_n(&self) -> usize {
        self.shingle_n
    }

    pub fn corpus_fingerprint(&self) -> &str {
        &self.corpus_fingerprint
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, slot: usize) -> &str {
        &self.ids[slot]
    }

    pub fn shingles(&self, slot: usize) -> &ShingleSet {
        &self.shingles[slot]
    }

    pub fn signature(&self, slot: usize) -> &MinHashSignature {
        &self.signatures[slot]
    }

    /// Number of band buckets holding `slot` (0 for empty-shingle quotes).
    pub fn bucket_count(&self, slot: usize) -> usize {
        let slot = slot as u32;
        self.tables
            .iter()
            .filter(|t| t.values().any(|v| v.contains(&slot)))
            .count()
    }

    fn from_parts(
        hasher: MinHasher,
        shingle_n: usize,
        corpus_fingerprint: String,
        ids: Vec<String>,
        shingles: Vec<ShingleSet>,
        signatures: Vec<MinHashSignature>,
    ) -> Self {
        let p = *hasher.params();
        let mut tables: Vec<HashMap<u64, Vec<u32>>> = vec![HashMap::new(); p.bands];
        for (slot, sig) in signatures.iter().enumerate() {
            if sig.is_sentinel() {
                continue;
            }
            for (band, table) in tables.iter_mut().enumerate() {
                let key = band_key(&sig.values[band * p.rows..(band + 1) * p.rows]);
                table.entry(key).or_default().push(slot as u32);
            }
        }
        LshIndex {
            hasher,
            shingle_n,
            corpus_fingerprint,
            ids,
            shingles,
            signatures,
            tables,
        }
    }

    /// Slots of indexed quotes sharing at least one full band with `sig`,
    /// in ascending order.
    pub fn candidate_slots(&self, sig: &MinHashSignature) -> Vec<usize> {
        if sig.is_sentinel() || sig.seed != self.params().seed || sig.len() != self.params().k {
            return Vec::new();
        }
        let rows = self.params().rows;
        let mut out = BTreeSet::new();
        for (band, table) in self.tables.iter().enumerate() {
            if let Some(slots) = table.get(&band_key(&sig.values[band * rows..(band + 1) * rows])) {
                out.extend(slots.iter().map(|&s| s as usize));
            }
        }
        out.into_iter().collect()
    }

    const MAGIC: &'static [u8; 8] = b"QMLSHIDX";
    const VERSION: u32 = 1;

    /// Versioned little-endian binary encoding with embedded params.
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = self.params();
        let mut out = Vec::new();
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&Self::VERSION.to_le_bytes());
        for v in [p.k, p.bands, p.rows, self.shingle_n] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&p.seed.to_le_bytes());
        write_str(&mut out, &self.corpus_fingerprint);
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        for (id, sig) in self.ids.iter().zip(&self.signatures) {
            write_str(&mut out, id);
            for v in &sig.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Decodes an index written by [`LshIndex::to_bytes`]. The corpus must be
    /// the one the index was built from; shingle sets are recomputed from it.
    pub fn from_bytes(bytes: &[u8], corpus: &ReferenceCorpus) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::Validation("not a quotematch index file".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != Self::VERSION {
            return Err(Error::VersionMismatch(format!(
                "index format version {version}, expected {}",
                Self::VERSION
            )));
        }
        let k = read_u64(&mut r)? as usize;
        let bands = read_u64(&mut r)? as usize;
        let rows = read_u64(&mut r)? as usize;
        let shingle_n = read_u64(&mut r)? as usize;
        let seed = read_u64(&mut r)?;
        let params = MinHashParams::new(k, seed, bands, rows)?;
        let fingerprint = read_str(&mut r)?;
        if fingerprint != corpus.fingerprint() {
            return Err(Error::VersionMismatch("index was built from a different corpus".into()));
        }
        let count = read_u64(&mut r)? as usize;
        if count != corpus.len() {
            return Err(Error::VersionMismatch("index size differs from corpus".into()));
        }
        let mut ids = Vec::with_capacity(count);
        let mut signatures = Vec::with_capacity(count);
        for _ in 0..count {
            ids.push(read_str(&mut r)?);
            let values = (0..k).map(|_| read_u64(&mut r)).collect::<Result<Vec<_>>>()?;
            signatures.push(MinHashSignature { values, seed });
        }
        if !r.is_empty() {
            return Err(Error::Validation("trailing bytes in index file".into()));
        }
        let shingles = corpus
            .quotes()
            .iter()
            .map(|q| shingle(&q.normalized_text, shingle_n))
            .collect();
        Ok(Self::from_parts(
            MinHasher::new(params)?,
            shingle_n,
            fingerprint,
            ids,
            shingles,
            signatures,
        ))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::write_bytes(path, &self.to_bytes())
    }

    pub fn read(path: &Path, corpus: &ReferenceCorpus) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, corpus)
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u64).to_le_bytes());
    out.write_all(s.as_bytes()).expect("writing to a Vec");
}

fn truncated() -> Error {
    Error::Validation("truncated index file".into())
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|_| truncated())
}

fn read_array<const N: usize>(r: &mut &[u8]) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf)?;
    Ok(buf)
}

fn read_u64(r: &mut &[u8]) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_str(r: &mut &[u8]) -> Result<String> {
    let len = read_u64(r)? as usize;
    if len > r.len() {
        return Err(truncated());
    }
    let (head, tail) = r.split_at(len);
    *r = tail;
    String::from_utf8(head.to_vec()).map_err(|_| Error::Validation("invalid UTF-8 in index file".into()))
}

/// Indexes every quote of a non-empty corpus using `shingle_n`-token shingles.
pub fn build_index(corpus: &ReferenceCorpus, params: &MinHashParams, shingle_n: usize) -> Result<LshIndex> {
    if corpus.is_empty() {
        return Err(Error::Contract("cannot index an empty corpus".into()));
    }
    if shingle_n == 0 {
        return Err(Error::Params("shingle size must be positive".into()));
    }
    let hasher = MinHasher::new(*params)?;
    let shingles: Vec<ShingleSet> = corpus
        .quotes()
        .iter()
        .map(|q| shingle(&q.normalized_text, shingle_n))
        .collect();
    let signatures = shingles.iter().map(|s| hasher.signature(s)).collect();
    let ids = corpus.ids().map(str::to_owned).collect();
    Ok(LshIndex::from_parts(
        hasher,
        shingle_n,
        corpus.fingerprint(),
        ids,
        shingles,
        signatures,
    ))
}

pub fn query_candidates(index: &LshIndex, set: &ShingleSet) -> BTreeSet<String> {
    let sig = index.hasher.signature(set);
    index
        .candidate_slots(&sig)
        .into_iter()
        .map(|slot| index.ids[slot].clone())
        .collect()
}

/// Hadith refuting phrases ("fabricated hadith", "hadith with no origin",
/// "degree: fabricated", ...).
pub const DEFAULT_REFUTE_TERMS: [&str; 14] = [
    "حديث موضوع",
    "حديث مفبرك",
    "حديث مفترى",
    "حديث غير صحيح",
    "حديث مكذوب",
    "حديث كذب على رسول الله",
    "حديث لا يصح",
    "حديث لا أصل له",
    "الدرجة: لا يصح",
    "حديث ضعيف",
    "الدرجة: موضوع",
    "حديث ليس صحيح",
    "حديث لم يرد",
    "حديث مختلق",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefuteLexicon {
    phrases: Vec<Vec<String>>,
}

impl RefuteLexicon {
    /// Normalizes each phrase; blank phrases are skipped. At least one phrase
    /// must remain.
    pub fn new<I, S>(phrases: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = BTreeSet::new();
        let phrases: Vec<Vec<String>> = phrases
            .into_iter()
            .map(|p| normalize_arabic(p.as_ref()))
            .filter(|p| !p.is_empty() && seen.insert(p.as_str().to_owned()))
            .map(|p| p.tokens().map(str::to_owned).collect())
            .collect();
        if phrases.is_empty() {
            return Err(Error::Validation("refute lexicon is empty".into()));
        }
        Ok(RefuteLexicon { phrases })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::new(crate::read_text(path)?.lines())
    }

    /// Adds phrases on top of the current ones.
    pub fn extend<I, S>(&self, more: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let current: Vec<String> = self.phrases().collect();
        Self::new(
            current
                .into_iter()
                .chain(more.into_iter().map(|s| s.as_ref().to_owned())),
        )
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn phrases(&self) -> impl Iterator<Item = String> + '_ {
        self.phrases.iter().map(|p| p.join(" "))
    }

    /// True iff some phrase occurs as a contiguous token run of `text`.
    pub fn matches(&self, text: &NormalizedText) -> bool {
        let tokens: Vec<&str> = text.tokens().collect();
        self.phrases.iter().any(|phrase| {
            tokens.len() >= phrase.len()
                && tokens
                    .windows(phrase.len())
                    .any(|w| w.iter().zip(phrase).all(|(a, b)| *a == b))
        })
    }
}

impl Default for RefuteLexicon {
    fn default() -> Self {
        Self::new(DEFAULT_REFUTE_TERMS).expect("default refute terms are non-empty")
    }
}

pub fn contains_refute_term(post_text: &str, lexicon: &RefuteLexicon) -> bool {
    lexicon.matches(&normalize_arabic(post_text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Circulation,
    Refute,
    NonFabricatedShare,
}

impl MatchKind {
    pub fn classify(authenticity: AuthenticityLevel, refute_term: bool) -> Self {
        match (authenticity.is_fabricated(), refute_term) {
            (true, true) => MatchKind::Refute,
            (true, false) => MatchKind::Circulation,
            (false, _) => MatchKind::NonFabricatedShare,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub post_id: String,
    pub quote_id: String,
    pub similarity: f64,
    pub authenticity: AuthenticityLevel,
    pub kind: MatchKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verification {
    /// Candidates are scored with exact Jaccard.
    #[default]
    Exact,
    /// Candidates are scored with the signature estimate only.
    SignatureOnly,
}

/// Normalization and scoring inputs for one post, kept so callers can reuse
/// the refute decision and shingles.
#[derive(Debug, Clone)]
pub struct PreparedPost {
    pub normalized: NormalizedText,
    pub stripped: NormalizedText,
    pub shingles: ShingleSet,
    pub refute_term: bool,
}

/// Everything needed to match posts: index, corpus and lexicons.
#[derive(Debug, Clone, Copy)]
pub struct Matcher<'a> {
    index: &'a LshIndex,
    corpus: &'a ReferenceCorpus,
    refutes: &'a RefuteLexicon,
    prefixes: &'a PrefixLexicon,
    threshold: f64,
    verification: Verification,
}

impl<'a> Matcher<'a> {
    pub fn new(
        index: &'a LshIndex,
        corpus: &'a ReferenceCorpus,
        refutes: &'a RefuteLexicon,
        prefixes: &'a PrefixLexicon,
        threshold: f64,
    ) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Params(format!("threshold must be in (0, 1), got {threshold}")));
        }
        if index.corpus_fingerprint() != corpus.fingerprint() {
            return Err(Error::VersionMismatch("index and corpus do not match".into()));
        }
        Ok(Matcher {
            index,
            corpus,
            refutes,
            prefixes,
            threshold,
            verification: Verification::Exact,
        })
    }

    pub fn with_verification(mut self, verification: Verification) -> Self {
        self.verification = verification;
        self
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn prepare(&self, text: &str) -> PreparedPost {
        let normalized = normalize_arabic(text);
        let refute_term = self.refutes.matches(&normalized);
        let stripped = strip_quote_prefix(&normalized, self.prefixes);
        let shingles = shingle(&stripped, self.index.shingle_n());
        PreparedPost {
            normalized,
            stripped,
            shingles,
            refute_term,
        }
    }

    /// Best candidate `(slot, similarity)` regardless of threshold.
    pub fn best_candidate(&self, shingles: &ShingleSet) -> Option<(usize, f64)> {
        if shingles.is_empty() {
            return None;
        }
        let sig = self.index.hasher.signature(shingles);
        let mut best: Option<(usize, f64)> = None;
        for slot in self.index.candidate_slots(&sig) {
            let sim = match self.verification {
                Verification::Exact => exact_jaccard(shingles, &self.index.shingles[slot]),
                Verification::SignatureOnly => estimate_jaccard(&sig, &self.index.signatures[slot]).unwrap_or(0.0),
            };
            let better = match best {
                None => true,
                Some((b, bs)) => sim > bs || (sim == bs && self.index.ids[slot] < self.index.ids[b]),
            };
            if better {
                best = Some((slot, sim));
            }
        }
        best
    }

    pub fn match_post(&self, post_id: &str, text: &str) -> Option<MatchResult> {
        let prepared = self.prepare(text);
        self.match_prepared(post_id, &prepared)
    }

    pub fn match_prepared(&self, post_id: &str, prepared: &PreparedPost) -> Option<MatchResult> {
        let (slot, similarity) = self.best_candidate(&prepared.shingles)?;
        if similarity <= self.threshold {
            return None;
        }
        let quote_id = &self.index.ids[slot];
        let authenticity = self.corpus.get(quote_id)?.authenticity;
        Some(MatchResult {
            post_id: post_id.to_owned(),
            quote_id: quote_id.clone(),
            similarity,
            authenticity,
            kind: MatchKind::classify(authenticity, prepared.refute_term),
        })
    }
}

/// One-shot matching of a single post with exact verification.
pub fn match_post(
    post_id: &str,
    post_text: &str,
    index: &LshIndex,
    corpus: &ReferenceCorpus,
    refutes: &RefuteLexicon,
    prefixes: &PrefixLexicon,
    threshold: f64,
) -> Result<Option<MatchResult>> {
    Ok(Matcher::new(index, corpus, refutes, prefixes, threshold)?.match_post(post_id, post_text))
}
