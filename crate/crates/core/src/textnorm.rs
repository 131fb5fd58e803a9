//! Arabic-aware text normalization, quote-introduction stripping and
//! token shingling.
//!
//! Every similarity computation in the crate works on the output of
//! [`normalize_arabic`], so the rules below define the comparison space:
//!
//! - Arabic combining marks (harakat, tanween, shadda, sukun, superscript
//!   alef, Quranic annotation marks) and tatweel are deleted.
//! - Alef variants `أ إ آ ٱ` fold to `ا`, `ة` to `ه`, `ى` to `ي`, `ؤ` to `و`
//!   and `ئ` to `ي`.
//! - Whitespace-separated tokens that are URLs or `@`-mentions are dropped.
//!   Hashtags keep their body; `#` and `_` become separators.
//! - Format controls (bidi marks, zero-width joiners, BOM) are deleted.
//! - Every other non-alphanumeric character is a separator; runs of
//!   separators collapse to one space and the result is trimmed.
//!
//! Digits and Latin letters are kept verbatim as tokens.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use crate::error::Result;

/// Character folding table applied after mark removal.
pub const LETTER_FOLDS: &[(char, char)] = &[
    ('\u{0623}', '\u{0627}'), // alef with hamza above
    ('\u{0625}', '\u{0627}'), // alef with hamza below
    ('\u{0622}', '\u{0627}'), // alef with madda
    ('\u{0671}', '\u{0627}'), // alef wasla
    ('\u{0629}', '\u{0647}'), // ta marbuta -> ha
    ('\u{0649}', '\u{064A}'), // alef maqsura -> ya
    ('\u{0624}', '\u{0648}'), // waw with hamza -> waw
    ('\u{0626}', '\u{064A}'), // ya with hamza -> ya
];

pub const TATWEEL: char = '\u{0640}';

/// Arabic combining marks removed as optional characters.
pub fn is_arabic_mark(c: char) -> bool {
    matches!(c,
        '\u{0610}'..='\u{061A}'
        | '\u{064B}'..='\u{065F}'
        | '\u{0670}'
        | '\u{06D6}'..='\u{06DC}'
        | '\u{06DF}'..='\u{06E4}'
        | '\u{06E7}'..='\u{06E8}'
        | '\u{06EA}'..='\u{06ED}'
    )
}

fn is_format_control(c: char) -> bool {
    matches!(c,
        '\u{00AD}'
        | '\u{061C}'
        | '\u{200B}'..='\u{200F}'
        | '\u{202A}'..='\u{202E}'
        | '\u{2060}'..='\u{2064}'
        | '\u{2066}'..='\u{2069}'
        | '\u{FE00}'..='\u{FE0F}'
        | '\u{FEFF}'
    )
}

fn fold_letter(c: char) -> char {
    LETTER_FOLDS
        .iter()
        .find(|(from, _)| *from == c)
        .map_or(c, |(_, to)| *to)
}

fn is_url(token: &str) -> bool {
    let lower = token.trim_start_matches(|c: char| !c.is_alphanumeric());
    let head: String = lower.chars().take(8).flat_map(char::to_lowercase).collect();
    head.starts_with("http://") || head.starts_with("https://") || head.starts_with("www.")
}

fn is_mention(token: &str) -> bool {
    token.starts_with('@') || token.starts_with('\u{FF20}')
}

/// Text in normal form. Construct with [`normalize_arabic`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NormalizedText {
    text: String,
    token_count: usize,
}

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.text.split(' ').filter(|t| !t.is_empty())
    }

    pub fn into_string(self) -> String {
        self.text
    }

    fn from_normal(text: String) -> Self {
        let token_count = text.split(' ').filter(|t| !t.is_empty()).count();
        NormalizedText { text, token_count }
    }
}

impl fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl AsRef<str> for NormalizedText {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

/// Normalize raw post or quote text. Total and idempotent.
pub fn normalize_arabic(raw: &str) -> NormalizedText {
    let mut out = String::with_capacity(raw.len());
    for token in raw.split_whitespace() {
        if is_url(token) || is_mention(token) {
            continue;
        }
        let mut pending_space = true;
        for c in token.chars() {
            if is_arabic_mark(c) || c == TATWEEL || is_format_control(c) {
                continue;
            }
            let c = fold_letter(c);
            if c.is_alphanumeric() {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push(c);
            } else {
                pending_space = true;
            }
        }
    }

    NormalizedText::from_normal(out)
}

/// Ordered list of normalized quote-introduction phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixLexicon {
    patterns: Vec<Vec<String>>,
}

/// Introduction phrases such as "The messenger of God said", "I heard the
/// prophet saying" and "Muhammad, peace upon him, said".
pub const DEFAULT_PREFIXES: &[&str] = &[
    "قال رسول الله صلى الله عليه وسلم",
    "قال رسول الله ﷺ",
    "قال رسول الله",
    "قال النبي صلى الله عليه وسلم",
    "قال النبي ﷺ",
    "قال النبي",
    "سمعت رسول الله صلى الله عليه وسلم يقول",
    "سمعت رسول الله يقول",
    "سمعت النبي صلى الله عليه وسلم يقول",
    "سمعت النبي يقول",
    "قال محمد صلى الله عليه وسلم",
    "قال محمد عليه الصلاة والسلام",
    "قال صلى الله عليه وسلم",
    "قال عليه الصلاة والسلام",
    "عن النبي صلى الله عليه وسلم قال",
    "عن رسول الله صلى الله عليه وسلم قال",
];

impl PrefixLexicon {
    /// Builds a lexicon, normalizing each pattern and skipping blanks.
    pub fn new<I, S>(patterns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = BTreeSet::new();
        let patterns = patterns
            .into_iter()
            .map(|p| normalize_arabic(p.as_ref()))
            .filter(|p| !p.is_empty())
            .filter(|p| seen.insert(p.as_str().to_owned()))
            .map(|p| p.tokens().map(str::to_owned).collect())
            .collect();
        PrefixLexicon { patterns }
    }

    pub fn empty() -> Self {
        PrefixLexicon { patterns: Vec::new() }
    }

    /// One pattern per line, UTF-8.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = crate::read_text(path)?;
        Ok(Self::new(text.lines()))
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> impl Iterator<Item = String> + '_ {
        self.patterns.iter().map(|p| p.join(" "))
    }
}

impl Default for PrefixLexicon {
    fn default() -> Self {
        Self::new(DEFAULT_PREFIXES)
    }
}

/// Removes the longest lexicon pattern that the text starts with, once.
///
/// Matching is on whole tokens. Quote marks are separators in normal form, so
/// a pattern right after a leading quote mark is also at the start.
pub fn strip_quote_prefix(text: &NormalizedText, lexicon: &PrefixLexicon) -> NormalizedText {
    let tokens: Vec<&str> = text.tokens().collect();
    let longest = lexicon
        .patterns
        .iter()
        .filter(|p| p.len() <= tokens.len() && p.iter().zip(&tokens).all(|(a, b)| a == b))
        .map(Vec::len)
        .max();
    match longest {
        Some(n) => NormalizedText::from_normal(tokens[n..].join(" ")),
        None => text.clone(),
    }
}

/// Set of contiguous n-token windows, joined with a single space.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShingleSet {
    shingles: BTreeSet<String>,
    source_token_count: usize,
}

impl ShingleSet {
    pub fn len(&self) -> usize {
        self.shingles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shingles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.shingles.iter().map(String::as_str)
    }

    pub fn contains(&self, shingle: &str) -> bool {
        self.shingles.contains(shingle)
    }

    pub fn source_token_count(&self) -> usize {
        self.source_token_count
    }

    pub(crate) fn as_set(&self) -> &BTreeSet<String> {
        &self.shingles
    }
}

impl<S: Into<String>> FromIterator<S> for ShingleSet {
    /// Builds a set directly from shingle strings (mostly for tests and
    /// synthetic data).
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let shingles: BTreeSet<String> = iter.into_iter().map(Into::into).collect();
        let source_token_count = shingles.len();
        ShingleSet {
            shingles,
            source_token_count,
        }
    }
}

/// Token n-grams of `text`. `n` must be at least 1; fewer than `n` tokens
/// gives the empty set.
pub fn shingle(text: &NormalizedText, n: usize) -> ShingleSet {
    assert!(n >= 1, "shingle size must be positive");
    let tokens: Vec<&str> = text.tokens().collect();
    let shingles = if tokens.len() < n {
        BTreeSet::new()
    } else {
        tokens.windows(n).map(|w| w.join(" ")).collect()
    };
    ShingleSet {
        shingles,
        source_token_count: tokens.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_diacritics() {
        assert_eq!(normalize_arabic("مُحَمَّدٌ").as_str(), "محمد");
    }

    #[test]
    fn folds_alef_and_ya() {
        assert_eq!(normalize_arabic("إلى").as_str(), "الي");
        assert_eq!(normalize_arabic("أآٱإ").as_str(), "اااا");
        assert_eq!(normalize_arabic("رحمة").as_str(), "رحمه");
        assert_eq!(normalize_arabic("مؤمن شئ").as_str(), "مومن شي");
    }

    #[test]
    fn empty_is_empty() {
        let n = normalize_arabic("");
        assert!(n.is_empty());
        assert_eq!(n.token_count(), 0);
    }

    #[test]
    fn removes_tatweel_and_collapses_space() {
        assert_eq!(normalize_arabic("  الـــله   اكبر \n").as_str(), "الله اكبر");
    }

    #[test]
    fn urls_mentions_hashtags() {
        let n = normalize_arabic("@user1 انشروا #حديث_موضوع https://t.co/abc www.x.com نص");
        assert_eq!(n.as_str(), "انشروا حديث موضوع نص");
        assert_eq!(n.token_count(), 4);
    }

    #[test]
    fn punctuation_becomes_space() {
        assert_eq!(normalize_arabic("«قال»:،نعم؟!").as_str(), "قال نعم");
        assert_eq!(normalize_arabic("a,b.c").as_str(), "a b c");
    }

    #[test]
    fn keeps_digits_and_latin() {
        assert_eq!(normalize_arabic("عام ٢٠٢٣ year 2023").as_str(), "عام ٢٠٢٣ year 2023");
    }

    #[test]
    fn emoji_are_separators() {
        assert_eq!(normalize_arabic("حديث🌹صحيح 👍").as_str(), "حديث صحيح");
    }

    #[test]
    fn default_prefix_is_stripped() {
        let lex = PrefixLexicon::default();
        let t = normalize_arabic("قَالَ رَسُولُ اللَّهِ صَلَّى اللَّهُ عَلَيْهِ وَسَلَّمَ: الدين النصيحة");
        assert_eq!(strip_quote_prefix(&t, &lex).as_str(), "الدين النصيحه");
    }

    #[test]
    fn prefix_after_leading_quote_mark() {
        let lex = PrefixLexicon::default();
        let t = normalize_arabic("\"قال النبي ﷺ: X\"");
        assert_eq!(strip_quote_prefix(&t, &lex).as_str(), "X");
    }

    #[test]
    fn longest_prefix_wins() {
        let lex = PrefixLexicon::new(["قال رسول الله", "قال رسول الله صلى الله عليه وسلم"]);
        let t = normalize_arabic("قال رسول الله صلى الله عليه وسلم X");
        assert_eq!(strip_quote_prefix(&t, &lex).as_str(), "X");
    }

    #[test]
    fn prefix_only_text_becomes_empty() {
        let lex = PrefixLexicon::default();
        let t = normalize_arabic("قال رسول الله");
        assert!(strip_quote_prefix(&t, &lex).is_empty());
    }

    #[test]
    fn no_prefix_unchanged() {
        let lex = PrefixLexicon::default();
        let t = normalize_arabic("الدين النصيحة قال رسول الله");
        assert_eq!(strip_quote_prefix(&t, &lex), t);
    }

    #[test]
    fn prefix_requires_whole_tokens() {
        let lex = PrefixLexicon::new(["قال"]);
        let t = normalize_arabic("قالوا شيئا");
        assert_eq!(strip_quote_prefix(&t, &lex), t);
    }

    #[test]
    fn default_lexicon_is_normalized() {
        let lex = PrefixLexicon::default();
        assert!(lex.len() >= 12);
        for p in lex.patterns() {
            assert_eq!(normalize_arabic(&p).as_str(), p);
        }
    }

    #[test]
    fn shingles() {
        let t = normalize_arabic("a b c");
        let s1 = shingle(&t, 1);
        assert_eq!(s1.iter().collect::<Vec<_>>(), ["a", "b", "c"]);
        let s2 = shingle(&t, 2);
        assert_eq!(s2.iter().collect::<Vec<_>>(), ["a b", "b c"]);
        assert!(shingle(&normalize_arabic("a"), 2).is_empty());
        assert_eq!(shingle(&t, 1).source_token_count(), 3);
    }

    #[test]
    fn shingles_are_a_set() {
        let s = shingle(&normalize_arabic("a b a b"), 1);
        assert_eq!(s.len(), 2);
    }
}
