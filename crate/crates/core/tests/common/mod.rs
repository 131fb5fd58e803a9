#![allow(dead_code)]

use quotematch::corpus::{AuthenticityLevel, ReferenceCorpus, ReferenceQuote};
use quotematch::textnorm::PrefixLexicon;

/// Letters left untouched by normalization.
const LETTERS: [char; 27] = [
    'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف', 'ق', 'ك', 'ل', 'م',
    'ن', 'ه', 'و', 'ي',
];

/// Distinct Arabic token for every `i`; never a lexicon word.
pub fn word(i: usize) -> String {
    let mut s = String::from('ز');
    let mut n = i;
    loop {
        s.push(LETTERS[n % LETTERS.len()]);
        n /= LETTERS.len();
        if n == 0 {
            break;
        }
    }
    s
}

pub fn sentence(ids: impl IntoIterator<Item = usize>) -> String {
    ids.into_iter().map(word).collect::<Vec<_>>().join(" ")
}

pub fn quote(id: &str, text: &str, level: AuthenticityLevel) -> ReferenceQuote {
    ReferenceQuote::new(id, text, level, "test", &PrefixLexicon::default()).expect("non-empty quote")
}

pub fn corpus(quotes: Vec<ReferenceQuote>) -> ReferenceCorpus {
    ReferenceCorpus::from_quotes(quotes).expect("valid corpus").0
}
