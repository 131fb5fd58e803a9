//! Seeded synthetic worlds for end-to-end runs: a reference corpus, user
//! timelines with planted circulation/debunking behavior, network ties with
//! planted class-exclusive features, and the ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorLabel, Post};
use crate::corpus::{AuthenticityLevel, ReferenceCorpus, ReferenceQuote};
use crate::error::{Error, Result};
use crate::features::{ties_to_csv, Feature, TieKind, TieRecord};
use crate::matcher::DEFAULT_REFUTE_TERMS;
use crate::textnorm::{normalize_arabic, PrefixLexicon, DEFAULT_PREFIXES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Users per class (circulators, debunkers).
    pub n_per_class: usize,
    /// Users who are neither.
    pub n_neither: usize,
    /// Class-exclusive `(target, kind)` features per class.
    pub planted_per_class: usize,
    /// Probability that a user holds each planted feature of its class.
    pub planted_tie_prob: f64,
    /// Shared accounts used for class-neutral ties.
    pub background_targets: usize,
    pub background_ties_per_user: usize,
    /// Posts per timeline.
    pub timeline_len: usize,
    /// Fraction of debunkers with exactly two refutes (the rest have 3-5).
    pub balance_fraction: f64,
    /// Probability that a user's ties are drawn from the other class.
    pub label_noise: f64,
    pub circulator_retweet_rate: f64,
    pub debunker_retweet_rate: f64,
    pub n_fabricated_quotes: usize,
    pub n_other_quotes: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_per_class: 559,
            n_neither: 100,
            planted_per_class: 20,
            planted_tie_prob: 0.3,
            background_targets: 2000,
            background_ties_per_user: 30,
            timeline_len: 40,
            balance_fraction: 216.0 / 559.0,
            label_noise: 0.05,
            circulator_retweet_rate: 0.758,
            debunker_retweet_rate: 0.279,
            n_fabricated_quotes: 60,
            n_other_quotes: 60,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.n_per_class == 0
            || self.planted_per_class == 0
            || self.n_fabricated_quotes == 0
            || self.n_other_quotes == 0
        {
            return Err(Error::Params("synthetic sizes must be positive".into()));
        }
        if self.timeline_len < 12 {
            return Err(Error::Params("timelines need at least 12 posts".into()));
        }
        if ![
            self.planted_tie_prob,
            self.balance_fraction,
            self.label_noise,
            self.circulator_retweet_rate,
            self.debunker_retweet_rate,
        ]
        .into_iter()
        .all(prob)
        {
            return Err(Error::Params("synthetic rates must be within [0, 1]".into()));
        }
        if self.background_ties_per_user > 0 && self.background_targets == 0 {
            return Err(Error::Params("background ties need background targets".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub corpus: ReferenceCorpus,
    /// Timelines keyed by user id.
    pub timelines: BTreeMap<String, Vec<Post>>,
    pub ties: Vec<TieRecord>,
    /// Behavior ground truth per user, including neither-users.
    pub truth: BTreeMap<String, BehaviorLabel>,
    pub planted: BTreeMap<BehaviorLabel, Vec<Feature>>,
    /// Users whose ties were drawn from the opposite class.
    pub noisy_users: BTreeSet<String>,
}

const LETTERS: &[char] = &[
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف', 'ق', 'ك', 'ل',
    'م', 'ن', 'ه', 'و', 'ي',
];
const HARAKAT: &[char] = &['\u{064E}', '\u{064F}', '\u{0650}', '\u{0651}', '\u{0652}'];

struct Vocab {
    words: Vec<String>,
}

impl Vocab {
    fn new(rng: &mut ChaCha8Rng, size: usize, taken: &mut BTreeSet<String>) -> Self {
        let mut words = Vec::with_capacity(size);
        while words.len() < size {
            let len = rng.gen_range(3..=6);
            let w: String = (0..len).map(|_| *LETTERS.choose(rng).expect("letters")).collect();
            if taken.insert(w.clone()) {
                words.push(w);
            }
        }
        Vocab { words }
    }

    fn sentence(&self, rng: &mut ChaCha8Rng, len: usize) -> Vec<String> {
        self.words.choose_multiple(rng, len).cloned().collect()
    }
}

fn decorate(rng: &mut ChaCha8Rng, word: &str) -> String {
    let mut out = String::new();
    for c in word.chars() {
        out.push(c);
        if rng.gen_bool(0.3) {
            out.push(*HARAKAT.choose(rng).expect("harakat"));
        }
    }
    out
}

struct QuoteText {
    id: String,
    tokens: Vec<String>,
}

/// Builds a deterministic synthetic world from `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticWorld> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Words that must never be produced by chance.
    let mut taken: BTreeSet<String> = DEFAULT_REFUTE_TERMS
        .iter()
        .chain(DEFAULT_PREFIXES)
        .flat_map(|p| normalize_arabic(p).tokens().map(str::to_owned).collect::<Vec<_>>())
        .collect();
    let quote_vocab = Vocab::new(&mut rng, 600, &mut taken);
    let filler_vocab = Vocab::new(&mut rng, 3000, &mut taken);

    let make_quotes = |prefix: &str, n: usize, rng: &mut ChaCha8Rng| -> Vec<QuoteText> {
        (0..n)
            .map(|i| QuoteText {
                id: format!("{prefix}{:04}", i + 1),
                tokens: {
                    let len = rng.gen_range(8..=16);
                    quote_vocab.sentence(rng, len)
                },
            })
            .collect()
    };
    let fabricated = make_quotes("fab", spec.n_fabricated_quotes, &mut rng);
    let others = make_quotes("ref", spec.n_other_quotes, &mut rng);

    let prefixes = PrefixLexicon::default();
    let other_levels = [
        AuthenticityLevel::Authentic,
        AuthenticityLevel::Good,
        AuthenticityLevel::Weak,
    ];
    let quotes = fabricated
        .iter()
        .map(|q| (q, AuthenticityLevel::Fabricated, "synthetic-fabricated"))
        .chain(
            others
                .iter()
                .enumerate()
                .map(|(i, q)| (q, other_levels[i % 3], "synthetic-graded")),
        )
        .map(|(q, level, source)| {
            ReferenceQuote::new(q.id.clone(), q.tokens.join(" "), level, source, &prefixes)
                .ok_or_else(|| Error::Validation("synthetic quote normalized to nothing".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (corpus, report) = ReferenceCorpus::from_quotes(quotes)?;
    if report.collapsed > 0 {
        return Err(Error::Validation("synthetic quotes collided".into()));
    }

    let mut users: Vec<(String, BehaviorLabel)> = Vec::new();
    for i in 0..spec.n_per_class {
        users.push((format!("c{:05}", i + 1), BehaviorLabel::Circulator));
    }
    for i in 0..spec.n_per_class {
        users.push((format!("d{:05}", i + 1), BehaviorLabel::Debunker));
    }
    for i in 0..spec.n_neither {
        users.push((format!("n{:05}", i + 1), BehaviorLabel::Neither));
    }
    let n_balance = (spec.n_per_class as f64 * spec.balance_fraction).round() as usize;

    let timeline_start = chrono::DateTime::parse_from_rfc3339("2023-03-01T00:00:00Z").expect("valid timestamp");
    let mut timelines = BTreeMap::new();
    let mut circulation_posts: Vec<String> = Vec::new();

    let quote_post = |rng: &mut ChaCha8Rng, q: &QuoteText, filler: &Vocab| -> String {
        let mut words: Vec<String> = if rng.gen_bool(0.5) {
            q.tokens.clone()
        } else {
            // contiguous fragment of at least 70% of the quote
            let keep = ((q.tokens.len() as f64 * 0.7).ceil() as usize).max(1);
            let keep = rng.gen_range(keep..=q.tokens.len());
            let start = rng.gen_range(0..=q.tokens.len() - keep);
            q.tokens[start..start + keep].to_vec()
        };
        words = words.iter().map(|w| decorate(rng, w)).collect();
        if rng.gen_bool(0.4) {
            words.insert(
                0,
                format!("{}:", DEFAULT_PREFIXES[rng.gen_range(0..DEFAULT_PREFIXES.len())]),
            );
        }
        if rng.gen_bool(0.3) {
            let len = rng.gen_range(1..=2);
            words.extend(filler.sentence(rng, len));
        }
        words.join(" ")
    };
    let refute_term = |rng: &mut ChaCha8Rng| DEFAULT_REFUTE_TERMS[rng.gen_range(0..DEFAULT_REFUTE_TERMS.len())];

    for (uid, label) in &users {
        // (text, parent post, quotes a fabricated hadith without refuting it)
        let mut texts: Vec<(String, Option<String>, bool)> = Vec::new();
        let debunker_index = uid[1..].parse::<usize>().unwrap_or(0);
        match label {
            BehaviorLabel::Circulator => {
                for _ in 0..rng.gen_range(2..=6) {
                    let q = &fabricated[rng.gen_range(0..fabricated.len())];
                    texts.push((quote_post(&mut rng, q, &filler_vocab), None, true));
                }
                for _ in 0..rng.gen_range(0..=6) {
                    let q = &others[rng.gen_range(0..others.len())];
                    texts.push((quote_post(&mut rng, q, &filler_vocab), None, false));
                }
            }
            BehaviorLabel::Debunker => {
                let refutes = if debunker_index <= n_balance {
                    2
                } else {
                    rng.gen_range(3..=5)
                };
                for _ in 0..refutes {
                    if !circulation_posts.is_empty() && rng.gen_bool(0.3) {
                        let parent = circulation_posts[rng.gen_range(0..circulation_posts.len())].clone();
                        let mut words = filler_vocab.sentence(&mut rng, 3);
                        words.push(refute_term(&mut rng).to_owned());
                        texts.push((words.join(" "), Some(parent), false));
                    } else {
                        let q = &fabricated[rng.gen_range(0..fabricated.len())];
                        let text = format!("{} {}", quote_post(&mut rng, q, &filler_vocab), refute_term(&mut rng));
                        texts.push((text, None, false));
                    }
                }
                for _ in 0..rng.gen_range(0..=4) {
                    let q = &others[rng.gen_range(0..others.len())];
                    texts.push((quote_post(&mut rng, q, &filler_vocab), None, false));
                }
            }
            BehaviorLabel::Neither => {
                if rng.gen_bool(0.5) {
                    let q = &fabricated[rng.gen_range(0..fabricated.len())];
                    texts.push((quote_post(&mut rng, q, &filler_vocab), None, false));
                } else {
                    let q = &fabricated[rng.gen_range(0..fabricated.len())];
                    let text = format!("{} {}", quote_post(&mut rng, q, &filler_vocab), refute_term(&mut rng));
                    texts.push((text, None, false));
                }
                for _ in 0..rng.gen_range(0..=3) {
                    let q = &others[rng.gen_range(0..others.len())];
                    texts.push((quote_post(&mut rng, q, &filler_vocab), None, false));
                }
            }
        }
        while texts.len() < spec.timeline_len {
            let len = rng.gen_range(4..=12);
            texts.push((filler_vocab.sentence(&mut rng, len).join(" "), None, false));
        }
        texts.shuffle(&mut rng);

        let retweet_rate = match label {
            BehaviorLabel::Circulator => spec.circulator_retweet_rate,
            BehaviorLabel::Debunker => spec.debunker_retweet_rate,
            BehaviorLabel::Neither => 0.5,
        };
        let posts: Vec<Post> = texts
            .into_iter()
            .enumerate()
            .map(|(i, (text, parent_id, circulation))| {
                let post = Post {
                    id: format!("{uid}-{:04}", i + 1),
                    user_id: uid.clone(),
                    text,
                    is_retweet: rng.gen_bool(retweet_rate),
                    created_at: (timeline_start + chrono::Duration::minutes(i as i64 * 37))
                        .format("%Y-%m-%dT%H:%M:%SZ")
                        .to_string(),
                    parent_id,
                };
                if circulation {
                    circulation_posts.push(post.id.clone());
                }
                post
            })
            .collect();
        timelines.insert(uid.clone(), posts);
    }

    // Network ties.
    let planted: BTreeMap<BehaviorLabel, Vec<Feature>> =
        [(BehaviorLabel::Circulator, "circ"), (BehaviorLabel::Debunker, "debk")]
            .into_iter()
            .map(|(label, tag)| {
                let feats = (0..spec.planted_per_class)
                    .map(|i| Feature {
                        target_id: format!("planted_{tag}_{:03}", i + 1),
                        kind: [TieKind::Follow, TieKind::RetweetAuthor, TieKind::LikeAuthor][i % 3],
                    })
                    .collect();
                (label, feats)
            })
            .collect();

    let kinds = [TieKind::Follow, TieKind::RetweetAuthor, TieKind::LikeAuthor];
    let mut ties = BTreeSet::new();
    let mut noisy_users = BTreeSet::new();
    for (uid, label) in &users {
        let mut tie_class = *label;
        if *label != BehaviorLabel::Neither && rng.gen_bool(spec.label_noise) {
            noisy_users.insert(uid.clone());
            tie_class = if *label == BehaviorLabel::Circulator {
                BehaviorLabel::Debunker
            } else {
                BehaviorLabel::Circulator
            };
        }
        if let Some(feats) = planted.get(&tie_class) {
            for f in feats {
                if rng.gen_bool(spec.planted_tie_prob) {
                    ties.insert(TieRecord::new(uid.clone(), f.target_id.clone(), f.kind));
                }
            }
        }
        for _ in 0..spec.background_ties_per_user {
            let target = format!("acct_{:05}", rng.gen_range(0..spec.background_targets) + 1);
            ties.insert(TieRecord::new(
                uid.clone(),
                target,
                *kinds.choose(&mut rng).expect("kinds"),
            ));
        }
    }

    Ok(SyntheticWorld {
        corpus,
        timelines,
        ties: ties.into_iter().collect(),
        truth: users.into_iter().collect(),
        planted,
        noisy_users,
    })
}

impl SyntheticWorld {
    /// Writes `corpus.tsv`, `timelines/<user>.jsonl`, `ties.csv`,
    /// `truth.csv` and `planted.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.corpus.write_tsv(&dir.join("corpus.tsv"))?;
        let tl_dir = dir.join("timelines");
        std::fs::create_dir_all(&tl_dir).map_err(|e| Error::io(&tl_dir, e))?;
        for (uid, posts) in &self.timelines {
            let mut buf = String::new();
            for p in posts {
                buf.push_str(&serde_json::to_string(p)?);
                buf.push('\n');
            }
            crate::write_bytes(&tl_dir.join(format!("{uid}.jsonl")), buf.as_bytes())?;
        }
        crate::write_bytes(&dir.join("ties.csv"), ties_to_csv(&self.ties)?.as_bytes())?;
        let mut truth = String::from("user_id,label\n");
        for (uid, label) in &self.truth {
            truth.push_str(&format!("{uid},{label}\n"));
        }
        crate::write_bytes(&dir.join("truth.csv"), truth.as_bytes())?;
        let mut planted = serde_json::to_string_pretty(&self.planted)?;
        planted.push('\n');
        crate::write_bytes(&dir.join("planted.json"), planted.as_bytes())
    }

    /// Labeled users (circulators and debunkers) sorted by id.
    pub fn labeled_users(&self) -> Vec<(String, BehaviorLabel)> {
        self.truth
            .iter()
            .filter(|(_, l)| **l != BehaviorLabel::Neither)
            .map(|(u, l)| (u.clone(), *l))
            .collect()
    }
}
