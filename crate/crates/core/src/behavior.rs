//! Timeline scanning, per-user statistics and circulator/debunker labels.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{MatchKind, MatchResult, Matcher};
use crate::stats::{welch_t_test, Distribution, WelchResult};

/// Timelines longer than this keep only their most recent posts.
pub const DEFAULT_MAX_POSTS: usize = 3200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub user_id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub is_retweet: bool,
    pub created_at: String,
    /// Post this one replies to, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
}

/// Text of posts that replies may point at, keyed by post id.
pub type ParentTexts = HashMap<String, String>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserStats {
    pub user_id: String,
    pub posts: usize,
    pub retweets: usize,
    /// Matched posts of kind circulation or non-fabricated share.
    pub total_hadith: usize,
    pub fabricated: usize,
    pub non_fabricated: usize,
    pub refutes: usize,
    pub unmatched: usize,
    pub retweet_fraction: f64,
}

impl UserStats {
    pub fn empty(user_id: impl Into<String>) -> Self {
        UserStats {
            user_id: user_id.into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fabricated > self.total_hadith {
            return Err(Error::Contract(format!(
                "user {}: fabricated ({}) exceeds total hadith ({})",
                self.user_id, self.fabricated, self.total_hadith
            )));
        }
        if !(0.0..=1.0).contains(&self.retweet_fraction) {
            return Err(Error::Contract(format!(
                "user {}: retweet fraction {} outside [0, 1]",
                self.user_id, self.retweet_fraction
            )));
        }
        Ok(())
    }
}

fn timestamp_key(created_at: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(created_at)
        .ok()
        .map(|t| t.timestamp_nanos_opt().unwrap_or(i64::MAX))
}

/// Keeps the `max` most recent posts (by `created_at`, then id), preserving
/// input order. Unparseable timestamps sort as oldest.
pub fn cap_recent(posts: Vec<Post>, max: usize) -> Vec<Post> {
    if posts.len() <= max {
        return posts;
    }
    let mut order: Vec<usize> = (0..posts.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&posts[a], &posts[b]);
        timestamp_key(&pb.created_at)
            .cmp(&timestamp_key(&pa.created_at))
            .then_with(|| pb.created_at.cmp(&pa.created_at))
            .then_with(|| pa.id.cmp(&pb.id))
    });
    let keep: HashSet<usize> = order.into_iter().take(max).collect();
    posts
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, p)| p)
        .collect()
}

/// Runs every post of one user's timeline through the matcher.
///
/// A post with a refute term but no match of its own still counts as a
/// refute when its `parent_id` resolves (through `parents`) to a post that
/// matches a fabricated quote.
pub fn scan_timeline(
    user_id: &str,
    posts: &[Post],
    matcher: &Matcher<'_>,
    parents: Option<&ParentTexts>,
) -> Result<(UserStats, Vec<MatchResult>)> {
    if let Some(p) = posts.iter().find(|p| p.user_id != user_id) {
        return Err(Error::Contract(format!(
            "timeline of {user_id} contains post {} by {}",
            p.id, p.user_id
        )));
    }
    let mut stats = UserStats::empty(user_id);
    let mut matches = Vec::new();

    for post in posts {
        stats.posts += 1;
        stats.retweets += usize::from(post.is_retweet);
        if post.text.trim().is_empty() {
            stats.unmatched += 1;
            continue;
        }
        let prepared = matcher.prepare(&post.text);
        let found = matcher.match_prepared(&post.id, &prepared).or_else(|| {
            if !prepared.refute_term {
                return None;
            }
            let parent = parents?.get(post.parent_id.as_deref()?)?;
            let m = matcher.match_post(&post.id, parent)?;
            m.authenticity.is_fabricated().then_some(MatchResult {
                kind: MatchKind::Refute,
                ..m
            })
        });
        match found {
            None => stats.unmatched += 1,
            Some(m) => {
                match m.kind {
                    MatchKind::Circulation => {
                        stats.fabricated += 1;
                        stats.total_hadith += 1;
                    }
                    MatchKind::NonFabricatedShare => {
                        stats.non_fabricated += 1;
                        stats.total_hadith += 1;
                    }
                    MatchKind::Refute => stats.refutes += 1,
                }
                matches.push(m);
            }
        }
    }
    stats.retweet_fraction = if stats.posts == 0 {
        0.0
    } else {
        stats.retweets as f64 / stats.posts as f64
    };
    Ok((stats, matches))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorLabel {
    Circulator,
    Debunker,
    Neither,
}

impl BehaviorLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorLabel::Circulator => "circulator",
            BehaviorLabel::Debunker => "debunker",
            BehaviorLabel::Neither => "neither",
        }
    }
}

impl fmt::Display for BehaviorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BehaviorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circulator" => Ok(BehaviorLabel::Circulator),
            "debunker" => Ok(BehaviorLabel::Debunker),
            "neither" => Ok(BehaviorLabel::Neither),
            other => Err(Error::Validation(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelThresholds {
    /// Circulators shared at least this many fabricated quotes...
    pub min_fabricated: usize,
    /// ...and fabricated / total hadith strictly above this fraction.
    pub min_fabricated_fraction: f64,
    /// Debunkers never circulated and refuted at least this many times.
    pub min_refutes_strict: usize,
    /// Lower refute count used to top up debunkers when balancing.
    pub min_refutes_balance: usize,
}

impl Default for LabelThresholds {
    fn default() -> Self {
        LabelThresholds {
            min_fabricated: 2,
            min_fabricated_fraction: 0.05,
            min_refutes_strict: 3,
            min_refutes_balance: 2,
        }
    }
}

impl LabelThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.min_fabricated == 0 || self.min_refutes_strict == 0 || self.min_refutes_balance == 0 {
            return Err(Error::Params("label thresholds must be positive".into()));
        }
        if !(self.min_fabricated_fraction > 0.0 && self.min_fabricated_fraction < 1.0) {
            return Err(Error::Params("fabricated fraction must be in (0, 1)".into()));
        }
        if self.min_refutes_balance > self.min_refutes_strict {
            return Err(Error::Params(
                "balance refute threshold exceeds strict threshold".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    #[default]
    Strict,
    Balance,
}

pub fn label_user(s: &UserStats, t: &LabelThresholds, mode: LabelMode) -> Result<BehaviorLabel> {
    s.validate()?;
    if s.fabricated >= t.min_fabricated && s.fabricated as f64 / s.total_hadith as f64 > t.min_fabricated_fraction {
        return Ok(BehaviorLabel::Circulator);
    }
    let min_refutes = match mode {
        LabelMode::Strict => t.min_refutes_strict,
        LabelMode::Balance => t.min_refutes_balance,
    };
    if s.fabricated == 0 && s.refutes >= min_refutes {
        return Ok(BehaviorLabel::Debunker);
    }
    Ok(BehaviorLabel::Neither)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledUser {
    pub user_id: String,
    pub label: BehaviorLabel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BalanceReport {
    pub circulators: usize,
    pub strict_debunkers: usize,
    pub balance_debunkers: usize,
    pub debunkers: usize,
    pub warnings: Vec<String>,
}

/// All circulators and strict debunkers, topped up with balance-mode
/// debunkers (most refutes first, then user id) while debunkers are fewer
/// than circulators. Output is sorted by user id.
pub fn build_labeled_dataset(
    all_stats: &[UserStats],
    t: &LabelThresholds,
) -> Result<(Vec<LabeledUser>, BalanceReport)> {
    t.validate()?;
    let mut seen = HashSet::new();
    let mut circulators = Vec::new();
    let mut debunkers = Vec::new();
    let mut pool = Vec::new();
    for s in all_stats {
        if !seen.insert(s.user_id.as_str()) {
            return Err(Error::Contract(format!("duplicate stats for user {}", s.user_id)));
        }
        match label_user(s, t, LabelMode::Strict)? {
            BehaviorLabel::Circulator => circulators.push(s),
            BehaviorLabel::Debunker => debunkers.push(s),
            BehaviorLabel::Neither => {
                if label_user(s, t, LabelMode::Balance)? == BehaviorLabel::Debunker {
                    pool.push(s);
                }
            }
        }
    }

    let mut report = BalanceReport {
        circulators: circulators.len(),
        strict_debunkers: debunkers.len(),
        ..Default::default()
    };
    if debunkers.len() < circulators.len() {
        pool.sort_by(|a, b| b.refutes.cmp(&a.refutes).then_with(|| a.user_id.cmp(&b.user_id)));
        let need = circulators.len() - debunkers.len();
        report.balance_debunkers = need.min(pool.len());
        debunkers.extend(pool.into_iter().take(need));
    }
    report.debunkers = debunkers.len();

    if circulators.is_empty() && debunkers.is_empty() {
        report.warnings.push("no circulators or debunkers found".into());
    } else if report.debunkers < report.circulators {
        report.warnings.push(format!(
            "balance pool exhausted: {} circulators vs {} debunkers",
            report.circulators, report.debunkers
        ));
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }

    let mut users: Vec<LabeledUser> = circulators
        .into_iter()
        .map(|s| (s, BehaviorLabel::Circulator))
        .chain(debunkers.into_iter().map(|s| (s, BehaviorLabel::Debunker)))
        .map(|(s, label)| LabeledUser {
            user_id: s.user_id.clone(),
            label,
        })
        .collect();
    users.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    Ok((users, report))
}

/// Interaction volume of one user.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionCounts {
    pub user_id: String,
    pub follows: usize,
    pub retweets: usize,
    pub likes: usize,
    pub retweet_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSummary {
    pub label: BehaviorLabel,
    pub users: usize,
    pub follows: Distribution,
    pub retweets: Distribution,
    pub likes: Distribution,
    pub retweet_fraction: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionSummary {
    pub classes: Vec<ClassSummary>,
    /// Circulators vs debunkers per metric; `None` when a sample is
    /// degenerate.
    pub welch: BTreeMap<String, Option<WelchResult>>,
}

pub const SUMMARY_METRICS: [&str; 4] = ["follows", "retweets", "likes", "retweet_fraction"];

fn metric(c: &InteractionCounts, name: &str) -> f64 {
    match name {
        "follows" => c.follows as f64,
        "retweets" => c.retweets as f64,
        "likes" => c.likes as f64,
        _ => c.retweet_fraction,
    }
}

/// Per-class distributions of interaction counts and retweet fraction, plus
/// Welch comparisons between circulators and debunkers.
pub fn interaction_summary(
    counts: &[InteractionCounts],
    labels: &HashMap<String, BehaviorLabel>,
) -> Result<InteractionSummary> {
    let mut by_class: BTreeMap<BehaviorLabel, Vec<&InteractionCounts>> = BTreeMap::new();
    for c in counts {
        let label = labels
            .get(&c.user_id)
            .ok_or_else(|| Error::Contract(format!("user {} has no label", c.user_id)))?;
        by_class.entry(*label).or_default().push(c);
    }
    let column =
        |users: &[&InteractionCounts], name: &str| -> Vec<f64> { users.iter().map(|c| metric(c, name)).collect() };
    let classes = by_class
        .iter()
        .map(|(label, users)| ClassSummary {
            label: *label,
            users: users.len(),
            follows: Distribution::of(&column(users, "follows")),
            retweets: Distribution::of(&column(users, "retweets")),
            likes: Distribution::of(&column(users, "likes")),
            retweet_fraction: Distribution::of(&column(users, "retweet_fraction")),
        })
        .collect();

    let empty = Vec::new();
    let circ = by_class.get(&BehaviorLabel::Circulator).unwrap_or(&empty);
    let deb = by_class.get(&BehaviorLabel::Debunker).unwrap_or(&empty);
    let welch = SUMMARY_METRICS
        .iter()
        .map(|m| (m.to_string(), welch_t_test(&column(circ, m), &column(deb, m)).ok()))
        .collect();
    Ok(InteractionSummary { classes, welch })
}
