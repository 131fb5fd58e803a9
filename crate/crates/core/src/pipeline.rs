//! File-level pipeline stages: corpus → index → scan → label → features →
//! train → report. Each stage reads the previous stage's artifacts and
//! writes its own; the CLI is a thin wrapper around these functions.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::{
    build_labeled_dataset, cap_recent, interaction_summary, label_user, scan_timeline, BalanceReport, BehaviorLabel,
    InteractionCounts, InteractionSummary, LabelMode, LabelThresholds, LabeledUser, ParentTexts, Post, UserStats,
    DEFAULT_MAX_POSTS, SUMMARY_METRICS,
};
use crate::corpus::{
    filter_corpus, load_corpus, load_exclusion_list, merge_corpora, CorpusFormat, FilterReport, LoadReport,
    MergeReport, ReferenceCorpus,
};
use crate::error::{Error, Result};
use crate::features::{
    build_feature_space, csv_err, encode_users, load_ties, prune_features, FeatureManifest, FeatureSpace,
    FeatureVector, TieKind, TieRecord,
};
use crate::matcher::{build_index, LshIndex, MatchResult, Matcher, MinHashParams, RefuteLexicon, Verification};
use crate::model::{
    categorize_report, cross_validate, evaluate, top_coefficients, train_logit, CategoryMap, CoefficientReport,
    CvReport, Hyperparams, LogitModel, Metrics, TrainReport,
};
use crate::synth::{generate, SyntheticSpec};
use crate::textnorm::PrefixLexicon;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    crate::write_bytes(path, json.as_bytes())
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingInput(path.to_owned()))
    }
}

/// Loads a prefix lexicon file, or the default one.
pub fn prefix_lexicon(path: Option<&Path>) -> Result<PrefixLexicon> {
    match path {
        Some(p) => PrefixLexicon::from_file(p),
        None => Ok(PrefixLexicon::default()),
    }
}

/// Loads a refute lexicon file, or the default one.
pub fn refute_lexicon(path: Option<&Path>) -> Result<RefuteLexicon> {
    match path {
        Some(p) => RefuteLexicon::from_file(p),
        None => Ok(RefuteLexicon::default()),
    }
}

// ---------------------------------------------------------------------------
// corpus

#[derive(Debug, Clone, Serialize)]
pub struct CorpusBuildReport {
    pub inputs: Vec<(PathBuf, LoadReport)>,
    pub merges: Vec<MergeReport>,
    pub size: usize,
    pub fingerprint: String,
}

/// Loads each input and merges them left to right (earlier files win).
pub fn corpus_build(inputs: &[PathBuf], prefixes: &PrefixLexicon, out: &Path) -> Result<CorpusBuildReport> {
    if inputs.is_empty() {
        return Err(Error::Params("at least one corpus file is required".into()));
    }
    let mut loaded = Vec::new();
    let mut merged = ReferenceCorpus::default();
    let mut merges = Vec::new();
    for (i, path) in inputs.iter().enumerate() {
        let (c, report) = load_corpus(path, CorpusFormat::Tsv, prefixes)?;
        loaded.push((path.clone(), report));
        if i == 0 {
            merged = c;
        } else {
            let (m, r) = merge_corpora(&merged, &c);
            merged = m;
            merges.push(r);
        }
    }
    merged.write_tsv(out)?;
    Ok(CorpusBuildReport {
        inputs: loaded,
        merges,
        size: merged.len(),
        fingerprint: merged.fingerprint(),
    })
}

pub fn corpus_merge(a: &Path, b: &Path, prefixes: &PrefixLexicon, out: &Path) -> Result<MergeReport> {
    let (ca, _) = load_corpus(a, CorpusFormat::Tsv, prefixes)?;
    let (cb, _) = load_corpus(b, CorpusFormat::Tsv, prefixes)?;
    let (merged, report) = merge_corpora(&ca, &cb);
    merged.write_tsv(out)?;
    Ok(report)
}

pub fn corpus_filter(corpus: &Path, exclude: &Path, prefixes: &PrefixLexicon, out: &Path) -> Result<FilterReport> {
    let (c, _) = load_corpus(corpus, CorpusFormat::Tsv, prefixes)?;
    let ids = load_exclusion_list(exclude)?;
    let (filtered, report) = filter_corpus(&c, &ids);
    filtered.write_tsv(out)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// index

#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    pub quotes: usize,
    pub params: MinHashParams,
    pub shingle_n: usize,
    pub corpus_fingerprint: String,
}

pub fn index_build(
    corpus: &Path,
    prefixes: &PrefixLexicon,
    params: &MinHashParams,
    shingle_n: usize,
    out: &Path,
) -> Result<IndexReport> {
    let (c, _) = load_corpus(corpus, CorpusFormat::Tsv, prefixes)?;
    let ix = build_index(&c, params, shingle_n)?;
    ix.write(out)?;
    Ok(IndexReport {
        quotes: ix.len(),
        params: *ix.params(),
        shingle_n,
        corpus_fingerprint: ix.corpus_fingerprint().to_owned(),
    })
}

// ---------------------------------------------------------------------------
// scan

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    pub threshold: f64,
    pub max_posts: usize,
    pub verification: Verification,
    pub thresholds: LabelThresholds,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            threshold: crate::matcher::DEFAULT_THRESHOLD,
            max_posts: DEFAULT_MAX_POSTS,
            verification: Verification::Exact,
            thresholds: LabelThresholds::default(),
        }
    }
}

/// Reads every `*.jsonl` file in `dir` (sorted by name) and groups posts by
/// user, keeping file order within a user.
pub fn load_timelines(dir: &Path) -> Result<BTreeMap<String, Vec<Post>>> {
    require(dir)?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut out: BTreeMap<String, Vec<Post>> = BTreeMap::new();
    let mut ids = HashSet::new();
    for path in files {
        let text = crate::read_text(&path)?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let post: Post = serde_json::from_str(line).map_err(|e| Error::parse(&path, i + 1, e.to_string()))?;
            if !ids.insert(post.id.clone()) {
                return Err(Error::parse(&path, i + 1, format!("duplicate post id {:?}", post.id)));
            }
            out.entry(post.user_id.clone()).or_default().push(post);
        }
    }
    Ok(out)
}

pub const STATS_HEADER: &str = "user_id,total_hadith,fabricated,refutes,retweet_fraction,label";

/// Stats CSV; the label column uses strict mode.
pub fn stats_to_csv(stats: &[UserStats], t: &LabelThresholds) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(STATS_HEADER.split(',')).map_err(csv_err)?;
    for s in stats {
        let label = label_user(s, t, LabelMode::Strict)?;
        w.write_record([
            s.user_id.clone(),
            s.total_hadith.to_string(),
            s.fabricated.to_string(),
            s.refutes.to_string(),
            s.retweet_fraction.to_string(),
            label.to_string(),
        ])
        .map_err(csv_err)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Validation(e.to_string()))?).expect("utf-8"))
}

pub fn parse_stats_csv(text: &str, path: &Path) -> Result<Vec<UserStats>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != STATS_HEADER.split(',').collect::<Vec<_>>() {
        return Err(Error::parse(path, 1, format!("expected header {STATS_HEADER}")));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let num = |j: usize| -> Result<usize> {
            row[j]
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad count {:?}", &row[j])))
        };
        let stats = UserStats {
            user_id: row[0].to_owned(),
            total_hadith: num(1)?,
            fabricated: num(2)?,
            refutes: num(3)?,
            retweet_fraction: row[4]
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad fraction {:?}", &row[4])))?,
            ..Default::default()
        };
        stats.validate().map_err(|e| Error::parse(path, line, e.to_string()))?;
        out.push(stats);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub users: usize,
    pub posts: usize,
    pub matches: usize,
    pub corpus_fingerprint: String,
    pub threshold: f64,
    pub verification: Verification,
}

/// Scans every timeline in `timelines` against the indexed corpus and writes
/// `stats.csv`, `matches.jsonl` and `scan_report.json` to `out_dir`.
pub fn scan(
    corpus: &Path,
    index: &Path,
    timelines: &Path,
    prefixes: &PrefixLexicon,
    refutes: &RefuteLexicon,
    config: &ScanConfig,
    out_dir: &Path,
) -> Result<ScanReport> {
    let (c, _) = load_corpus(corpus, CorpusFormat::Tsv, prefixes)?;
    let ix = LshIndex::read(index, &c)?;
    let by_user = load_timelines(timelines)?;
    let parents: ParentTexts = by_user
        .values()
        .flatten()
        .map(|p| (p.id.clone(), p.text.clone()))
        .collect();
    let matcher = Matcher::new(&ix, &c, refutes, prefixes, config.threshold)?.with_verification(config.verification);

    let results: Vec<(UserStats, Vec<MatchResult>)> = by_user
        .into_par_iter()
        .map(|(uid, posts)| {
            let posts = cap_recent(posts, config.max_posts);
            scan_timeline(&uid, &posts, &matcher, Some(&parents))
        })
        .collect::<Result<_>>()?;

    let stats: Vec<UserStats> = results.iter().map(|(s, _)| s.clone()).collect();
    let mut matches_out = String::new();
    for m in results.iter().flat_map(|(_, m)| m) {
        matches_out.push_str(&serde_json::to_string(m)?);
        matches_out.push('\n');
    }
    crate::write_bytes(
        &out_dir.join("stats.csv"),
        stats_to_csv(&stats, &config.thresholds)?.as_bytes(),
    )?;
    crate::write_bytes(&out_dir.join("matches.jsonl"), matches_out.as_bytes())?;
    let report = ScanReport {
        users: stats.len(),
        posts: stats.iter().map(|s| s.posts).sum(),
        matches: results.iter().map(|(_, m)| m.len()).sum(),
        corpus_fingerprint: c.fingerprint(),
        threshold: config.threshold,
        verification: config.verification,
    };
    write_json(&out_dir.join("scan_report.json"), &report)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// labels

pub fn labels_to_csv(users: &[LabeledUser]) -> String {
    let mut out = String::from("user_id,label\n");
    for u in users {
        out.push_str(&format!("{},{}\n", crate::model::csv_field(&u.user_id), u.label));
    }
    out
}

pub fn parse_labels_csv(text: &str, path: &Path) -> Result<Vec<LabeledUser>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["user_id", "label"] {
        return Err(Error::parse(path, 1, "expected header user_id,label"));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        let label: BehaviorLabel = row[1]
            .parse()
            .map_err(|e: Error| Error::parse(path, i + 2, e.to_string()))?;
        if !seen.insert(row[0].to_owned()) {
            return Err(Error::parse(path, i + 2, format!("duplicate user {:?}", &row[0])));
        }
        out.push(LabeledUser {
            user_id: row[0].to_owned(),
            label,
        });
    }
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<Vec<LabeledUser>> {
    parse_labels_csv(&crate::read_text(path)?, path)
}

/// Builds the balanced labeled dataset from `stats.csv`.
pub fn label(stats: &Path, thresholds: &LabelThresholds, out: &Path) -> Result<BalanceReport> {
    let all = parse_stats_csv(&crate::read_text(stats)?, stats)?;
    let (users, report) = build_labeled_dataset(&all, thresholds)?;
    crate::write_bytes(out, labels_to_csv(&users).as_bytes())?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// features

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodedUser {
    pub user_id: String,
    pub label: BehaviorLabel,
    pub active: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeaturesReport {
    pub users: usize,
    pub columns: usize,
    pub columns_before_pruning: usize,
    pub dropped_ties: usize,
    pub manifest_hash: String,
}

/// Builds the feature space over the ties of labeled users, encodes them,
/// and writes `manifest.json` and `vectors.jsonl` to `out_dir`.
pub fn features(ties: &Path, labels: &Path, min_support: usize, out_dir: &Path) -> Result<FeaturesReport> {
    let labeled = load_labels(labels)?;
    let users: Vec<String> = labeled.iter().map(|u| u.user_id.clone()).collect();
    let user_set: HashSet<&str> = users.iter().map(String::as_str).collect();
    let all_ties = load_ties(ties)?;
    let relevant: Vec<TieRecord> = all_ties
        .into_iter()
        .filter(|t| user_set.contains(t.user_id.as_str()))
        .collect();
    let space = build_feature_space(&relevant);
    let (vectors, dropped) = encode_users(&users, &relevant, &space);
    let before = space.n_columns();
    let (space, vectors) = if min_support > 0 {
        prune_features(&space, &vectors, min_support)
    } else {
        (space, vectors)
    };
    space.to_manifest().write(&out_dir.join("manifest.json"))?;
    let mut buf = String::new();
    for (v, u) in vectors.iter().zip(&labeled) {
        buf.push_str(&serde_json::to_string(&EncodedUser {
            user_id: v.user_id.clone(),
            label: u.label,
            active: v.active.clone(),
        })?);
        buf.push('\n');
    }
    crate::write_bytes(&out_dir.join("vectors.jsonl"), buf.as_bytes())?;
    Ok(FeaturesReport {
        users: vectors.len(),
        columns: space.n_columns(),
        columns_before_pruning: before,
        dropped_ties: dropped,
        manifest_hash: space.manifest_hash(),
    })
}

pub fn load_vectors(path: &Path, space: &FeatureSpace) -> Result<(Vec<FeatureVector>, Vec<BehaviorLabel>)> {
    let text = crate::read_text(path)?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let u: EncodedUser = serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if u.active.iter().any(|&c| c >= space.n_columns()) {
            return Err(Error::VersionMismatch(format!(
                "{}:{}: vector does not fit the feature manifest",
                path.display(),
                i + 1
            )));
        }
        x.push(FeatureVector::new(u.user_id, u.active));
        y.push(u.label);
    }
    Ok((x, y))
}

// ---------------------------------------------------------------------------
// train

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub users: usize,
    pub columns: usize,
    pub cv: CvReport,
    pub fit: TrainReport,
    pub training_metrics: Metrics,
}

/// Cross-validates, then fits on all data. Writes `model.json`,
/// `cv_metrics.csv` and `train_report.json` to `out_dir`.
pub fn train(features_dir: &Path, hp: &Hyperparams, cv_repeats: usize, out_dir: &Path) -> Result<TrainSummary> {
    let manifest = FeatureManifest::read(&features_dir.join("manifest.json"))?;
    let space = FeatureSpace::from_manifest(&manifest)?;
    let (x, y) = load_vectors(&features_dir.join("vectors.jsonl"), &space)?;
    let cv = cross_validate(&x, &y, space.n_columns(), hp, 0.1, cv_repeats)?;
    let (model, fit) = train_logit(&x, &y, space.n_columns(), &space.manifest_hash(), hp)?;
    let training_metrics = evaluate(&model, &x, &y)?;
    model.write(&out_dir.join("model.json"))?;

    let mut csv = format!("split,{}\n", Metrics::CSV_HEADER);
    for (i, m) in cv.folds.iter().enumerate() {
        csv.push_str(&format!("fold{},{}\n", i + 1, m.csv_row()));
    }
    csv.push_str(&format!("cv_mean,{}\n", cv.mean.csv_row()));
    csv.push_str(&format!("training,{}\n", training_metrics.csv_row()));
    crate::write_bytes(&out_dir.join("cv_metrics.csv"), csv.as_bytes())?;

    let summary = TrainSummary {
        users: x.len(),
        columns: space.n_columns(),
        cv,
        fit,
        training_metrics,
    };
    write_json(&out_dir.join("train_report.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// report

/// Per-user interaction counts from ties and retweet fractions from stats.
pub fn interaction_counts(ties: &[TieRecord], stats: &[UserStats], users: &[String]) -> Vec<InteractionCounts> {
    let fractions: HashMap<&str, f64> = stats.iter().map(|s| (s.user_id.as_str(), s.retweet_fraction)).collect();
    let mut counts: BTreeMap<&str, InteractionCounts> = users
        .iter()
        .map(|u| {
            (
                u.as_str(),
                InteractionCounts {
                    user_id: u.clone(),
                    retweet_fraction: fractions.get(u.as_str()).copied().unwrap_or(0.0),
                    ..Default::default()
                },
            )
        })
        .collect();
    for t in ties.iter().filter(|t| !t.is_self_tie()) {
        if let Some(c) = counts.get_mut(t.user_id.as_str()) {
            match t.kind {
                TieKind::Follow => c.follows += 1,
                TieKind::RetweetAuthor => c.retweets += 1,
                TieKind::LikeAuthor => c.likes += 1,
            }
        }
    }
    counts.into_values().collect()
}

fn summary_csv(summary: &InteractionSummary) -> String {
    let mut out = String::from("label,metric,users,mean,min,q1,median,q3,max\n");
    for c in &summary.classes {
        for (name, d) in [
            ("follows", &c.follows),
            ("retweets", &c.retweets),
            ("likes", &c.likes),
            ("retweet_fraction", &c.retweet_fraction),
        ] {
            out.push_str(&format!(
                "{},{name},{},{},{},{},{},{},{}\n",
                c.label, c.users, d.mean, d.min, d.q1, d.median, d.q3, d.max
            ));
        }
    }
    out
}

fn welch_csv(summary: &InteractionSummary) -> String {
    let mut out = String::from("metric,t_statistic,degrees_of_freedom,p_value\n");
    for m in SUMMARY_METRICS {
        match summary.welch.get(m).copied().flatten() {
            Some(w) => out.push_str(&format!(
                "{m},{},{},{}\n",
                w.t_statistic, w.degrees_of_freedom, w.p_value
            )),
            None => out.push_str(&format!("{m},,,\n")),
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ReportInputs<'a> {
    pub model: &'a Path,
    pub manifest: &'a Path,
    pub category_map: Option<&'a Path>,
    pub ties: &'a Path,
    pub labels: &'a Path,
    pub stats: &'a Path,
    pub top_k: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub top_positive: usize,
    pub top_negative: usize,
    pub categories: crate::model::CategoryCounts,
}

/// Writes `coefficients.csv`, `categories.csv`, `class_summary.csv` and
/// `welch.csv` to `out_dir`.
pub fn report(inputs: &ReportInputs<'_>, out_dir: &Path) -> Result<ReportSummary> {
    let model = LogitModel::read(inputs.model)?;
    let space = FeatureSpace::from_manifest(&FeatureManifest::read(inputs.manifest)?)?;
    let coefficients: CoefficientReport = top_coefficients(&model, &space, inputs.top_k)?;
    let categories = match inputs.category_map {
        Some(p) => CategoryMap::load(p)?,
        None => CategoryMap::default(),
    };
    let counts = categorize_report(&coefficients, &categories);

    let labels = load_labels(inputs.labels)?;
    let stats = parse_stats_csv(&crate::read_text(inputs.stats)?, inputs.stats)?;
    let ties = load_ties(inputs.ties)?;
    let users: Vec<String> = labels.iter().map(|u| u.user_id.clone()).collect();
    let label_map: HashMap<String, BehaviorLabel> = labels.iter().map(|u| (u.user_id.clone(), u.label)).collect();
    let summary = interaction_summary(&interaction_counts(&ties, &stats, &users), &label_map)?;

    crate::write_bytes(&out_dir.join("coefficients.csv"), coefficients.to_csv()?.as_bytes())?;
    crate::write_bytes(&out_dir.join("categories.csv"), counts.to_csv().as_bytes())?;
    crate::write_bytes(&out_dir.join("class_summary.csv"), summary_csv(&summary).as_bytes())?;
    crate::write_bytes(&out_dir.join("welch.csv"), welch_csv(&summary).as_bytes())?;
    Ok(ReportSummary {
        top_positive: coefficients.top_positive.len(),
        top_negative: coefficients.top_negative.len(),
        categories: counts,
    })
}

// ---------------------------------------------------------------------------
// synthetic data and end-to-end run

pub fn synth(spec: &SyntheticSpec, out_dir: &Path) -> Result<()> {
    let world = generate(spec)?;
    world.write(out_dir)?;
    write_json(&out_dir.join("synth_spec.json"), spec)
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub corpus_files: Vec<PathBuf>,
    pub exclusion_list: Option<PathBuf>,
    pub prefix_lexicon: Option<PathBuf>,
    pub refute_lexicon: Option<PathBuf>,
    pub timelines_dir: PathBuf,
    pub ties_file: PathBuf,
    pub category_map: Option<PathBuf>,
    pub minhash: MinHashParams,
    pub shingle_n: usize,
    pub scan: ScanConfig,
    pub hyperparams: Hyperparams,
    pub cv_repeats: usize,
    pub min_support: usize,
    pub top_k: usize,
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    /// Configuration for a directory written by [`synth`].
    pub fn for_synthetic(input_dir: &Path, output_dir: &Path) -> Self {
        PipelineConfig {
            corpus_files: vec![input_dir.join("corpus.tsv")],
            exclusion_list: None,
            prefix_lexicon: None,
            refute_lexicon: None,
            timelines_dir: input_dir.join("timelines"),
            ties_file: input_dir.join("ties.csv"),
            category_map: None,
            minhash: MinHashParams::default(),
            shingle_n: 1,
            scan: ScanConfig::default(),
            hyperparams: Hyperparams::default(),
            cv_repeats: 10,
            min_support: 0,
            top_k: 100,
            output_dir: output_dir.to_owned(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scan.threshold > 0.0 && self.scan.threshold < 1.0) {
            return Err(Error::Params(format!(
                "threshold must be in (0, 1), got {}",
                self.scan.threshold
            )));
        }
        self.minhash.validate()?;
        self.scan.thresholds.validate()?;
        let mut paths: Vec<&Path> = self.corpus_files.iter().map(PathBuf::as_path).collect();
        paths.extend([self.timelines_dir.as_path(), self.ties_file.as_path()]);
        paths.extend(
            [
                &self.exclusion_list,
                &self.prefix_lexicon,
                &self.refute_lexicon,
                &self.category_map,
            ]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path),
        );
        paths.into_iter().try_for_each(require)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub corpus: CorpusBuildReport,
    pub filter: Option<FilterReport>,
    pub index: IndexReport,
    pub scan: ScanReport,
    pub labels: BalanceReport,
    pub features: FeaturesReport,
    pub cv_mean: Metrics,
    pub report: ReportSummary,
}

/// Runs every stage, writing artifacts under `config.output_dir`.
pub fn run_all(config: &PipelineConfig) -> Result<PipelineSummary> {
    config.validate()?;
    let out = &config.output_dir;
    let prefixes = prefix_lexicon(config.prefix_lexicon.as_deref())?;
    let refutes = refute_lexicon(config.refute_lexicon.as_deref())?;

    let corpus_path = out.join("corpus.tsv");
    let corpus = corpus_build(&config.corpus_files, &prefixes, &corpus_path)?;
    let filter = match &config.exclusion_list {
        Some(ex) => Some(corpus_filter(&corpus_path, ex, &prefixes, &corpus_path)?),
        None => None,
    };
    let index_path = out.join("index.bin");
    let index = index_build(&corpus_path, &prefixes, &config.minhash, config.shingle_n, &index_path)?;
    let scan_dir = out.join("scan");
    let scan = scan(
        &corpus_path,
        &index_path,
        &config.timelines_dir,
        &prefixes,
        &refutes,
        &config.scan,
        &scan_dir,
    )?;
    let labels_path = out.join("labels.csv");
    let labels = label(&scan_dir.join("stats.csv"), &config.scan.thresholds, &labels_path)?;
    let features_dir = out.join("features");
    let features = features(&config.ties_file, &labels_path, config.min_support, &features_dir)?;
    let model_dir = out.join("model");
    let trained = train(&features_dir, &config.hyperparams, config.cv_repeats, &model_dir)?;
    let report = report(
        &ReportInputs {
            model: &model_dir.join("model.json"),
            manifest: &features_dir.join("manifest.json"),
            category_map: config.category_map.as_deref(),
            ties: &config.ties_file,
            labels: &labels_path,
            stats: &scan_dir.join("stats.csv"),
            top_k: config.top_k,
        },
        &out.join("report"),
    )?;
    let summary = PipelineSummary {
        corpus,
        filter,
        index,
        scan,
        labels,
        features,
        cv_mean: trained.cv.mean,
        report,
    };
    write_json(&out.join("pipeline_summary.json"), &summary)?;
    Ok(summary)
}
