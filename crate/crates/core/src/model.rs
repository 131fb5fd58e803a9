//! L2-regularized logistic regression over sparse binary features,
//! evaluation metrics, coefficient reports and category breakdowns.
//!
//! Circulators are the positive class (+1) and debunkers the negative class
//! (-1). The objective is
//!
//! ```text
//! f(w, b) = sum_i log(1 + exp(-y_i (w . x_i + b))) + (l2 / 2) |w|^2
//! ```
//!
//! with the bias unregularized. It is minimized from zero with nonlinear
//! conjugate gradients (Polak-Ribiere+) and an Armijo backtracking line
//! search, so every accepted step strictly decreases the loss and the result
//! depends only on the data and its order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorLabel;
use crate::error::{Error, Result};
use crate::features::{Feature, FeatureSpace, FeatureVector};

pub use crate::stats::{welch_t_test, WelchResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub l2_strength: f64,
    pub max_iters: usize,
    /// Stop once the gradient's Euclidean norm is at or below this fraction
    /// of its value at the starting point (or of 1, if that is smaller).
    pub tolerance: f64,
    /// Seeds cross-validation shuffles. Training itself starts at zero.
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            l2_strength: 1.0,
            max_iters: 2000,
            tolerance: 1e-6,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub version: u32,
    pub feature_hash: String,
    pub hyperparams: Hyperparams,
    pub bias: f64,
    pub weights: Vec<f64>,
}

impl LogitModel {
    pub const VERSION: u32 = 1;

    pub fn n_columns(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &FeatureVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.decision(x))
    }

    /// Circulator iff the predicted probability is at least 0.5.
    pub fn predict(&self, x: &FeatureVector) -> BehaviorLabel {
        if self.predict_proba(x) >= 0.5 {
            BehaviorLabel::Circulator
        } else {
            BehaviorLabel::Debunker
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        crate::write_bytes(path, json.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let m: LogitModel = serde_json::from_str(&crate::read_text(path)?)?;
        if m.version != Self::VERSION {
            return Err(Error::VersionMismatch(format!(
                "model version {}, expected {}",
                m.version,
                Self::VERSION
            )));
        }
        if m.weights.iter().any(|w| !w.is_finite()) || !m.bias.is_finite() {
            return Err(Error::Validation("model has non-finite parameters".into()));
        }
        Ok(m)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn label_sign(label: BehaviorLabel) -> Result<f64> {
    match label {
        BehaviorLabel::Circulator => Ok(1.0),
        BehaviorLabel::Debunker => Ok(-1.0),
        BehaviorLabel::Neither => Err(Error::Contract("training labels must be circulator or debunker".into())),
    }
}

/// Regularized logistic loss over a fixed data set.
#[derive(Debug, Clone)]
pub struct LogisticObjective<'a> {
    x: Vec<&'a FeatureVector>,
    y: Vec<f64>,
    n_columns: usize,
    l2: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(x: &'a [FeatureVector], y: &[BehaviorLabel], n_columns: usize, l2: f64) -> Result<Self> {
        Self::from_refs(x.iter().collect(), y, n_columns, l2)
    }

    fn from_refs(x: Vec<&'a FeatureVector>, y: &[BehaviorLabel], n_columns: usize, l2: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Contract(format!(
                "{} feature vectors but {} labels",
                x.len(),
                y.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| v.active.iter().any(|&c| c >= n_columns)) {
            return Err(Error::Contract(format!(
                "vector for {} has a column outside the {n_columns}-column space",
                v.user_id
            )));
        }
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::Params(format!(
                "l2 strength must be finite and non-negative, got {l2}"
            )));
        }
        let y = y.iter().map(|&l| label_sign(l)).collect::<Result<Vec<_>>>()?;
        Ok(LogisticObjective { x, y, n_columns, l2 })
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    pub fn loss(&self, w: &[f64], b: f64) -> f64 {
        let data: f64 = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(x, &y)| softplus(-y * (x.dot(w) + b)))
            .sum();
        data + 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>()
    }

    /// Loss, weight gradient and bias gradient.
    pub fn loss_and_gradient(&self, w: &[f64], b: f64) -> (f64, Vec<f64>, f64) {
        let mut gw: Vec<f64> = w.iter().map(|v| self.l2 * v).collect();
        let mut gb = 0.0;
        let mut loss = 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>();
        for (x, &y) in self.x.iter().zip(&self.y) {
            let margin = y * (x.dot(w) + b);
            loss += softplus(-margin);
            // d/dz softplus(-y z) = -y * sigmoid(-y z)
            let coef = -y * sigmoid(-margin);
            gb += coef;
            for &c in &x.active {
                gw[c] += coef;
            }
        }
        (loss, gw, gb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Loss before the first step and after every accepted step.
    pub loss_history: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn minimize(obj: &LogisticObjective<'_>, hp: &Hyperparams) -> (Vec<f64>, TrainReport) {
    const ARMIJO: f64 = 1e-4;
    const MIN_STEP: f64 = 1e-18;

    let n = obj.n_columns();
    // theta = [w..., b]
    let mut theta = vec![0.0; n + 1];
    let eval = |theta: &[f64]| {
        let (loss, mut g, gb) = obj.loss_and_gradient(&theta[..n], theta[n]);
        g.push(gb);
        (loss, g)
    };
    let (mut loss, mut grad) = eval(&theta);
    let mut history = vec![loss];
    let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut step = 1.0 / (1.0 + norm(&grad));
    let mut iterations = 0;
    let tolerance = hp.tolerance * norm(&grad).max(1.0);

    while iterations < hp.max_iters && norm(&grad) > tolerance {
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            // not a descent direction: restart from steepest descent
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &dir);
        }
        let mut alpha = step;
        let accepted = loop {
            let trial: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + alpha * d).collect();
            let trial_loss = obj.loss(&trial[..n], trial[n]);
            if trial_loss <= loss + ARMIJO * alpha * slope && trial_loss < loss {
                break Some((trial, trial_loss));
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                break None;
            }
        };
        let Some((next, _)) = accepted else {
            break;
        };
        iterations += 1;
        theta = next;
        let (next_loss, next_grad) = eval(&theta);
        loss = next_loss;
        history.push(loss);

        let diff: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let beta = (dot(&next_grad, &diff) / dot(&grad, &grad)).max(0.0);
        dir = next_grad.iter().zip(&dir).map(|(g, d)| -g + beta * d).collect();
        grad = next_grad;
        step = (alpha * 2.0).min(1.0);
    }

    let gradient_norm = norm(&grad);
    let converged = gradient_norm <= tolerance;
    if !converged {
        log::warn!("logistic regression stopped after {iterations} iterations with gradient norm {gradient_norm:.3e}");
    }
    (
        theta,
        TrainReport {
            iterations,
            converged,
            gradient_norm,
            loss_history: history,
        },
    )
}

fn check_classes(y: &[BehaviorLabel]) -> Result<()> {
    let pos = y.iter().filter(|&&l| l == BehaviorLabel::Circulator).count();
    let neg = y.iter().filter(|&&l| l == BehaviorLabel::Debunker).count();
    if pos + neg != y.len() {
        return Err(Error::Contract("training labels must be circulator or debunker".into()));
    }
    if y.len() < 2 || pos == 0 || neg == 0 {
        return Err(Error::Contract(format!(
            "training needs both classes, got {pos} circulators and {neg} debunkers"
        )));
    }
    Ok(())
}

/// Fits the model to `x`/`y` over an `n_columns`-column space.
pub fn train_logit(
    x: &[FeatureVector],
    y: &[BehaviorLabel],
    n_columns: usize,
    feature_hash: &str,
    hp: &Hyperparams,
) -> Result<(LogitModel, TrainReport)> {
    check_classes(y)?;
    let obj = LogisticObjective::new(x, y, n_columns, hp.l2_strength)?;
    Ok(fit(&obj, feature_hash, hp))
}

fn fit(obj: &LogisticObjective<'_>, feature_hash: &str, hp: &Hyperparams) -> (LogitModel, TrainReport) {
    let (mut theta, report) = minimize(obj, hp);
    let bias = theta.pop().unwrap_or(0.0);
    let model = LogitModel {
        version: LogitModel::VERSION,
        feature_hash: feature_hash.to_owned(),
        hyperparams: *hp,
        bias,
        weights: theta,
    };
    (model, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    /// Circulators predicted as circulators.
    pub tp: usize,
    /// Debunkers predicted as circulators.
    pub fp: usize,
    /// Circulators predicted as debunkers.
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn add(&mut self, o: &Confusion) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    fn from_counts(hit: usize, predicted: usize, actual: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(hit, predicted);
        let recall = ratio(hit, actual);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub circulator: ClassMetrics,
    pub debunker: ClassMetrics,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// For cross-validation means, summed over repeats.
    pub confusion: Confusion,
}

impl Metrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let circulator = ClassMetrics::from_counts(c.tp, c.tp + c.fp, c.tp + c.fn_);
        let debunker = ClassMetrics::from_counts(c.tn, c.tn + c.fn_, c.tn + c.fp);
        let accuracy = if c.total() == 0 {
            0.0
        } else {
            (c.tp + c.tn) as f64 / c.total() as f64
        };
        Metrics {
            accuracy,
            circulator,
            debunker,
            macro_precision: (circulator.precision + debunker.precision) / 2.0,
            macro_recall: (circulator.recall + debunker.recall) / 2.0,
            macro_f1: (circulator.f1 + debunker.f1) / 2.0,
            confusion: c,
        }
    }

    fn mean(all: &[Metrics]) -> Metrics {
        let n = all.len() as f64;
        let avg = |f: &dyn Fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        let class_avg = |f: &dyn Fn(&Metrics) -> ClassMetrics| ClassMetrics {
            precision: avg(&|m| f(m).precision),
            recall: avg(&|m| f(m).recall),
            f1: avg(&|m| f(m).f1),
        };
        let mut confusion = Confusion::default();
        for m in all {
            confusion.add(&m.confusion);
        }
        Metrics {
            accuracy: avg(&|m| m.accuracy),
            circulator: class_avg(&|m| m.circulator),
            debunker: class_avg(&|m| m.debunker),
            macro_precision: avg(&|m| m.macro_precision),
            macro_recall: avg(&|m| m.macro_recall),
            macro_f1: avg(&|m| m.macro_f1),
            confusion,
        }
    }

    pub const CSV_HEADER: &'static str =
        "accuracy,circulator_precision,circulator_recall,circulator_f1,debunker_precision,debunker_recall,debunker_f1,macro_precision,macro_recall,macro_f1";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.accuracy,
            self.circulator.precision,
            self.circulator.recall,
            self.circulator.f1,
            self.debunker.precision,
            self.debunker.recall,
            self.debunker.f1,
            self.macro_precision,
            self.macro_recall,
            self.macro_f1
        )
    }
}

fn confusion_of(m: &LogitModel, x: &[&FeatureVector], y: &[BehaviorLabel]) -> Result<Confusion> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    let mut c = Confusion::default();
    for (v, &label) in x.iter().zip(y) {
        if v.active.iter().any(|&col| col >= m.n_columns()) {
            return Err(Error::Contract(format!(
                "vector for {} does not fit the {}-column model",
                v.user_id,
                m.n_columns()
            )));
        }
        match (label, m.predict(v)) {
            (BehaviorLabel::Circulator, BehaviorLabel::Circulator) => c.tp += 1,
            (BehaviorLabel::Circulator, _) => c.fn_ += 1,
            (BehaviorLabel::Debunker, BehaviorLabel::Circulator) => c.fp += 1,
            (BehaviorLabel::Debunker, _) => c.tn += 1,
            (BehaviorLabel::Neither, _) => {
                return Err(Error::Contract(
                    "evaluation labels must be circulator or debunker".into(),
                ))
            }
        }
    }
    Ok(c)
}

pub fn evaluate(m: &LogitModel, x: &[FeatureVector], y: &[BehaviorLabel]) -> Result<Metrics> {
    let refs: Vec<&FeatureVector> = x.iter().collect();
    Ok(Metrics::from_confusion(confusion_of(m, &refs, y)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub repeats: usize,
    pub test_fraction: f64,
    pub mean: Metrics,
    pub folds: Vec<Metrics>,
    pub unconverged_folds: usize,
}

/// Stratified shuffled train/test splits, one per repeat, each seeded from
/// `hp.seed + repeat`.
pub fn cross_validate(
    x: &[FeatureVector],
    y: &[BehaviorLabel],
    n_columns: usize,
    hp: &Hyperparams,
    test_fraction: f64,
    repeats: usize,
) -> Result<CvReport> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Params(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    if repeats == 0 {
        return Err(Error::Params("at least one repeat is required".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Contract(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    let mut by_class: BTreeMap<BehaviorLabel, Vec<usize>> = BTreeMap::new();
    for (i, &l) in y.iter().enumerate() {
        label_sign(l)?;
        by_class.entry(l).or_default().push(i);
    }
    let mut test_sizes = BTreeMap::new();
    for label in [BehaviorLabel::Circulator, BehaviorLabel::Debunker] {
        let n = by_class.get(&label).map_or(0, Vec::len);
        let n_test = ((n as f64 * test_fraction).round() as usize).max(1);
        if n < 2 || n_test >= n {
            return Err(Error::Contract(format!(
                "class {label} has {n} samples, too few to stratify a {test_fraction} split"
            )));
        }
        test_sizes.insert(label, n_test);
    }

    let folds: Vec<(Metrics, bool)> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(hp.seed.wrapping_add(r as u64));
            let mut test = BTreeSet::new();
            for (label, idx) in &by_class {
                let mut idx = idx.clone();
                idx.shuffle(&mut rng);
                test.extend(idx.into_iter().take(test_sizes[label]));
            }
            let (train, test): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|i| !test.contains(i));
            let pick_x = |ids: &[usize]| ids.iter().map(|&i| &x[i]).collect::<Vec<_>>();
            let pick_y = |ids: &[usize]| ids.iter().map(|&i| y[i]).collect::<Vec<_>>();
            let obj = LogisticObjective::from_refs(pick_x(&train), &pick_y(&train), n_columns, hp.l2_strength)?;
            let (model, report) = fit(&obj, "", hp);
            let c = confusion_of(&model, &pick_x(&test), &pick_y(&test))?;
            Ok((Metrics::from_confusion(c), report.converged))
        })
        .collect::<Result<_>>()?;

    let unconverged_folds = folds.iter().filter(|(_, ok)| !ok).count();
    let folds: Vec<Metrics> = folds.into_iter().map(|(m, _)| m).collect();
    Ok(CvReport {
        repeats,
        test_fraction,
        mean: Metrics::mean(&folds),
        folds,
        unconverged_folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub column: usize,
    pub feature: Feature,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientReport {
    /// Circulator indicators, largest weight first.
    pub top_positive: Vec<Coefficient>,
    /// Debunker indicators, most negative weight first.
    pub top_negative: Vec<Coefficient>,
}

impl CoefficientReport {
    pub const CSV_HEADER: &'static str = "sign,rank,column,kind,target_id,weight";

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::CSV_HEADER.split(','))
            .map_err(crate::features::csv_err)?;
        for (sign, list) in [("positive", &self.top_positive), ("negative", &self.top_negative)] {
            for (rank, c) in list.iter().enumerate() {
                w.write_record([
                    sign.to_owned(),
                    (rank + 1).to_string(),
                    c.column.to_string(),
                    c.feature.kind.to_string(),
                    c.feature.target_id.clone(),
                    c.weight.to_string(),
                ])
                .map_err(crate::features::csv_err)?;
            }
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Validation(e.to_string()))?).expect("utf-8"))
    }
}

/// The `k` largest positive and `k` most negative weights, ties broken by
/// column index. `k` larger than the space is clamped.
pub fn top_coefficients(m: &LogitModel, space: &FeatureSpace, k: usize) -> Result<CoefficientReport> {
    if m.n_columns() != space.n_columns() || m.feature_hash != space.manifest_hash() {
        return Err(Error::VersionMismatch(
            "model was trained on a different feature space".into(),
        ));
    }
    let entry = |(column, &weight): (usize, &f64)| Coefficient {
        column,
        feature: space.feature(column).expect("column in range").clone(),
        weight,
    };
    let mut pos: Vec<(usize, &f64)> = m.weights.iter().enumerate().filter(|(_, &w)| w > 0.0).collect();
    pos.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(&b.0)));
    let mut neg: Vec<(usize, &f64)> = m.weights.iter().enumerate().filter(|(_, &w)| w < 0.0).collect();
    neg.sort_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)));
    Ok(CoefficientReport {
        top_positive: pos.into_iter().take(k).map(entry).collect(),
        top_negative: neg.into_iter().take(k).map(entry).collect(),
    })
}

pub const UNLABELED: &str = "Unlabeled";

/// Annotation of target accounts with a category such as "Sunni Scholars"
/// or "Non-religious".
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryMap {
    labels: BTreeSet<String>,
    map: HashMap<String, String>,
}

impl CategoryMap {
    /// `allowed` declares the label set; `None` accepts any label.
    pub fn new<I>(entries: I, allowed: Option<&[&str]>) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut cm = CategoryMap::default();
        for (target, label) in entries {
            if let Some(allowed) = allowed {
                if !allowed.contains(&label.as_str()) {
                    return Err(Error::Validation(format!("category {label:?} is not declared")));
                }
            }
            cm.labels.insert(label.clone());
            cm.map.insert(target, label);
        }
        Ok(cm)
    }

    pub fn category(&self, target_id: &str) -> &str {
        self.map.get(target_id).map_or(UNLABELED, String::as_str)
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `target_id,category` CSV with header.
    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["target_id", "category"] {
            return Err(Error::parse(path, 1, "expected header target_id,category"));
        }
        let mut entries = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
            if row.len() != 2 || row[1].is_empty() {
                return Err(Error::parse(path, i + 2, "expected target_id,category"));
            }
            entries.push((row[0].to_owned(), row[1].to_owned()));
        }
        Self::new(entries, None)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&crate::read_text(path)?, path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CategoryCounts {
    pub positive: BTreeMap<String, usize>,
    pub negative: BTreeMap<String, usize>,
}

impl CategoryCounts {
    pub const CSV_HEADER: &'static str = "sign,category,count";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for (sign, counts) in [("positive", &self.positive), ("negative", &self.negative)] {
            for (cat, n) in counts {
                out.push_str(&format!("{sign},{},{n}\n", csv_field(cat)));
            }
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Category counts per sign; targets missing from the map count as
/// [`UNLABELED`].
pub fn categorize_report(r: &CoefficientReport, cm: &CategoryMap) -> CategoryCounts {
    let count = |list: &[Coefficient]| {
        let mut m = BTreeMap::new();
        for c in list {
            *m.entry(cm.category(&c.feature.target_id).to_owned()).or_insert(0) += 1;
        }
        m
    };
    CategoryCounts {
        positive: count(&r.top_positive),
        negative: count(&r.top_negative),
    }
}
