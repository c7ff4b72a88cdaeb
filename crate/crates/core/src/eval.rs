//! Classification metrics and model comparison.
//!
//! The confusion matrix is label-sorted with rows = true class and
//! columns = predicted class. Per-class precision, sensitivity, specificity,
//! and F1 come from one-vs-rest reductions; zero-denominator metrics report
//! the value 0 together with `defined = false` instead of NaN, so reports
//! stay machine-readable. Macro averages are unweighted means, weighted
//! averages are support-weighted (which makes weighted sensitivity equal
//! accuracy for single-label multiclass data).

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classify::{
    train_knn, train_linear_svm, train_logreg, train_mlp, train_tree, ClassifyError, Dataset,
    KnnConfig, LogRegConfig, MlpConfig, Model, ModelKind, SvmConfig, TreeConfig,
};
use crate::features::{ClassLabel, FeatureVector};

/// Errors from metric computation and dataset splitting.
#[derive(Debug, Error)]
pub enum EvalError {
    /// Label vectors differ in length.
    #[error("length mismatch: {truth} true labels vs {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    /// No rows to evaluate.
    #[error("empty input")]
    EmptyInput,
    /// Confusion matrix with zero total count.
    #[error("empty confusion matrix")]
    EmptyMatrix,
    /// Stratified splitting needs at least two rows per class.
    #[error("class {label} has only {rows} row(s), need >= 2")]
    ClassTooSmall { label: ClassLabel, rows: usize },
    /// Test fraction outside (0, 1).
    #[error("test fraction {0} outside (0, 1)")]
    BadFraction(f64),
    /// Training or prediction failure during comparison.
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

// ---------------------------------------------------------------------------
// Confusion matrix
// ---------------------------------------------------------------------------

/// Label-sorted confusion counts; `counts[i][j]` = rows with true label
/// `labels[i]` predicted as `labels[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub labels: Vec<ClassLabel>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    /// Total number of evaluated rows.
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Correctly classified rows (the diagonal).
    pub fn trace(&self) -> usize {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }
}

/// Count a confusion matrix from aligned true/predicted label vectors.
/// The label list is the sorted union of the labels seen.
pub fn confusion(
    true_labels: &[ClassLabel],
    predicted_labels: &[ClassLabel],
) -> Result<ConfusionMatrix, EvalError> {
    if true_labels.len() != predicted_labels.len() {
        return Err(EvalError::LengthMismatch {
            truth: true_labels.len(),
            predicted: predicted_labels.len(),
        });
    }
    if true_labels.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut labels: Vec<ClassLabel> = Vec::new();
    for l in true_labels.iter().chain(predicted_labels) {
        if !labels.contains(l) {
            labels.push(*l);
        }
    }
    labels.sort_by_key(|l| l.as_str());
    let at = |l: &ClassLabel| labels.iter().position(|c| c == l).expect("label present");
    let mut counts = vec![vec![0usize; labels.len()]; labels.len()];
    for (t, p) in true_labels.iter().zip(predicted_labels) {
        counts[at(t)][at(p)] += 1;
    }
    Ok(ConfusionMatrix { labels, counts })
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// A ratio metric; `defined` is false when its denominator was zero (the
/// value is then reported as 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub value: f64,
    pub defined: bool,
}

fn rate(numerator: f64, denominator: f64) -> Rate {
    if denominator > 0.0 {
        Rate { value: numerator / denominator, defined: true }
    } else {
        Rate { value: 0.0, defined: false }
    }
}

/// One-vs-rest metrics for a single class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub label: ClassLabel,
    /// Number of true rows of this class.
    pub support: usize,
    pub precision: Rate,
    pub sensitivity: Rate,
    pub specificity: Rate,
    pub f1: Rate,
}

/// Averaged precision/sensitivity/F1 triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvgMetrics {
    pub precision: f64,
    pub sensitivity: f64,
    pub f1: f64,
}

/// Full per-class and averaged report for one confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    /// trace / total.
    pub accuracy: f64,
    pub macro_avg: AvgMetrics,
    pub weighted_avg: AvgMetrics,
}

/// Compute the report: PR = TP/(TP+FP), SE = TP/(TP+FN), SP = TN/(TN+FP),
/// F1 = 2*PR*SE/(PR+SE).
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 || cm.labels.is_empty() {
        return Err(EvalError::EmptyMatrix);
    }
    let l = cm.labels.len();
    let mut per_class = Vec::with_capacity(l);
    for i in 0..l {
        let tp = cm.counts[i][i] as f64;
        let row: usize = cm.counts[i].iter().sum();
        let col: usize = (0..l).map(|r| cm.counts[r][i]).sum();
        let fn_ = row as f64 - tp;
        let fp = col as f64 - tp;
        let tn = total as f64 - row as f64 - fp;
        let precision = rate(tp, tp + fp);
        let sensitivity = rate(tp, tp + fn_);
        let specificity = rate(tn, tn + fp);
        let f1 = rate(
            2.0 * precision.value * sensitivity.value,
            precision.value + sensitivity.value,
        );
        per_class.push(ClassMetrics {
            label: cm.labels[i],
            support: row,
            precision,
            sensitivity,
            specificity,
            f1,
        });
    }
    let accuracy = cm.trace() as f64 / total as f64;
    let n = l as f64;
    let macro_avg = AvgMetrics {
        precision: per_class.iter().map(|c| c.precision.value).sum::<f64>() / n,
        sensitivity: per_class.iter().map(|c| c.sensitivity.value).sum::<f64>() / n,
        f1: per_class.iter().map(|c| c.f1.value).sum::<f64>() / n,
    };
    let support_total: f64 = per_class.iter().map(|c| c.support as f64).sum();
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|c| c.support as f64 * f(c)).sum::<f64>() / support_total
    };
    let weighted_avg = AvgMetrics {
        precision: weighted(|c| c.precision.value),
        sensitivity: weighted(|c| c.sensitivity.value),
        f1: weighted(|c| c.f1.value),
    };
    Ok(MetricsReport { per_class, accuracy, macro_avg, weighted_avg })
}

// ---------------------------------------------------------------------------
// Stratified split
// ---------------------------------------------------------------------------

/// Split rows per class: ceil(test_frac x class size) rows to test (capped
/// so at least one row per class stays in train), chosen by one seeded
/// shuffle per class, classes visited in label order. Row order within each
/// part follows the original dataset order.
///
/// The train part is returned as a [`Dataset`] (its scaler refits on the
/// train rows only); the test part stays plain rows, to be standardized by
/// whatever model is being evaluated.
pub fn stratified_split(
    ds: &Dataset,
    test_frac: f64,
    seed: u64,
) -> Result<(Dataset, Vec<(FeatureVector, ClassLabel)>), EvalError> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(EvalError::BadFraction(test_frac));
    }
    let labels = ds.label_set();
    for &label in &labels {
        let rows = ds.rows.iter().filter(|(_, l)| *l == label).count();
        if rows < 2 {
            return Err(EvalError::ClassTooSmall { label, rows });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; ds.rows.len()];
    for &label in &labels {
        let mut idx: Vec<usize> = (0..ds.rows.len()).filter(|&i| ds.rows[i].1 == label).collect();
        for i in (1..idx.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            idx.swap(i, j);
        }
        let want = (test_frac * idx.len() as f64).ceil() as usize;
        let n_test = want.min(idx.len() - 1);
        for &i in idx.iter().take(n_test) {
            is_test[i] = true;
        }
    }
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (i, row) in ds.rows.iter().enumerate() {
        if is_test[i] {
            test_rows.push(row.clone());
        } else {
            train_rows.push(row.clone());
        }
    }
    Ok((Dataset::from_rows(train_rows)?, test_rows))
}

// ---------------------------------------------------------------------------
// Model comparison
// ---------------------------------------------------------------------------

/// The canonical comparison row order.
pub const COMPARE_ORDER: [ModelKind; 5] = [
    ModelKind::Knn,
    ModelKind::LinearSvm,
    ModelKind::LogReg,
    ModelKind::Tree,
    ModelKind::Mlp,
];

/// Report name of each learner in comparison tables.
pub fn table_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Knn => "KNN",
        ModelKind::LinearSvm => "SVM",
        ModelKind::LogReg => "LogReg",
        ModelKind::Tree => "Tree",
        ModelKind::Mlp => "MLP",
    }
}

/// All knobs for a comparison run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareConfig {
    pub test_frac: f64,
    pub logreg: LogRegConfig,
    pub tree: TreeConfig,
    pub knn: KnnConfig,
    pub svm: SvmConfig,
    pub mlp: MlpConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            test_frac: 0.2,
            logreg: LogRegConfig::default(),
            tree: TreeConfig::default(),
            knn: KnnConfig::default(),
            svm: SvmConfig::default(),
            mlp: MlpConfig::default(),
        }
    }
}

/// One comparison row: the model and its held-out metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub kind: ModelKind,
    pub report: MetricsReport,
}

/// Comparison results over a shared train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    pub n_train: usize,
    pub n_test: usize,
}

/// Train one model of the given kind on a dataset.
pub fn train_model(ds: &Dataset, kind: ModelKind, cfg: &CompareConfig) -> Result<Model, ClassifyError> {
    match kind {
        ModelKind::LogReg => train_logreg(ds, &cfg.logreg),
        ModelKind::Tree => train_tree(ds, &cfg.tree),
        ModelKind::Knn => train_knn(ds, &cfg.knn),
        ModelKind::LinearSvm => train_linear_svm(ds, &cfg.svm),
        ModelKind::Mlp => train_mlp(ds, &cfg.mlp),
    }
}

/// Evaluate a trained model on labeled rows.
pub fn evaluate_model(
    model: &Model,
    rows: &[(FeatureVector, ClassLabel)],
) -> Result<MetricsReport, EvalError> {
    let truth: Vec<ClassLabel> = rows.iter().map(|(_, l)| *l).collect();
    let mut predicted = Vec::with_capacity(rows.len());
    for (fv, _) in rows {
        predicted.push(model.predict(fv)?);
    }
    metrics(&confusion(&truth, &predicted)?)
}

/// Train and evaluate the requested model kinds on one shared stratified
/// split. Rows come out in the canonical order (KNN, SVM, LogReg, Tree,
/// MLP), restricted to the kinds requested.
pub fn compare_models(
    ds: &Dataset,
    kinds: &[ModelKind],
    cfg: &CompareConfig,
    seed: u64,
) -> Result<CompareTable, EvalError> {
    let (train, test) = stratified_split(ds, cfg.test_frac, seed)?;
    let mut rows = Vec::new();
    for kind in COMPARE_ORDER {
        if !kinds.contains(&kind) {
            continue;
        }
        let model = train_model(&train, kind, cfg)?;
        let report = evaluate_model(&model, &test)?;
        rows.push(CompareRow { kind, report });
    }
    Ok(CompareTable { rows, n_train: train.len(), n_test: test.len() })
}

impl CompareTable {
    /// Aligned text table; one row per model, weighted-average columns in
    /// the order Precision, Sensitivity, F1 Score, Accuracy.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8}  {:>9}  {:>11}  {:>8}  {:>8}\n",
            "Model", "Precision", "Sensitivity", "F1 Score", "Accuracy"
        ));
        for row in &self.rows {
            let w = &row.report.weighted_avg;
            out.push_str(&format!(
                "{:<8}  {:>9.4}  {:>11.4}  {:>8.4}  {:>8.4}\n",
                table_name(row.kind),
                w.precision,
                w.sensitivity,
                w.f1,
                row.report.accuracy
            ));
        }
        out
    }

    /// Structured CSV: one row per (model, class) plus macro/weighted
    /// average rows (specificity left empty for averages).
    pub fn render_csv(&self) -> String {
        let mut out = String::from("model,class,precision,sensitivity,specificity,f1,accuracy\n");
        for row in &self.rows {
            let name = table_name(row.kind);
            let acc = row.report.accuracy;
            for c in &row.report.per_class {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    name,
                    c.label,
                    c.precision.value,
                    c.sensitivity.value,
                    c.specificity.value,
                    c.f1.value,
                    acc
                ));
            }
            for (tag, avg) in
                [("macro_avg", &row.report.macro_avg), ("weighted_avg", &row.report.weighted_avg)]
            {
                out.push_str(&format!(
                    "{},{},{},{},,{},{}\n",
                    name, tag, avg.precision, avg.sensitivity, avg.f1, acc
                ));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
