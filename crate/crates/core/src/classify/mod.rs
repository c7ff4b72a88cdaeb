//! From-scratch multiclass classifiers over the rhythm feature triple:
//! softmax logistic regression, a Gini decision tree, KNN, one-vs-rest
//! linear SVM, and a one-hidden-layer MLP.
//!
//! All learners consume standardized features (z-scores fitted on the
//! training rows), are deterministic functions of (dataset order, config,
//! seed), and use explicitly specified tie-breaking rules so independent
//! implementations can agree exactly. Training objectives and gradients are
//! exported so they can be verified against finite differences.
//!
//! Models serialize to a versioned JSON document with fields
//! `{version, kind, scaler, labels, parameters}`; loading checks the version
//! and round-trips predictions exactly.

mod knn;
mod logreg;
mod mlp;
mod svm;
mod tree;

pub use knn::{knn_predict, train_knn, KnnConfig};
pub use logreg::{logreg_gradient, logreg_loss, train_logreg, LogRegConfig};
pub use mlp::{mlp_gradient, mlp_loss, mlp_param_count, train_mlp, MlpConfig};
pub use svm::{svm_objective, svm_subgradient, train_linear_svm, SvmConfig};
pub use tree::{gini_impurity, train_tree, TreeConfig, TreeNode};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{ClassLabel, FeatureVector};

/// Number of input features (mean RR, mean QRS, HBR).
pub const N_FEATURES: usize = 3;

/// Current model file format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Errors from dataset handling, training, prediction, and model files.
#[derive(Debug, Error)]
pub enum ClassifyError {
    /// Not enough rows for the requested operation.
    #[error("too few rows: {found}, need >= {need}")]
    TooFewRows { found: usize, need: usize },
    /// A feature is constant across the dataset; z-scores are undefined.
    #[error("degenerate feature {feature:?}: zero standard deviation")]
    DegenerateFeature { feature: &'static str },
    /// Training requires at least two distinct labels.
    #[error("single-class dataset: training needs >= 2 distinct labels")]
    SingleClass,
    /// KNN neighbour count exceeds the stored rows.
    #[error("k too large: k = {k} > {rows} rows")]
    KTooLarge { k: usize, rows: usize },
    /// Training loss became non-finite.
    #[error("{kind} training diverged: non-finite loss or parameters")]
    Diverged { kind: ModelKind },
    /// Probability output is only defined for LogReg and Mlp.
    #[error("{0} does not produce class probabilities")]
    UnsupportedProbability(ModelKind),
    /// Model has no usable parameters (e.g. empty KNN store).
    #[error("untrained model")]
    UntrainedModel,
    /// Prediction input contains NaN or infinity.
    #[error("non-finite feature input")]
    NonFiniteInput,
    /// Model file version is not readable by this implementation.
    #[error("bad model file version {found}, expected {MODEL_FORMAT_VERSION}")]
    BadVersion { found: u64 },
    /// Model file text is structurally invalid.
    #[error("malformed model file: {0}")]
    MalformedModel(String),
}

// ---------------------------------------------------------------------------
// Standardization and datasets
// ---------------------------------------------------------------------------

/// Per-feature standardization parameters (population statistics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: [f64; N_FEATURES],
    pub std: [f64; N_FEATURES],
}

/// Fit a scaler: per-feature mean and population standard deviation.
pub fn standardize_fit(rows: &[(FeatureVector, ClassLabel)]) -> Result<Scaler, ClassifyError> {
    if rows.len() < 2 {
        return Err(ClassifyError::TooFewRows { found: rows.len(), need: 2 });
    }
    let n = rows.len() as f64;
    let mut mean = [0.0; N_FEATURES];
    for (fv, _) in rows {
        for (m, v) in mean.iter_mut().zip(fv.as_array()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = [0.0; N_FEATURES];
    for (fv, _) in rows {
        for ((s, v), m) in var.iter_mut().zip(fv.as_array()).zip(mean) {
            *s += (v - m) * (v - m);
        }
    }
    let mut std = [0.0; N_FEATURES];
    for (i, (s, v)) in std.iter_mut().zip(var).enumerate() {
        *s = (v / n).sqrt();
        if *s == 0.0 {
            return Err(ClassifyError::DegenerateFeature {
                feature: FeatureVector::FEATURE_NAMES[i],
            });
        }
    }
    Ok(Scaler { mean, std })
}

/// Standardize one feature triple: `z = (x - mean) / std` per feature.
pub fn standardize_apply(scaler: &Scaler, fv: &FeatureVector) -> [f64; N_FEATURES] {
    let x = fv.as_array();
    let mut z = [0.0; N_FEATURES];
    for i in 0..N_FEATURES {
        z[i] = (x[i] - scaler.mean[i]) / scaler.std[i];
    }
    z
}

/// Labeled training rows plus the scaler fitted on them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<(FeatureVector, ClassLabel)>,
    pub scaler: Scaler,
}

impl Dataset {
    /// Build a dataset and fit its scaler. Needs at least two rows and no
    /// constant feature.
    pub fn from_rows(rows: Vec<(FeatureVector, ClassLabel)>) -> Result<Self, ClassifyError> {
        let scaler = standardize_fit(&rows)?;
        Ok(Self { rows, scaler })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct labels present, sorted by display name. This is the class
    /// index order used by every learner.
    pub fn label_set(&self) -> Vec<ClassLabel> {
        let mut labels: Vec<ClassLabel> = Vec::new();
        for (_, l) in &self.rows {
            if !labels.contains(l) {
                labels.push(*l);
            }
        }
        labels.sort_by_key(|l| l.as_str());
        labels
    }

    /// Standardized design matrix, class indices, and the label set.
    /// Training requires at least two distinct labels.
    pub(crate) fn design(
        &self,
    ) -> Result<(Vec<[f64; N_FEATURES]>, Vec<usize>, Vec<ClassLabel>), ClassifyError> {
        let labels = self.label_set();
        if labels.len() < 2 {
            return Err(ClassifyError::SingleClass);
        }
        let x: Vec<[f64; N_FEATURES]> =
            self.rows.iter().map(|(fv, _)| standardize_apply(&self.scaler, fv)).collect();
        let y: Vec<usize> = self
            .rows
            .iter()
            .map(|(_, l)| labels.iter().position(|c| c == l).expect("label in set"))
            .collect();
        Ok((x, y, labels))
    }
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// Learner family of a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    LogReg,
    Tree,
    Knn,
    LinearSvm,
    Mlp,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::LogReg => "LogReg",
            ModelKind::Tree => "Tree",
            ModelKind::Knn => "Knn",
            ModelKind::LinearSvm => "LinearSvm",
            ModelKind::Mlp => "Mlp",
        })
    }
}

/// Kind-specific parameters. Linear weights are indexed `[class][feature]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ModelParams {
    LogReg {
        weights: Vec<[f64; N_FEATURES]>,
        bias: Vec<f64>,
    },
    Tree {
        nodes: Vec<TreeNode>,
    },
    Knn {
        k: usize,
        points: Vec<[f64; N_FEATURES]>,
        point_labels: Vec<usize>,
    },
    LinearSvm {
        weights: Vec<[f64; N_FEATURES]>,
        bias: Vec<f64>,
    },
    Mlp {
        hidden_weights: Vec<[f64; N_FEATURES]>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<Vec<f64>>,
        output_bias: Vec<f64>,
    },
}

/// A trained classifier: parameters plus the scaler and label set it was
/// fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub scaler: Scaler,
    /// Class labels in index order (sorted by display name at training).
    pub labels: Vec<ClassLabel>,
    pub params: ModelParams,
}

impl Model {
    /// Predict the class of one feature triple.
    pub fn predict(&self, fv: &FeatureVector) -> Result<ClassLabel, ClassifyError> {
        if !fv.as_array().iter().all(|v| v.is_finite()) {
            return Err(ClassifyError::NonFiniteInput);
        }
        if self.labels.is_empty() {
            return Err(ClassifyError::UntrainedModel);
        }
        let z = standardize_apply(&self.scaler, fv);
        let idx = match &self.params {
            ModelParams::LogReg { weights, bias } | ModelParams::LinearSvm { weights, bias } => {
                let scores: Vec<f64> = weights
                    .iter()
                    .zip(bias)
                    .map(|(w, b)| dot(w, &z) + b)
                    .collect();
                argmax(&scores)
            }
            ModelParams::Tree { nodes } => tree::tree_class(nodes, &z)?,
            ModelParams::Knn { k, points, point_labels } => {
                knn::vote(points, point_labels, self.labels.len(), &z, *k)?
            }
            ModelParams::Mlp { .. } => argmax(&self.raw_proba(&z)?),
        };
        self.labels.get(idx).copied().ok_or(ClassifyError::UntrainedModel)
    }

    /// Class probabilities in label-set order (LogReg and Mlp only);
    /// rows sum to 1 within 1e-9.
    pub fn predict_proba(&self, fv: &FeatureVector) -> Result<Vec<f64>, ClassifyError> {
        if !fv.as_array().iter().all(|v| v.is_finite()) {
            return Err(ClassifyError::NonFiniteInput);
        }
        let z = standardize_apply(&self.scaler, fv);
        match &self.params {
            ModelParams::LogReg { weights, bias } => {
                let mut scores: Vec<f64> =
                    weights.iter().zip(bias).map(|(w, b)| dot(w, &z) + b).collect();
                softmax_in_place(&mut scores);
                Ok(scores)
            }
            ModelParams::Mlp { .. } => self.raw_proba(&z),
            _ => Err(ClassifyError::UnsupportedProbability(self.kind)),
        }
    }

    fn raw_proba(&self, z: &[f64; N_FEATURES]) -> Result<Vec<f64>, ClassifyError> {
        match &self.params {
            ModelParams::Mlp { hidden_weights, hidden_bias, output_weights, output_bias } => {
                let a1: Vec<f64> = hidden_weights
                    .iter()
                    .zip(hidden_bias)
                    .map(|(w, b)| sigmoid(dot(w, z) + b))
                    .collect();
                let mut out: Vec<f64> = output_weights
                    .iter()
                    .zip(output_bias)
                    .map(|(w, b)| w.iter().zip(&a1).map(|(wi, ai)| wi * ai).sum::<f64>() + b)
                    .collect();
                softmax_in_place(&mut out);
                Ok(out)
            }
            _ => Err(ClassifyError::UnsupportedProbability(self.kind)),
        }
    }
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(flatten)]
    model: Model,
}

/// Serialize a model to versioned JSON text.
pub fn save_model(model: &Model) -> String {
    serde_json::to_string_pretty(&ModelFile { version: MODEL_FORMAT_VERSION, model: model.clone() })
        .expect("model parameters are finite and serializable")
}

/// Parse model text, checking the format version first.
pub fn load_model(text: &str) -> Result<Model, ClassifyError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ClassifyError::MalformedModel(e.to_string()))?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
        Some(v) => return Err(ClassifyError::BadVersion { found: v }),
        None => return Err(ClassifyError::MalformedModel("missing version field".into())),
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| ClassifyError::MalformedModel(e.to_string()))?;
    let kind_matches = matches!(
        (&file.model.kind, &file.model.params),
        (ModelKind::LogReg, ModelParams::LogReg { .. })
            | (ModelKind::Tree, ModelParams::Tree { .. })
            | (ModelKind::Knn, ModelParams::Knn { .. })
            | (ModelKind::LinearSvm, ModelParams::LinearSvm { .. })
            | (ModelKind::Mlp, ModelParams::Mlp { .. })
    );
    if !kind_matches {
        return Err(ClassifyError::MalformedModel(format!(
            "kind {} does not match parameter family",
            file.model.kind
        )));
    }
    Ok(file.model)
}

// ---------------------------------------------------------------------------
// Shared numeric helpers
// ---------------------------------------------------------------------------

pub(crate) fn dot(w: &[f64; N_FEATURES], x: &[f64; N_FEATURES]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Index of the largest score; ties go to the earliest index, which is the
/// lexicographically first label.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable in-place softmax.
pub(crate) fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Central finite-difference gradient of `f` at `params` (step `eps`).
/// Shared verification oracle for the gradient tests.
#[cfg(test)]
pub(crate) fn finite_difference<F: Fn(&[f64]) -> f64>(
    f: F,
    params: &[f64],
    eps: f64,
) -> Vec<f64> {
    let mut g = vec![0.0; params.len()];
    let mut p = params.to_vec();
    for i in 0..params.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let hi = f(&p);
        p[i] = orig - eps;
        let lo = f(&p);
        p[i] = orig;
        g[i] = (hi - lo) / (2.0 * eps);
    }
    g
}

#[cfg(test)]
pub(crate) fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

/// Tiny well-separated 2-class dataset used by several learner tests.
#[cfg(test)]
pub(crate) fn toy_separable() -> Dataset {
    let mut rows = Vec::new();
    for (rr, q) in [(1.0, 0.08), (0.95, 0.07), (0.9, 0.09), (1.05, 0.085)] {
        rows.push((
            FeatureVector { mean_rr_s: rr, mean_qrs_s: q, hbr_bpm: 60.0 / rr },
            ClassLabel::NonVT,
        ));
    }
    for (rr, q) in [(0.35, 0.15), (0.4, 0.16), (0.33, 0.14), (0.38, 0.155)] {
        rows.push((
            FeatureVector { mean_rr_s: rr, mean_qrs_s: q, hbr_bpm: 60.0 / rr },
            ClassLabel::SustainedVT,
        ));
    }
    Dataset::from_rows(rows).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(a: f64, b: f64, c: f64) -> FeatureVector {
        FeatureVector { mean_rr_s: a, mean_qrs_s: b, hbr_bpm: c }
    }

    #[test]
    fn two_point_standardization() {
        // Feature 0 takes values 1 and 3: mean 2, population std 1.
        let rows = vec![
            (fv(1.0, 0.0, 5.0), ClassLabel::NonVT),
            (fv(3.0, 1.0, 7.0), ClassLabel::SustainedVT),
        ];
        let s = standardize_fit(&rows).unwrap();
        assert_eq!(s.mean[0], 2.0);
        assert_eq!(s.std[0], 1.0);
        assert_eq!(standardize_apply(&s, &rows[0].0)[0], -1.0);
        assert_eq!(standardize_apply(&s, &rows[1].0)[0], 1.0);
    }

    #[test]
    fn constant_feature_is_degenerate() {
        let rows = vec![
            (fv(1.0, 0.5, 5.0), ClassLabel::NonVT),
            (fv(3.0, 0.5, 7.0), ClassLabel::SustainedVT),
        ];
        assert!(matches!(
            standardize_fit(&rows),
            Err(ClassifyError::DegenerateFeature { feature: "mean_qrs_s" })
        ));
    }

    #[test]
    fn standardized_data_has_zero_mean_unit_std() {
        let ds = toy_separable();
        let (x, _, _) = ds.design().unwrap();
        for f in 0..N_FEATURES {
            let n = x.len() as f64;
            let mean: f64 = x.iter().map(|r| r[f]).sum::<f64>() / n;
            let var: f64 = x.iter().map(|r| (r[f] - mean) * (r[f] - mean)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9, "feature {f} mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-9, "feature {f} std {}", var.sqrt());
        }
    }

    #[test]
    fn label_set_is_sorted_by_display_name() {
        let rows = vec![
            (fv(1.0, 0.1, 60.0), ClassLabel::SustainedVT),
            (fv(2.0, 0.2, 30.0), ClassLabel::NonVT),
            (fv(3.0, 0.3, 20.0), ClassLabel::NonSustainedVT),
        ];
        let ds = Dataset::from_rows(rows).unwrap();
        assert_eq!(
            ds.label_set(),
            vec![ClassLabel::NonSustainedVT, ClassLabel::NonVT, ClassLabel::SustainedVT],
            "NonSustainedVT < NonVT < SustainedVT lexicographically"
        );
    }

    #[test]
    fn single_class_rejected_at_training() {
        let rows = vec![
            (fv(1.0, 0.1, 60.0), ClassLabel::NonVT),
            (fv(2.0, 0.2, 30.0), ClassLabel::NonVT),
        ];
        let ds = Dataset::from_rows(rows).unwrap();
        assert!(matches!(ds.design(), Err(ClassifyError::SingleClass)));
    }

    #[test]
    fn model_file_round_trips_predictions() {
        let ds = toy_separable();
        let model = train_logreg(&ds, &LogRegConfig::default()).unwrap();
        let loaded = load_model(&save_model(&model)).unwrap();
        assert_eq!(loaded, model, "parameters survive the text round trip bit-exactly");
        for i in 0..100 {
            let q = fv(
                0.2 + 0.01 * i as f64,
                0.05 + 0.001 * i as f64,
                60.0 / (0.2 + 0.01 * i as f64),
            );
            assert_eq!(model.predict(&q).unwrap(), loaded.predict(&q).unwrap());
        }
    }

    #[test]
    fn model_file_version_gate() {
        let ds = toy_separable();
        let model = train_tree(&ds, &TreeConfig::default()).unwrap();
        let text = save_model(&model);
        let bumped = text.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(load_model(&bumped), Err(ClassifyError::BadVersion { found: 2 })));

        let truncated = &text[..text.len() / 2];
        assert!(matches!(load_model(truncated), Err(ClassifyError::MalformedModel(_))));
    }

    #[test]
    fn kind_and_params_must_agree() {
        let ds = toy_separable();
        let model = train_logreg(&ds, &LogRegConfig::default()).unwrap();
        let text = save_model(&model).replacen("\"kind\": \"LogReg\"", "\"kind\": \"Tree\"", 1);
        assert!(matches!(load_model(&text), Err(ClassifyError::MalformedModel(_))));
    }

    #[test]
    fn non_finite_inputs_rejected() {
        let ds = toy_separable();
        let model = train_logreg(&ds, &LogRegConfig::default()).unwrap();
        assert!(matches!(
            model.predict(&fv(f64::NAN, 0.1, 60.0)),
            Err(ClassifyError::NonFiniteInput)
        ));
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut s = vec![2.0, -1.0, 700.0, 0.0];
        softmax_in_place(&mut s);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(s.iter().all(|p| (0.0..=1.0).contains(p)));
    }
}
