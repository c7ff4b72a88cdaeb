//! K-nearest-neighbour voting on standardized features.
//!
//! Euclidean distance; majority vote among the k nearest rows. All ties are
//! specified: equal distances prefer the lower row index, tied votes prefer
//! the class with the smaller mean distance, and remaining ties go to the
//! lexicographically first label.

use super::{
    standardize_apply, ClassifyError, Dataset, Model, ModelKind, ModelParams, N_FEATURES,
};
use crate::features::{ClassLabel, FeatureVector};

/// Neighbour count; the default of 5 suits corpus-scale datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Classify `fv` by k-nearest-neighbour vote over the dataset rows.
pub fn knn_predict(ds: &Dataset, fv: &FeatureVector, k: usize) -> Result<ClassLabel, ClassifyError> {
    let (x, y, labels) = ds.design()?;
    let z = standardize_apply(&ds.scaler, fv);
    let idx = vote(&x, &y, labels.len(), &z, k)?;
    Ok(labels[idx])
}

/// Package the dataset as a KNN model (stores the standardized rows).
pub fn train_knn(ds: &Dataset, cfg: &KnnConfig) -> Result<Model, ClassifyError> {
    let (x, y, labels) = ds.design()?;
    if cfg.k == 0 || cfg.k > x.len() {
        return Err(ClassifyError::KTooLarge { k: cfg.k, rows: x.len() });
    }
    Ok(Model {
        kind: ModelKind::Knn,
        scaler: ds.scaler.clone(),
        labels,
        params: ModelParams::Knn { k: cfg.k, points: x, point_labels: y },
    })
}

/// The vote itself, shared by [`knn_predict`] and model prediction.
pub(crate) fn vote(
    points: &[[f64; N_FEATURES]],
    point_labels: &[usize],
    n_classes: usize,
    z: &[f64; N_FEATURES],
    k: usize,
) -> Result<usize, ClassifyError> {
    if points.is_empty() {
        return Err(ClassifyError::UntrainedModel);
    }
    if k == 0 || k > points.len() {
        return Err(ClassifyError::KTooLarge { k, rows: points.len() });
    }
    let mut dist: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d2: f64 = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2.sqrt(), i)
        })
        .collect();
    // Equal distances prefer the lower row index.
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nearest = &dist[..k];

    let mut count = vec![0usize; n_classes];
    let mut dist_sum = vec![0.0f64; n_classes];
    for &(d, i) in nearest {
        count[point_labels[i]] += 1;
        dist_sum[point_labels[i]] += d;
    }
    let top = *count.iter().max().expect("n_classes >= 1");
    // Tied votes: smaller mean distance, then the lexicographically first
    // label (lowest class index, since labels are sorted by name).
    let mut best: Option<usize> = None;
    for c in 0..n_classes {
        if count[c] != top {
            continue;
        }
        match best {
            None => best = Some(c),
            Some(b) => {
                let mean_c = dist_sum[c] / count[c] as f64;
                let mean_b = dist_sum[b] / count[b] as f64;
                if mean_c < mean_b {
                    best = Some(c);
                }
            }
        }
    }
    best.ok_or(ClassifyError::UntrainedModel)
}
