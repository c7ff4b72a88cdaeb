//! One-vs-rest linear SVM trained by sub-gradient descent on the
//! L2-regularized hinge objective
//! `J(w, b) = lambda/2 * ||w||^2 + mean(max(0, 1 - y*(w.x + b)))`
//! with `lambda = 1 / (c * n_rows)`.
//!
//! Rows are visited in a freshly shuffled order each epoch (seeded
//! Fisher-Yates), so training is deterministic given the seed. Prediction
//! takes the class with the largest margin; ties go to the earliest
//! (lexicographically first) label.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClassifyError, Dataset, Model, ModelKind, ModelParams, N_FEATURES};

/// Sub-gradient descent settings; `c` is the usual soft-margin constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub lr: f64,
    pub epochs: usize,
    pub c: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { lr: 0.05, epochs: 300, c: 1.0, seed: 0 }
    }
}

/// The one-vs-rest objective for a single class, with labels in {-1, +1}.
pub fn svm_objective(
    x: &[[f64; N_FEATURES]],
    y_pm: &[f64],
    lambda: f64,
    w: &[f64; N_FEATURES],
    b: f64,
) -> f64 {
    let n = x.len() as f64;
    let hinge: f64 = x
        .iter()
        .zip(y_pm)
        .map(|(xi, yi)| {
            let m = yi * (super::dot(w, xi) + b);
            (1.0 - m).max(0.0)
        })
        .sum::<f64>()
        / n;
    0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>() + hinge
}

/// Sub-gradient of [`svm_objective`] (rows with margin exactly 1 are treated
/// as non-violating). Returns (d/dw, d/db).
pub fn svm_subgradient(
    x: &[[f64; N_FEATURES]],
    y_pm: &[f64],
    lambda: f64,
    w: &[f64; N_FEATURES],
    b: f64,
) -> ([f64; N_FEATURES], f64) {
    let n = x.len() as f64;
    let mut gw = [0.0; N_FEATURES];
    let mut gb = 0.0;
    for (xi, yi) in x.iter().zip(y_pm) {
        let m = yi * (super::dot(w, xi) + b);
        if m < 1.0 {
            for f in 0..N_FEATURES {
                gw[f] -= yi * xi[f] / n;
            }
            gb -= yi / n;
        }
    }
    for f in 0..N_FEATURES {
        gw[f] += lambda * w[f];
    }
    (gw, gb)
}

fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
}

/// Train one-vs-rest linear SVMs on the standardized dataset.
pub fn train_linear_svm(ds: &Dataset, cfg: &SvmConfig) -> Result<Model, ClassifyError> {
    let (x, y, labels) = ds.design()?;
    let n = x.len();
    let lambda = 1.0 / (cfg.c * n as f64);
    let mut weights = Vec::with_capacity(labels.len());
    let mut bias = Vec::with_capacity(labels.len());
    for class in 0..labels.len() {
        let y_pm: Vec<f64> =
            y.iter().map(|&yi| if yi == class { 1.0 } else { -1.0 }).collect();
        let mut w = [0.0f64; N_FEATURES];
        let mut b = 0.0f64;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(class as u64));
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..cfg.epochs {
            shuffle(&mut order, &mut rng);
            for &i in &order {
                let margin = y_pm[i] * (super::dot(&w, &x[i]) + b);
                if margin < 1.0 {
                    for f in 0..N_FEATURES {
                        w[f] -= cfg.lr * (lambda * w[f] - y_pm[i] * x[i][f]);
                    }
                    b += cfg.lr * y_pm[i];
                } else {
                    for wf in &mut w {
                        *wf -= cfg.lr * lambda * *wf;
                    }
                }
            }
        }
        if !w.iter().all(|v| v.is_finite()) || !b.is_finite() {
            return Err(ClassifyError::Diverged { kind: ModelKind::LinearSvm });
        }
        weights.push(w);
        bias.push(b);
    }
    Ok(Model {
        kind: ModelKind::LinearSvm,
        scaler: ds.scaler.clone(),
        labels,
        params: ModelParams::LinearSvm { weights, bias },
    })
}
