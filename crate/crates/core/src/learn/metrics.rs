//! Regression and classification evaluation.

use std::collections::BTreeSet;

use serde::Serialize;

use super::LearnError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionReport {
    pub n: usize,
    pub ssr: f64,
    pub mse: f64,
    /// `None` when either side has zero variance.
    pub pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelScores {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub n: usize,
    pub accuracy: f64,
    pub per_label: Vec<LabelScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum EvalReport {
    Regression(RegressionReport),
    Classification(ClassificationReport),
}

impl EvalReport {
    /// The ranking metric: Pearson for regression, accuracy for
    /// classification.
    pub fn metric(&self) -> Option<f64> {
        match self {
            EvalReport::Regression(r) => r.pearson,
            EvalReport::Classification(c) => Some(c.accuracy),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            EvalReport::Regression(r) => r.n,
            EvalReport::Classification(c) => c.n,
        }
    }
}

/// Pearson product-moment correlation, computed around the means.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson needs paired samples");
    let n = x.len();
    if n == 0 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn regression_report(truth: &[f64], predicted: &[f64]) -> Result<RegressionReport, LearnError> {
    assert_eq!(truth.len(), predicted.len(), "regression_report needs paired samples");
    if truth.is_empty() {
        return Err(LearnError::EmptyTestSet);
    }
    let ssr: f64 = truth.iter().zip(predicted).map(|(y, p)| (y - p) * (y - p)).sum();
    let n = truth.len();
    Ok(RegressionReport { n, ssr, mse: ssr / n as f64, pearson: pearson(truth, predicted) })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_report(truth: &[String], predicted: &[String]) -> Result<ClassificationReport, LearnError> {
    assert_eq!(truth.len(), predicted.len(), "classification_report needs paired samples");
    if truth.is_empty() {
        return Err(LearnError::EmptyTestSet);
    }
    let labels: BTreeSet<&String> = truth.iter().chain(predicted).collect();
    let correct = truth.iter().zip(predicted).filter(|(t, p)| t == p).count();
    let per_label = labels
        .into_iter()
        .map(|label| {
            let tp = truth.iter().zip(predicted).filter(|(t, p)| *t == label && *p == label).count();
            let support = truth.iter().filter(|t| *t == label).count();
            let predicted_n = predicted.iter().filter(|p| *p == label).count();
            let precision = ratio(tp, predicted_n);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            LabelScores { label: label.clone(), precision, recall, f1, support }
        })
        .collect();
    Ok(ClassificationReport { n: truth.len(), accuracy: ratio(correct, truth.len()), per_label })
}
