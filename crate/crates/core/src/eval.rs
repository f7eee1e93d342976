//! Per-label classification metrics and label-distribution diagnostics.
//!
//! Conventions:
//! - binarization uses `prob >= threshold` (default 0.5);
//! - F1 is undefined when a label has no positives in either prediction or
//!   truth, AUC when the truth column lacks a positive or a negative.
//!   Undefined values are `None` (JSON `null`) and are excluded from averages.
//! - Conditional diagnostics use pairs `(i, j)`, `i != j`, whose conditioning
//!   event `y_j = 1` occurs at least `min_support` times in the truth. If the
//!   prediction never activates `j`, its conditional is taken as 0.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::{classifier_forward, MlpParams};
use crate::data::Dataset;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MIN_SUPPORT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub threshold: f64,
    pub min_support: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            min_support: DEFAULT_MIN_SUPPORT,
        }
    }
}

pub fn binarize(probs: &Matrix, threshold: f64) -> Result<Matrix> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!("threshold {threshold} not in (0, 1)")));
    }
    Ok(probs.map(|p| if p >= threshold { 1.0 } else { 0.0 }))
}

fn confusion(pred: &[f64], truth: &[f64]) -> (usize, usize, usize, usize) {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == 1.0, t == 1.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    (tp, fp, fn_, tn)
}

/// Binary F1 of one label column; `None` when neither vector has a positive.
pub fn f1_score(pred: &[f64], truth: &[f64]) -> Option<f64> {
    debug_assert_eq!(pred.len(), truth.len());
    let (tp, fp, fn_, _) = confusion(pred, truth);
    if tp + fp + fn_ == 0 {
        return None;
    }
    Some(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

/// Fraction of matching entries.
pub fn accuracy(pred: &[f64], truth: &[f64]) -> f64 {
    debug_assert_eq!(pred.len(), truth.len());
    let (tp, _, _, tn) = confusion(pred, truth);
    (tp + tn) as f64 / pred.len() as f64
}

/// Rank-based (Mann–Whitney) AUC with tied scores sharing their mean rank.
pub fn auc(scores: &[f64], truth: &[f64]) -> Option<f64> {
    debug_assert_eq!(scores.len(), truth.len());
    let n_pos = truth.iter().filter(|&&t| t == 1.0).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share their mean.
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        let pos_in_tie = order[start..end].iter().filter(|&&i| truth[i] == 1.0).count();
        rank_sum_pos += mean_rank * pos_in_tie as f64;
        start = end;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDiff {
    pub pred: Vec<f64>,
    pub truth: Vec<f64>,
    pub abs_diff: Vec<f64>,
}

fn column_means(m: &Matrix) -> Vec<f64> {
    let n = m.rows() as f64;
    m.sum_rows().into_iter().map(|s| s / n).collect()
}

/// Per-label activation frequency in predictions and truth.
pub fn marginal_diff(pred_bin: &Matrix, truth: &Matrix) -> Result<MarginalDiff> {
    if pred_bin.shape() != truth.shape() {
        return Err(Error::dim("marginal_diff", pred_bin.shape(), truth.shape()));
    }
    let pred = column_means(pred_bin);
    let truth = column_means(truth);
    let abs_diff = pred.iter().zip(&truth).map(|(p, t)| (p - t).abs()).collect();
    Ok(MarginalDiff { pred, truth, abs_diff })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiff {
    /// Label whose activation is measured.
    pub i: usize,
    /// Conditioning label.
    pub j: usize,
    pub pred: f64,
    pub truth: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDiff {
    pub pairs: Vec<PairDiff>,
    pub skipped: Vec<(usize, usize)>,
    pub mean_abs_diff: Option<f64>,
}

/// `|P̂_pred(y_i=1 | y_j=1) - P̂_truth(y_i=1 | y_j=1)|` for every supported
/// ordered pair, and their mean.
pub fn conditional_diff(pred_bin: &Matrix, truth: &Matrix, min_support: usize) -> Result<ConditionalDiff> {
    if pred_bin.shape() != truth.shape() {
        return Err(Error::dim("conditional_diff", pred_bin.shape(), truth.shape()));
    }
    let l = truth.cols();
    let co_counts = |m: &Matrix| {
        let mut single = vec![0usize; l];
        let mut joint = vec![0usize; l * l];
        for row in m.row_iter() {
            for j in 0..l {
                if row[j] == 1.0 {
                    single[j] += 1;
                    for i in 0..l {
                        if row[i] == 1.0 {
                            joint[i * l + j] += 1;
                        }
                    }
                }
            }
        }
        (single, joint)
    };
    let (t_single, t_joint) = co_counts(truth);
    let (p_single, p_joint) = co_counts(pred_bin);
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..l {
        for j in 0..l {
            if i == j {
                continue;
            }
            if t_single[j] < min_support.max(1) {
                skipped.push((i, j));
                continue;
            }
            let truth_c = t_joint[i * l + j] as f64 / t_single[j] as f64;
            let pred_c = if p_single[j] == 0 {
                0.0
            } else {
                p_joint[i * l + j] as f64 / p_single[j] as f64
            };
            pairs.push(PairDiff {
                i,
                j,
                pred: pred_c,
                truth: truth_c,
                abs_diff: (pred_c - truth_c).abs(),
            });
        }
    }
    let mean_abs_diff = mean(pairs.iter().map(|p| p.abs_diff));
    Ok(ConditionalDiff { pairs, skipped, mean_abs_diff })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Everything reported for one evaluation. Field names are part of the JSON
/// output format and must not change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub num_samples: usize,
    pub threshold: f64,
    pub min_support: usize,
    pub per_label_f1: Vec<Option<f64>>,
    pub per_label_auc: Vec<Option<f64>>,
    pub per_label_accuracy: Vec<f64>,
    pub avg_f1: Option<f64>,
    pub avg_auc: Option<f64>,
    pub avg_accuracy: f64,
    pub marginal_pred: Vec<f64>,
    pub marginal_truth: Vec<f64>,
    pub marginal_abs_diff: Vec<f64>,
    pub marginal_abs_diff_mean: f64,
    pub conditional_abs_diff_mean: Option<f64>,
    pub conditional_pairs: Vec<PairDiff>,
    pub conditional_pairs_skipped: usize,
}

impl MetricsReport {
    /// Builds the report from predicted probabilities and true labels.
    pub fn from_probs(probs: &Matrix, truth: &Matrix, opts: &EvalOptions) -> Result<Self> {
        if probs.shape() != truth.shape() {
            return Err(Error::dim("evaluate", probs.shape(), truth.shape()));
        }
        if probs.rows() == 0 {
            return Err(Error::Domain("cannot evaluate zero samples".into()));
        }
        let pred = binarize(probs, opts.threshold)?;
        let l = truth.cols();
        let mut per_label_f1 = Vec::with_capacity(l);
        let mut per_label_auc = Vec::with_capacity(l);
        let mut per_label_accuracy = Vec::with_capacity(l);
        for k in 0..l {
            let (p, t, s) = (pred.column_values(k), truth.column_values(k), probs.column_values(k));
            per_label_f1.push(f1_score(&p, &t));
            per_label_auc.push(auc(&s, &t));
            per_label_accuracy.push(accuracy(&p, &t));
        }
        let marg = marginal_diff(&pred, truth)?;
        let cond = conditional_diff(&pred, truth, opts.min_support)?;
        Ok(Self {
            num_samples: probs.rows(),
            threshold: opts.threshold,
            min_support: opts.min_support,
            avg_f1: mean(per_label_f1.iter().flatten().copied()),
            avg_auc: mean(per_label_auc.iter().flatten().copied()),
            avg_accuracy: mean(per_label_accuracy.iter().copied()).unwrap_or(f64::NAN),
            per_label_f1,
            per_label_auc,
            per_label_accuracy,
            marginal_abs_diff_mean: mean(marg.abs_diff.iter().copied()).unwrap_or(0.0),
            marginal_pred: marg.pred,
            marginal_truth: marg.truth,
            marginal_abs_diff: marg.abs_diff,
            conditional_abs_diff_mean: cond.mean_abs_diff,
            conditional_pairs: cond.pairs,
            conditional_pairs_skipped: cond.skipped.len(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Runs the classifier over every row of `dataset` and scores it against the
/// true labels (hidden ones included).
pub fn evaluate(params: &MlpParams, dataset: &Dataset, threshold: f64) -> Result<MetricsReport> {
    evaluate_with(params, dataset, &EvalOptions { threshold, ..EvalOptions::default() })
}

pub fn evaluate_with(params: &MlpParams, dataset: &Dataset, opts: &EvalOptions) -> Result<MetricsReport> {
    let probs = classifier_forward(params, &dataset.features)?;
    MetricsReport::from_probs(&probs, &dataset.labels, opts)
}
