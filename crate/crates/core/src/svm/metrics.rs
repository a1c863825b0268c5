use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::average_ranks;

/// Binary metrics with +1 as the positive class. Degenerate ratios map to 0;
/// the ranking metrics are `None` when they are undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    /// Mean recall over the classes present in `y_true`.
    pub balanced_accuracy: f64,
    pub f1: f64,
    pub mcc: f64,
    /// Undefined unless both classes are present.
    pub roc_auc: Option<f64>,
    /// Average precision; undefined without positives.
    pub pr_auc: Option<f64>,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

pub fn compute_metrics(y_true: &[i8], y_pred: &[i8], scores: &[f64]) -> Result<MetricBundle> {
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("metrics of an empty fold".into()));
    }
    if y_true.len() != y_pred.len() || y_true.len() != scores.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels, {} predictions, {} scores",
            y_true.len(),
            y_pred.len(),
            scores.len()
        )));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == 1, p == 1) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
        }
    }
    let pos = tp + fn_;
    let neg = tn + fp;
    let mut recalls = Vec::with_capacity(2);
    if pos > 0 {
        recalls.push(tp as f64 / pos as f64);
    }
    if neg > 0 {
        recalls.push(tn as f64 / neg as f64);
    }
    let balanced_accuracy = recalls.iter().sum::<f64>() / recalls.len() as f64;
    let f1_den = 2 * tp + fp + fn_;
    let f1 = if f1_den == 0 { 0.0 } else { 2.0 * tp as f64 / f1_den as f64 };
    let (tpf, tnf, fpf, fnf) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
    let mcc_den = ((tpf + fpf) * (tpf + fnf) * (tnf + fpf) * (tnf + fnf)).sqrt();
    let mcc = if mcc_den == 0.0 { 0.0 } else { ((tpf * tnf - fpf * fnf) / mcc_den).clamp(-1.0, 1.0) };

    Ok(MetricBundle {
        balanced_accuracy,
        f1,
        mcc,
        roc_auc: roc_auc(y_true, scores),
        pr_auc: average_precision(y_true, scores),
        tp,
        tn,
        fp,
        fn_,
    })
}

/// Mann-Whitney U / (n_pos·n_neg) with mid-ranks for tied scores.
fn roc_auc(y: &[i8], scores: &[f64]) -> Option<f64> {
    let n_pos = y.iter().filter(|&&v| v == 1).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let (ranks, _) = average_ranks(scores);
    let r_pos: f64 = y.iter().zip(&ranks).filter(|(&v, _)| v == 1).map(|(_, r)| r).sum();
    let u = r_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Σ (R_k − R_{k−1})·P_k over descending distinct score thresholds.
fn average_precision(y: &[i8], scores: &[f64]) -> Option<f64> {
    let n_pos = y.iter().filter(|&&v| v == 1).count();
    if n_pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap, mut prev_recall) = (0usize, 0usize, 0.0, 0.0);
    let mut idx = 0;
    while idx < order.len() {
        let s = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == s {
            if y[order[idx]] == 1 {
                tp += 1;
            }
            seen += 1;
            idx += 1;
        }
        let recall = tp as f64 / n_pos as f64;
        ap += (recall - prev_recall) * (tp as f64 / seen as f64);
        prev_recall = recall;
    }
    Some(ap)
}
