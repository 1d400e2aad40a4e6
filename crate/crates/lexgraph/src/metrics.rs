//! Classification and ranking metrics: binary confusion counts, per-class
//! and macro precision/recall/F1, ROC curves and trapezoid AUC.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no examples to score")]
    EmptyInput,
    #[error("labels and predictions differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("ROC needs both classes present")]
    OneClassOnly,
}

/// Binary confusion counts with class 1 as positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(labels: &[u8], preds: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&y, &p) in labels.iter().zip(preds) {
            match (y, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (0, 0) => c.tn += 1,
                (1, 0) => c.fn_ += 1,
                _ => unreachable!("labels and predictions are binary"),
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Precision/recall/F1 for one class, with 0/0 defined as 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn prf(tp: usize, fp: usize, fn_: usize) -> ClassPrf {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassPrf {
        precision,
        recall,
        f1,
    }
}

/// Per-class and macro-averaged precision/recall/F1 over the two classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroPrf {
    pub class0: ClassPrf,
    pub class1: ClassPrf,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub confusion: Confusion,
}

/// Macro precision/recall/F1. Both classes always contribute to the macro
/// average, even when one is absent from a bucket (it then contributes 0).
pub fn macro_prf(labels: &[u8], preds: &[u8]) -> Result<MacroPrf, MetricsError> {
    if labels.len() != preds.len() {
        return Err(MetricsError::LengthMismatch(labels.len(), preds.len()));
    }
    if labels.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let c = Confusion::from_pairs(labels, preds);
    let class1 = prf(c.tp, c.fp, c.fn_);
    // Class 0 as positive swaps the roles of the counts.
    let class0 = prf(c.tn, c.fn_, c.fp);
    Ok(MacroPrf {
        class0,
        class1,
        macro_precision: (class0.precision + class1.precision) / 2.0,
        macro_recall: (class0.recall + class1.recall) / 2.0,
        macro_f1: (class0.f1 + class1.f1) / 2.0,
        confusion: c,
    })
}

/// One ROC operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve from (0,0) to (1,1) with trapezoid-rule AUC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweep thresholds over the distinct scores descending, grouping ties at
/// one threshold.
pub fn roc(scores: &[f64], labels: &[u8]) -> Result<RocCurve, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(scores.len(), labels.len()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::OneClassOnly);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
    }
    Ok(RocCurve { points, auc })
}
