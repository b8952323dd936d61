//! Confusion counts and accuracy / sensitivity / specificity, with FM-
//! (abnormal) as the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::FmLabel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
    /// Ratios with a zero denominator are `None`.
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn from_counts(tp: usize, fn_: usize, tn: usize, fp: usize) -> Self {
        Metrics {
            tp,
            fn_,
            tn,
            fp,
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
        }
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    pub fn total(&self) -> usize {
        self.positives() + self.negatives()
    }
}

/// Metrics over `(predicted, truth)` pairs.
pub fn compute_metrics(preds: &[(FmLabel, FmLabel)]) -> Result<Metrics> {
    if preds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mut tp, mut fn_, mut tn, mut fp) = (0, 0, 0, 0);
    for &(predicted, truth) in preds {
        match (predicted, truth) {
            (FmLabel::FmMinus, FmLabel::FmMinus) => tp += 1,
            (FmLabel::FmPlus, FmLabel::FmMinus) => fn_ += 1,
            (FmLabel::FmPlus, FmLabel::FmPlus) => tn += 1,
            (FmLabel::FmMinus, FmLabel::FmPlus) => fp += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fn_, tn, fp))
}
