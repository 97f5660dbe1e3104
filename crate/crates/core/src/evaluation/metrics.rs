use serde::{Deserialize, Serialize};

use super::EvalError;

/// Rows are gold labels, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_labels(gold: &[usize], pred: &[usize], k: usize) -> Result<Self, EvalError> {
        if gold.len() != pred.len() {
            return Err(EvalError::LengthMismatch {
                expected: gold.len(),
                got: pred.len(),
            });
        }
        let mut m = Self::new(k);
        for (&g, &p) in gold.iter().zip(pred) {
            m.add(g, p)?;
        }
        Ok(m)
    }

    pub fn add(&mut self, gold: usize, pred: usize) -> Result<(), EvalError> {
        if gold >= self.k || pred >= self.k {
            return Err(EvalError::LabelOutOfRange {
                label: gold.max(pred),
                k: self.k,
            });
        }
        self.counts[gold * self.k + pred] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.k, other.k, "confusion matrices of different sizes");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold * self.k + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|c| self.get(c, c)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScores>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Accuracy and macro-F1 over all `k` classes; 0/0 counts as 0, so classes
/// that never occur still enter the macro average with F1 = 0.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let k = cm.k();
    let per_class: Vec<ClassScores> = (0..k)
        .map(|c| {
            let tp = cm.get(c, c) as f64;
            let predicted: f64 = (0..k).map(|g| cm.get(g, c)).sum::<u64>() as f64;
            let actual: f64 = (0..k).map(|p| cm.get(c, p)).sum::<u64>() as f64;
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            ClassScores {
                precision,
                recall,
                f1: ratio(2.0 * precision * recall, precision + recall),
            }
        })
        .collect();
    Ok(Metrics {
        accuracy: cm.trace() as f64 / total as f64,
        macro_f1: per_class.iter().map(|c| c.f1).sum::<f64>() / k as f64,
        per_class,
    })
}

pub fn score_labels(gold: &[usize], pred: &[usize], k: usize) -> Result<Metrics, EvalError> {
    metrics(&ConfusionMatrix::from_labels(gold, pred, k)?)
}
