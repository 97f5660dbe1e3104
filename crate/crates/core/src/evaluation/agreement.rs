//! Inter-annotator agreement and annotator-versus-model scoring.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::score_labels;
use super::EvalError;
use crate::corpus::LabelSchema;

/// Items x raters matrix of level indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingsMatrix {
    k: usize,
    n_raters: usize,
    ratings: Vec<Vec<usize>>,
}

impl RatingsMatrix {
    pub fn new(ratings: Vec<Vec<usize>>, k: usize) -> Result<Self, EvalError> {
        let n_raters = ratings.first().map_or(0, Vec::len);
        if k < 2 || n_raters < 2 {
            return Err(EvalError::DegenerateInput(format!("{n_raters} raters, {k} levels")));
        }
        for row in &ratings {
            if row.len() != n_raters {
                return Err(EvalError::LengthMismatch {
                    expected: n_raters,
                    got: row.len(),
                });
            }
            if let Some(&bad) = row.iter().find(|&&r| r >= k) {
                return Err(EvalError::LabelOutOfRange { label: bad, k });
            }
        }
        Ok(Self { k, n_raters, ratings })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_raters(&self) -> usize {
        self.n_raters
    }

    pub fn n_items(&self) -> usize {
        self.ratings.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.ratings
    }

    /// Labels given by one rater, in item order.
    pub fn rater(&self, r: usize) -> Vec<usize> {
        self.ratings.iter().map(|row| row[r]).collect()
    }
}

/// Free-marginal multirater kappa with chance agreement `1/k`.
pub fn randolph_kappa(r: &RatingsMatrix) -> Result<f64, EvalError> {
    if r.n_items() == 0 {
        return Err(EvalError::DegenerateInput("no items".into()));
    }
    let n = r.n_raters as f64;
    let mut counts = vec![0usize; r.k];
    let mut p_o = 0.0;
    for row in &r.ratings {
        counts.iter_mut().for_each(|c| *c = 0);
        for &l in row {
            counts[l] += 1;
        }
        let agree: usize = counts.iter().map(|&c| c * c.saturating_sub(1)).sum();
        p_o += agree as f64 / (n * (n - 1.0));
    }
    p_o /= r.n_items() as f64;
    let p_e = 1.0 / r.k as f64;
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// A ratings file: gold labels plus the rater matrix for one category.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsFile {
    pub item_ids: Vec<String>,
    pub gold: Vec<usize>,
    pub ratings: RatingsMatrix,
    pub rater_names: Vec<String>,
}

impl RatingsFile {
    pub fn load(path: &Path, schema: &LabelSchema) -> Result<Self, EvalError> {
        let file = std::fs::File::open(path).map_err(|e| EvalError::Io(e.to_string()))?;
        Self::from_reader(file, schema)
    }

    /// Reads `item_id,gold,rater1,...,raterN` with level strings as cells.
    pub fn from_reader<R: std::io::Read>(reader: R, schema: &LabelSchema) -> Result<Self, EvalError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| EvalError::Io(e.to_string()))?.clone();
        if headers.len() < 4 || &headers[0] != "item_id" || &headers[1] != "gold" {
            return Err(EvalError::DegenerateInput(
                "ratings header must be item_id,gold,rater1,...,raterN with N >= 2".into(),
            ));
        }
        let rater_names = headers.iter().skip(2).map(String::from).collect();
        let parse = |cell: &str, row: usize| {
            schema.level_index(cell.trim()).ok_or_else(|| EvalError::UnknownLabel {
                row,
                value: cell.to_string(),
            })
        };
        let (mut item_ids, mut gold, mut rows) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| EvalError::Io(e.to_string()))?;
            item_ids.push(rec[0].to_string());
            gold.push(parse(&rec[1], i + 1)?);
            rows.push(rec.iter().skip(2).map(|c| parse(c, i + 1)).collect::<Result<Vec<_>, _>>()?);
        }
        Ok(Self {
            item_ids,
            gold,
            ratings: RatingsMatrix::new(rows, schema.len())?,
            rater_names,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub macro_f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorReport {
    pub annotators: Vec<ScoreRow>,
    /// Unweighted mean of the annotator rows.
    pub average: ScoreRow,
    pub model: ScoreRow,
    pub kappa: f64,
}

pub fn annotator_report(ratings: &RatingsMatrix, gold: &[usize], model_preds: &[usize]) -> Result<AnnotatorReport, EvalError> {
    let n = ratings.n_items();
    for len in [gold.len(), model_preds.len()] {
        if len != n {
            return Err(EvalError::LengthMismatch { expected: n, got: len });
        }
    }
    let score = |pred: &[usize]| -> Result<ScoreRow, EvalError> {
        let m = score_labels(gold, pred, ratings.k())?;
        Ok(ScoreRow {
            macro_f1: m.macro_f1,
            accuracy: m.accuracy,
        })
    };
    let annotators = (0..ratings.n_raters())
        .map(|r| score(&ratings.rater(r)))
        .collect::<Result<Vec<_>, _>>()?;
    let count = annotators.len() as f64;
    let average = ScoreRow {
        macro_f1: annotators.iter().map(|a| a.macro_f1).sum::<f64>() / count,
        accuracy: annotators.iter().map(|a| a.accuracy).sum::<f64>() / count,
    };
    Ok(AnnotatorReport {
        annotators,
        average,
        model: score(model_preds)?,
        kappa: randolph_kappa(ratings)?,
    })
}
