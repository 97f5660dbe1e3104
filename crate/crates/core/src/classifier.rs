//! L2-regularised multinomial logistic regression trained by full-batch
//! gradient descent with backtracking.
//!
//! The objective for weights `W` (k x d), bias `b` and sample weights `w_i` is
//!
//! ```text
//! L = (1 / sum_i w_i) * sum_i w_i * -log softmax(W x_i + b)[y_i] + (lambda / 2) * |W|_F^2
//! ```
//!
//! The bias is not penalised. Training starts from zero and is fully
//! deterministic; all sums run in row order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("training labels contain fewer than two classes")]
    SingleClass,
    #[error("loss became non-finite")]
    NonFiniteLoss,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

/// Row-compressed feature matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, ClassifierError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::new(n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(ClassifierError::ShapeMismatch(format!(
                    "ragged rows: {} vs {}",
                    r.len(),
                    n_cols
                )));
            }
            m.push_row(r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, &v)| (j, v)))?;
        }
        Ok(m)
    }

    /// Appends a row given as `(column, value)` pairs in increasing column order.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<(), ClassifierError> {
        let start = self.col_idx.len();
        for (j, v) in entries {
            if j >= self.n_cols || self.col_idx[start..].last().is_some_and(|&p| p >= j) {
                self.col_idx.truncate(start);
                self.values.truncate(start);
                return Err(ClassifierError::ShapeMismatch(format!(
                    "column {j} out of order or beyond {} columns",
                    self.n_cols
                )));
            }
            self.col_idx.push(j);
            self.values.push(v);
        }
        self.row_ptr.push(self.col_idx.len());
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        let (cols, vals) = self.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            out[j] = v;
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.dense_row(i)).collect()
    }
}

/// Weight matrix (row-major, one row per class) and bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub k: usize,
    pub d: usize,
    #[serde(rename = "W")]
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(k: usize, d: usize) -> Self {
        Self {
            k,
            d,
            w: vec![0.0; k * d],
            b: vec![0.0; k],
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.w.iter().map(|x| x * x).sum()
    }

    fn scores(&self, cols: &[usize], vals: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let row = &self.w[c * self.d..(c + 1) * self.d];
            *o = self.b[c] + cols.iter().zip(vals).map(|(&j, &v)| row[j] * v).sum::<f64>();
        }
    }

    fn axpy(&self, step: f64, grad: &Gradient) -> Self {
        Self {
            k: self.k,
            d: self.d,
            w: self.w.iter().zip(&grad.w).map(|(a, g)| a - step * g).collect(),
            b: self.b.iter().zip(&grad.b).map(|(a, g)| a - step * g).collect(),
        }
    }
}

/// In-place softmax; returns log-sum-exp of the input scores.
fn softmax_in_place(s: &mut [f64]) -> f64 {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = s.iter().map(|x| (x - max).exp()).sum();
    let lse = max + sum.ln();
    s.iter_mut().for_each(|x| *x = (*x - lse).exp());
    lse
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

fn check_inputs(
    params: &LinearParams,
    x: &FeatureMatrix,
    y: &[usize],
    weights: &[f64],
    lambda: f64,
) -> Result<f64, ClassifierError> {
    let n = x.n_rows();
    if params.d != x.n_cols() || params.w.len() != params.k * params.d || params.b.len() != params.k {
        return Err(ClassifierError::ShapeMismatch(format!(
            "params {}x{} vs {} feature columns",
            params.k,
            params.d,
            x.n_cols()
        )));
    }
    if y.len() != n || weights.len() != n {
        return Err(ClassifierError::ShapeMismatch(format!(
            "{n} rows, {} labels, {} weights",
            y.len(),
            weights.len()
        )));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= params.k) {
        return Err(ClassifierError::ShapeMismatch(format!("label {bad} with {} classes", params.k)));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(ClassifierError::NonFiniteInput(format!("lambda {lambda}")));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(ClassifierError::NonFiniteInput("sample weights must be finite and >= 0".into()));
    }
    if x.values.iter().chain(&params.w).chain(&params.b).any(|v| !v.is_finite()) {
        return Err(ClassifierError::NonFiniteInput("features or parameters".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(ClassifierError::NonFiniteInput("sample weights sum to zero".into()));
    }
    Ok(total)
}

fn objective_unchecked(params: &LinearParams, x: &FeatureMatrix, y: &[usize], weights: &[f64], total: f64, lambda: f64) -> f64 {
    let mut s = vec![0.0; params.k];
    let mut data = 0.0;
    for i in 0..x.n_rows() {
        let (cols, vals) = x.row(i);
        params.scores(cols, vals, &mut s);
        let y_score = s[y[i]];
        let lse = softmax_in_place(&mut s);
        data += weights[i] * (lse - y_score);
    }
    data / total + 0.5 * lambda * params.frobenius_sq()
}

/// Objective value only.
pub fn loss(params: &LinearParams, x: &FeatureMatrix, y: &[usize], weights: &[f64], lambda: f64) -> Result<f64, ClassifierError> {
    let total = check_inputs(params, x, y, weights, lambda)?;
    Ok(objective_unchecked(params, x, y, weights, total, lambda))
}

/// Objective value and its exact gradient.
pub fn loss_and_gradient(
    params: &LinearParams,
    x: &FeatureMatrix,
    y: &[usize],
    weights: &[f64],
    lambda: f64,
) -> Result<(f64, Gradient), ClassifierError> {
    let total = check_inputs(params, x, y, weights, lambda)?;
    let (k, d) = (params.k, params.d);
    let mut grad = Gradient {
        w: vec![0.0; k * d],
        b: vec![0.0; k],
    };
    let mut s = vec![0.0; k];
    let mut data = 0.0;
    for i in 0..x.n_rows() {
        let (cols, vals) = x.row(i);
        params.scores(cols, vals, &mut s);
        let y_score = s[y[i]];
        let lse = softmax_in_place(&mut s);
        let wi = weights[i] / total;
        data += weights[i] * (lse - y_score);
        for c in 0..k {
            let r = wi * (s[c] - if c == y[i] { 1.0 } else { 0.0 });
            grad.b[c] += r;
            let g = &mut grad.w[c * d..(c + 1) * d];
            for (&j, &v) in cols.iter().zip(vals) {
                g[j] += r * v;
            }
        }
    }
    for (g, w) in grad.w.iter_mut().zip(&params.w) {
        *g += lambda * w;
    }
    Ok((data / total + 0.5 * lambda * params.frobenius_sq(), grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the relative loss decrease of an accepted step falls below this.
    pub tol: f64,
    /// Per-class loss weights; uniform when absent.
    pub class_weights: Option<Vec<f64>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            learning_rate: 1.0,
            max_iters: 500,
            tol: 1e-6,
            class_weights: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.to_string()));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be finite and >= 0");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be >= 1");
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad("tol must be > 0");
        }
        Ok(())
    }
}

pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LRModel {
    pub k: usize,
    pub d: usize,
    #[serde(rename = "W")]
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub config: TrainConfig,
    pub final_loss: f64,
    /// Objective at the start and after every accepted step.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl LRModel {
    pub fn params(&self) -> LinearParams {
        LinearParams {
            k: self.k,
            d: self.d,
            w: self.w.clone(),
            b: self.b.clone(),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        if x.len() != self.d {
            return Err(ClassifierError::ShapeMismatch(format!("{} features, model expects {}", x.len(), self.d)));
        }
        let cols: Vec<usize> = (0..self.d).collect();
        Ok(self.proba_sparse(&cols, x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, ClassifierError> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    /// Probabilities for row `i` of a matrix with the model's column count.
    pub fn predict_proba_row(&self, x: &FeatureMatrix, i: usize) -> Result<Vec<f64>, ClassifierError> {
        if x.n_cols() != self.d {
            return Err(ClassifierError::ShapeMismatch(format!("{} features, model expects {}", x.n_cols(), self.d)));
        }
        let (cols, vals) = x.row(i);
        Ok(self.proba_sparse(cols, vals))
    }

    pub fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<usize>, ClassifierError> {
        (0..x.n_rows()).map(|i| self.predict_proba_row(x, i).map(|p| argmax(&p))).collect()
    }

    fn proba_sparse(&self, cols: &[usize], vals: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.k];
        for (c, o) in s.iter_mut().enumerate() {
            let row = &self.w[c * self.d..(c + 1) * self.d];
            *o = self.b[c] + cols.iter().zip(vals).map(|(&j, &v)| row[j] * v).sum::<f64>();
        }
        softmax_in_place(&mut s);
        s
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub fn fit(x: &FeatureMatrix, y: &[usize], k: usize, cfg: &TrainConfig) -> Result<LRModel, ClassifierError> {
    let weights = match &cfg.class_weights {
        Some(cw) => {
            if cw.len() != k {
                return Err(ClassifierError::ShapeMismatch(format!("{} class weights for {k} classes", cw.len())));
            }
            y.iter().map(|&c| cw.get(c).copied().unwrap_or(0.0)).collect()
        }
        None => vec![1.0; y.len()],
    };
    fit_weighted(x, y, k, &weights, cfg)
}

/// Gradient descent with step halving. Each iteration starts from twice the
/// previously accepted step (capped at the learning rate) and halves until
/// the objective does not increase.
pub fn fit_weighted(
    x: &FeatureMatrix,
    y: &[usize],
    k: usize,
    weights: &[f64],
    cfg: &TrainConfig,
) -> Result<LRModel, ClassifierError> {
    cfg.validate()?;
    if x.n_cols() == 0 {
        return Err(ClassifierError::ShapeMismatch("no feature columns".into()));
    }
    let mut seen = vec![false; k];
    for &c in y {
        if c >= k {
            return Err(ClassifierError::ShapeMismatch(format!("label {c} with {k} classes")));
        }
        seen[c] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(ClassifierError::SingleClass);
    }
    let total = check_inputs(&LinearParams::zeros(k, x.n_cols()), x, y, weights, cfg.lambda)?;

    let mut params = LinearParams::zeros(k, x.n_cols());
    let mut current = objective_unchecked(&params, x, y, weights, total, cfg.lambda);
    if !current.is_finite() {
        return Err(ClassifierError::NonFiniteLoss);
    }
    let mut trace = vec![current];
    let mut step = cfg.learning_rate;
    for _ in 0..cfg.max_iters {
        let (_, grad) = loss_and_gradient(&params, x, y, weights, cfg.lambda)?;
        let mut s = step;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = params.axpy(s, &grad);
            let l = objective_unchecked(&cand, x, y, weights, total, cfg.lambda);
            if l.is_finite() && l <= current {
                accepted = Some((cand, l));
                break;
            }
            s *= 0.5;
        }
        let Some((cand, l)) = accepted else { break };
        let rel = (current - l) / current.abs().max(f64::MIN_POSITIVE);
        params = cand;
        current = l;
        trace.push(l);
        if rel < cfg.tol {
            break;
        }
        step = (2.0 * s).min(cfg.learning_rate);
    }
    Ok(LRModel {
        k,
        d: params.d,
        w: params.w,
        b: params.b,
        config: cfg.clone(),
        final_loss: current,
        trace,
    })
}
