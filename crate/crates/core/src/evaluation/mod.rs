//! Metrics, cross-validation, ablation grid, mixed-system selection and
//! annotator agreement.

mod agreement;
mod metrics;
pub mod tables;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

pub use agreement::{annotator_report, randolph_kappa, AnnotatorReport, RatingsFile, RatingsMatrix, ScoreRow};
pub use metrics::{metrics, score_labels, ClassScores, ConfusionMatrix, Metrics};

use crate::corpus::{kfold, Category};
use crate::pipeline::{self, FitObserver, PipelineConfig, PreparedCorpus, Probe, Resources};
use crate::seed::derive_seed;
use crate::Error;

#[derive(Debug, ThisError)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("expected {expected} labels, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("model `{model}` has no score for {category}")]
    MissingScore { model: String, category: Category },
    #[error("row {row}: unknown label `{value}`")]
    UnknownLabel { row: usize, value: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub macro_f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub category: Category,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldScore>,
    pub mean: ScoreRow,
    /// Population standard deviation across folds.
    pub std: ScoreRow,
    /// Test-fold confusion counts summed over folds.
    pub confusion: ConfusionMatrix,
}

impl CvReport {
    fn from_folds(category: Category, k: usize, seed: u64, folds: Vec<FoldScore>, confusion: ConfusionMatrix) -> Self {
        let n = folds.len() as f64;
        let mean_of = |f: fn(&FoldScore) -> f64| folds.iter().map(f).sum::<f64>() / n;
        let mean = ScoreRow {
            macro_f1: mean_of(|s| s.macro_f1),
            accuracy: mean_of(|s| s.accuracy),
        };
        let sd_of = |f: fn(&FoldScore) -> f64, m: f64| (folds.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / n).sqrt();
        let std = ScoreRow {
            macro_f1: sd_of(|s| s.macro_f1, mean.macro_f1),
            accuracy: sd_of(|s| s.accuracy, mean.accuracy),
        };
        Self {
            category,
            k,
            seed,
            folds,
            mean,
            std,
            confusion,
        }
    }

    /// Recall of each class over the pooled test predictions.
    pub fn recall(&self) -> Vec<f64> {
        match metrics(&self.confusion) {
            Ok(m) => m.per_class.iter().map(|c| c.recall).collect(),
            Err(_) => vec![0.0; self.confusion.k()],
        }
    }
}

/// Execution options for cross-validation.
#[derive(Clone, Copy, Default)]
pub struct CvOptions<'a> {
    /// Maximum folds trained concurrently; 0 or 1 runs sequentially.
    pub jobs: usize,
    pub observer: Option<&'a dyn FitObserver>,
}

/// Stratified k-fold cross-validation of the pipeline on one category.
/// Fold `f` trains with seed `derive_seed(seed, f)`, so results do not depend
/// on scheduling.
pub fn cross_validate(
    corpus: &PreparedCorpus,
    category: Category,
    cfg: &PipelineConfig,
    res: &Resources,
    k: usize,
    seed: u64,
    opts: CvOptions<'_>,
) -> Result<CvReport, Error> {
    let folds = kfold(&corpus.dataset, k, category, seed)?;
    let n_classes = corpus.dataset.schema(category).len();
    let run_fold = |(f, fold): (usize, &crate::corpus::Fold)| -> Result<(FoldScore, ConfusionMatrix), Error> {
        let probe = opts.observer.map(|observer| Probe { fold: f, observer });
        let trained = pipeline::train(corpus, &fold.train, category, cfg, res, derive_seed(seed, f as u64), probe)?;
        let test: Vec<_> = fold.test.iter().map(|&i| &corpus.samples[i]).collect();
        let pred = trained.predict(&test)?;
        let gold: Vec<usize> = fold.test.iter().map(|&i| corpus.dataset.samples[i].label(category)).collect();
        let cm = ConfusionMatrix::from_labels(&gold, &pred, n_classes)?;
        let m = metrics(&cm)?;
        Ok((
            FoldScore {
                macro_f1: m.macro_f1,
                accuracy: m.accuracy,
            },
            cm,
        ))
    };
    let results: Vec<Result<(FoldScore, ConfusionMatrix), Error>> = if opts.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| folds.par_iter().enumerate().map(run_fold).collect())
    } else {
        folds.iter().enumerate().map(run_fold).collect()
    };
    let mut scores = Vec::with_capacity(k);
    let mut pooled = ConfusionMatrix::new(n_classes);
    for r in results {
        let (s, cm) = r?;
        scores.push(s);
        pooled.merge(&cm);
    }
    Ok(CvReport::from_folds(category, k, seed, scores, pooled))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AblationFlags {
    pub balanced: bool,
    pub augmentation: bool,
    pub image_features: bool,
}

impl AblationFlags {
    /// Row order of the ablation table.
    pub const TABLE_ORDER: [AblationFlags; 8] = [
        Self::of(false, false, false),
        Self::of(true, false, false),
        Self::of(false, true, false),
        Self::of(false, false, true),
        Self::of(true, true, false),
        Self::of(true, false, true),
        Self::of(false, true, true),
        Self::of(true, true, true),
    ];

    const fn of(balanced: bool, augmentation: bool, image_features: bool) -> Self {
        Self {
            balanced,
            augmentation,
            image_features,
        }
    }

    /// Components added on top of the TFIDF + dense text base.
    pub fn added(&self) -> Vec<&'static str> {
        [
            (self.balanced, "balanced training"),
            (self.augmentation, "augmentation"),
            (self.image_features, "image features"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }

    pub fn label(&self) -> String {
        std::iter::once("TFIDF word (1,2)-gram + dense text features")
            .chain(self.added())
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Applies the flags on top of the base configuration.
    pub fn configure(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut cfg = base.clone();
        cfg.features.tfidf = true;
        cfg.features.stylistic = true;
        cfg.features.ambiguity = true;
        cfg.features.image = self.image_features;
        cfg.features.emotion = self.image_features;
        cfg.rebalance.balanced = self.balanced;
        cfg.rebalance.augment = self.augmentation;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub category: Category,
    pub mean: ScoreRow,
    pub std: ScoreRow,
    pub recall: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub flags: AblationFlags,
    pub label: String,
    pub cells: Vec<AblationCell>,
}

/// Cross-validates all eight combinations of balanced training, augmentation
/// and image features for each category.
pub fn ablation(
    corpus: &PreparedCorpus,
    categories: &[Category],
    base: &PipelineConfig,
    res: &Resources,
    k: usize,
    seed: u64,
    opts: CvOptions<'_>,
) -> Result<Vec<AblationRow>, Error> {
    AblationFlags::TABLE_ORDER
        .iter()
        .map(|flags| {
            let cfg = flags.configure(base);
            let cells = categories
                .iter()
                .map(|&cat| {
                    let r = cross_validate(corpus, cat, &cfg, res, k, seed, opts)?;
                    Ok(AblationCell {
                        category: cat,
                        recall: r.recall(),
                        mean: r.mean,
                        std: r.std,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(AblationRow {
                flags: *flags,
                label: flags.label(),
                cells,
            })
        })
        .collect()
}

/// Category → chosen model name.
pub type MixedSystemPlan = BTreeMap<Category, String>;

/// Picks the model with the highest macro-F1 per category; on ties the
/// lexicographically smallest model name wins.
pub fn select_best(scores: &BTreeMap<String, BTreeMap<Category, f64>>) -> Result<MixedSystemPlan, EvalError> {
    let categories: std::collections::BTreeSet<Category> =
        scores.values().flat_map(|m| m.keys().copied()).collect();
    let mut plan = MixedSystemPlan::new();
    for cat in categories {
        let mut best: Option<(&str, f64)> = None;
        for (model, per_cat) in scores {
            let s = *per_cat.get(&cat).ok_or_else(|| EvalError::MissingScore {
                model: model.clone(),
                category: cat,
            })?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((model, s));
            }
        }
        if let Some((m, _)) = best {
            plan.insert(cat, m.to_string());
        }
    }
    Ok(plan)
}
