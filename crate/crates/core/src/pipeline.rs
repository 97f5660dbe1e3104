//! Feature assembly and per-split training.
//!
//! Per-sample features that need no fitting (clean tokens, stylistic counts,
//! synset statistics, image statistics) are computed once in [`prepare`].
//! Everything fitted (augmentation, TFIDF vocabulary, dense standardisation,
//! SMOTE, the classifier) is computed by [`train`] from training indices only.

use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::classifier::{self, FeatureMatrix, LRModel, TrainConfig};
use crate::corpus::{Category, Dataset};
use crate::image::{self, EmotionTable, ImageFeatureVector, PixelGrid};
use crate::rebalance::{self, AugmentConfig, ParaphraseLexicon, SmoteConfig, TrainingRecord};
use crate::seed::derive_seed;
use crate::text::{
    self, AmbiguityFeatures, CleanText, PosLexicon, StylisticFeatures, SynonymLexicon, TfidfModel,
};
use crate::Error;

/// Lexicons and lookup tables used during feature extraction.
#[derive(Debug, Clone)]
pub struct Resources {
    pub pos: PosLexicon,
    pub synonyms: SynonymLexicon,
    pub paraphrases: ParaphraseLexicon,
    pub emotions: EmotionTable,
}

impl Default for Resources {
    fn default() -> Self {
        Self {
            pos: PosLexicon::bundled(),
            synonyms: SynonymLexicon::bundled(),
            paraphrases: ParaphraseLexicon::bundled(),
            emotions: EmotionTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSample {
    pub tokens: CleanText,
    pub stylistic: StylisticFeatures,
    pub ambiguity: AmbiguityFeatures,
    pub image: ImageFeatureVector,
}

#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub dataset: Dataset,
    pub samples: Vec<PreparedSample>,
}

pub fn prepare_sample(
    text_raw: &str,
    id: &str,
    image_path: Option<&PathBuf>,
    res: &Resources,
) -> Result<PreparedSample, Error> {
    let tokens = text::preprocess(text_raw);
    let tags = text::pos_tag(&tokens, &res.pos);
    let stylistic = text::stylistic_features(&tokens, &tags)?;
    let ambiguity = text::ambiguity_features(&tokens, &res.synonyms);
    let grid = image_path.map(|p| PixelGrid::load(p)).transpose()?;
    let emotion = image::attach_emotion(&res.emotions, id);
    Ok(PreparedSample {
        tokens,
        stylistic,
        ambiguity,
        image: image::image_features(grid.as_ref(), &emotion),
    })
}

pub fn prepare(dataset: Dataset, res: &Resources) -> Result<PreparedCorpus, Error> {
    let samples = dataset
        .samples
        .iter()
        .map(|s| prepare_sample(&s.text, &s.id, s.image.as_ref(), res))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PreparedCorpus { dataset, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub tfidf: bool,
    pub stylistic: bool,
    pub ambiguity: bool,
    pub image: bool,
    pub emotion: bool,
    pub min_df: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            tfidf: true,
            stylistic: true,
            ambiguity: true,
            image: true,
            emotion: true,
            min_df: 1,
        }
    }
}

impl FeatureConfig {
    /// Names of the dense columns, in assembly order.
    pub fn dense_names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.stylistic {
            out.extend(StylisticFeatures::NAMES);
        }
        if self.ambiguity {
            out.extend(AmbiguityFeatures::NAMES);
        }
        if self.image {
            out.extend(&ImageFeatureVector::NAMES[..ImageFeatureVector::PIXEL_DIM]);
        }
        if self.emotion {
            out.extend(&ImageFeatureVector::NAMES[ImageFeatureVector::PIXEL_DIM..]);
        }
        out
    }

    pub fn dense(&self, s: &PreparedSample) -> Vec<f64> {
        let mut out = Vec::new();
        if self.stylistic {
            out.extend(s.stylistic.to_array());
        }
        if self.ambiguity {
            out.extend(s.ambiguity.to_array());
        }
        let img = s.image.to_array();
        if self.image {
            out.extend(&img[..ImageFeatureVector::PIXEL_DIM]);
        }
        if self.emotion {
            out.extend(&img[ImageFeatureVector::PIXEL_DIM..]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RebalanceConfig {
    pub balanced: bool,
    pub smote: bool,
    pub smote_k: usize,
    /// Measure SMOTE neighbour distances on the dense block only.
    pub smote_dense_only: bool,
    pub augment: bool,
    pub p_replace: f64,
    pub copies: usize,
}

impl Default for RebalanceConfig {
    fn default() -> Self {
        Self {
            balanced: true,
            smote: false,
            smote_k: 5,
            smote_dense_only: false,
            augment: true,
            p_replace: 0.5,
            copies: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub rebalance: RebalanceConfig,
    pub train: TrainConfig,
}

/// Per-column z-scores; zero-variance columns are only centred.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]], dim: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(*r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(*r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}

/// Fitted statistics whose training rows are reported to a [`FitObserver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FittedStat {
    Augmentation,
    Tfidf,
    Standardizer,
    Smote,
    Classifier,
}

/// Receives the corpus indices behind every fitted statistic.
pub trait FitObserver: Sync {
    fn fitted(&self, fold: usize, stat: FittedStat, sources: &[usize]);
}

/// Where a training run reports to.
#[derive(Clone, Copy)]
pub struct Probe<'a> {
    pub fold: usize,
    pub observer: &'a dyn FitObserver,
}

impl Probe<'_> {
    fn emit(probe: Option<Probe<'_>>, stat: FittedStat, sources: impl Fn() -> Vec<usize>) {
        if let Some(p) = probe {
            p.observer.fitted(p.fold, stat, &sources());
        }
    }
}

/// Everything needed to featurize and classify unseen samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub category: Category,
    pub features: FeatureConfig,
    pub tfidf: Option<TfidfModel>,
    pub scaler: Standardizer,
}

impl Featurizer {
    pub fn tfidf_dim(&self) -> usize {
        self.tfidf.as_ref().map_or(0, TfidfModel::dim)
    }

    pub fn dim(&self) -> usize {
        self.tfidf_dim() + self.scaler.mean.len()
    }

    pub fn dense_columns(&self) -> Range<usize> {
        self.tfidf_dim()..self.dim()
    }

    fn push_row(&self, m: &mut FeatureMatrix, tokens: &CleanText, dense: &[f64]) -> Result<(), Error> {
        let offset = self.tfidf_dim();
        let sparse = self.tfidf.as_ref().map(|t| t.transform(tokens)).unwrap_or_default();
        let scaled = self.scaler.apply(dense);
        let entries = sparse
            .indices
            .into_iter()
            .zip(sparse.values)
            .chain(scaled.into_iter().enumerate().map(|(j, v)| (offset + j, v)));
        m.push_row(entries)?;
        Ok(())
    }

    pub fn matrix(&self, samples: &[&PreparedSample]) -> Result<FeatureMatrix, Error> {
        let mut m = FeatureMatrix::new(self.dim());
        for s in samples {
            self.push_row(&mut m, &s.tokens, &self.features.dense(s))?;
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPipeline {
    pub featurizer: Featurizer,
    pub model: LRModel,
}

impl TrainedPipeline {
    pub fn predict(&self, samples: &[&PreparedSample]) -> Result<Vec<usize>, Error> {
        let x = self.featurizer.matrix(samples)?;
        Ok(self.model.predict_all(&x)?)
    }
}

/// Fits the whole pipeline on `train_idx` of `corpus` for one category.
pub fn train(
    corpus: &PreparedCorpus,
    train_idx: &[usize],
    category: Category,
    cfg: &PipelineConfig,
    res: &Resources,
    seed: u64,
    probe: Option<Probe<'_>>,
) -> Result<TrainedPipeline, Error> {
    let k = corpus.dataset.schema(category).len();
    let fc = &cfg.features;
    if !fc.tfidf && fc.dense_names().is_empty() {
        return Err(Error::Config("no feature blocks enabled".into()));
    }
    let mut records: Vec<TrainingRecord> = train_idx
        .iter()
        .map(|&i| TrainingRecord {
            id: corpus.dataset.samples[i].id.clone(),
            source: i,
            tokens: corpus.samples[i].tokens.tokens.clone(),
            label: corpus.dataset.samples[i].label(category),
            dense: fc.dense(&corpus.samples[i]),
        })
        .collect();
    let sources = |recs: &[TrainingRecord]| recs.iter().map(|r| r.source).collect::<Vec<_>>();

    let rb = &cfg.rebalance;
    if rb.augment {
        Probe::emit(probe, FittedStat::Augmentation, || sources(&records));
        let acfg = AugmentConfig {
            p_replace: rb.p_replace,
            copies: rb.copies,
            seed: derive_seed(seed, 1),
        };
        records = rebalance::augment(&records, &res.paraphrases, &acfg)?;
    }

    let texts: Vec<CleanText> = records.iter().map(|r| CleanText { tokens: r.tokens.clone() }).collect();
    let tfidf = if fc.tfidf {
        Probe::emit(probe, FittedStat::Tfidf, || sources(&records));
        Some(TfidfModel::fit(&texts, fc.min_df)?)
    } else {
        None
    };
    let dense_dim = fc.dense_names().len();
    Probe::emit(probe, FittedStat::Standardizer, || sources(&records));
    let dense_rows: Vec<&[f64]> = records.iter().map(|r| r.dense.as_slice()).collect();
    let scaler = Standardizer::fit(&dense_rows, dense_dim);
    let featurizer = Featurizer {
        category,
        features: fc.clone(),
        tfidf,
        scaler,
    };

    let mut x = FeatureMatrix::new(featurizer.dim());
    for (t, r) in texts.iter().zip(&records) {
        featurizer.push_row(&mut x, t, &r.dense)?;
    }
    let mut y: Vec<usize> = records.iter().map(|r| r.label).collect();

    if rb.smote {
        Probe::emit(probe, FittedStat::Smote, || sources(&records));
        let scfg = SmoteConfig {
            k_neighbors: rb.smote_k,
            seed: derive_seed(seed, 2),
            distance_columns: rb.smote_dense_only.then(|| featurizer.dense_columns()),
        };
        let out = rebalance::smote(&x.to_dense(), &y, &scfg)?;
        x = FeatureMatrix::from_dense(&out.x)?;
        y = out.y;
    }

    let mut tc = cfg.train.clone();
    if rb.balanced {
        tc.class_weights = Some(rebalance::class_weights_present(&y, k)?.0);
    }
    Probe::emit(probe, FittedStat::Classifier, || sources(&records));
    let model = classifier::fit(&x, &y, k, &tc)?;
    Ok(TrainedPipeline { featurizer, model })
}
