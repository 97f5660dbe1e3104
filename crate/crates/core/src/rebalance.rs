//! Label-imbalance handling: balanced class weights, SMOTE oversampling and
//! paraphrase-based text augmentation.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::{derive_seed, stable_hash};

#[derive(Debug, Error)]
pub enum RebalanceError {
    #[error("class {0} has no samples")]
    MissingClass(usize),
    #[error("label {label} is out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("class {class} has {count} sample(s); SMOTE needs at least 2")]
    ClassTooSmall { class: usize, count: usize },
    #[error("k_neighbors must be at least 1")]
    BadK,
    #[error("{rows} feature rows for {labels} labels")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("replacement probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("paraphrase lexicon line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Per-class loss weights `N / (k * N_c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(pub Vec<f64>);

impl ClassWeights {
    /// Expands class weights to one weight per sample.
    pub fn per_sample(&self, labels: &[usize]) -> Vec<f64> {
        labels.iter().map(|&y| self.0[y]).collect()
    }
}

fn histogram(labels: &[usize], k: usize) -> Result<Vec<usize>, RebalanceError> {
    let mut counts = vec![0usize; k];
    for &y in labels {
        *counts
            .get_mut(y)
            .ok_or(RebalanceError::LabelOutOfRange { label: y, k })? += 1;
    }
    Ok(counts)
}

pub fn class_weights(labels: &[usize], k: usize) -> Result<ClassWeights, RebalanceError> {
    let counts = histogram(labels, k)?;
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(RebalanceError::MissingClass(c));
    }
    let n = labels.len() as f64;
    Ok(ClassWeights(
        counts.iter().map(|&nc| n / (k as f64 * nc as f64)).collect(),
    ))
}

/// Balanced weights over the classes that occur; absent classes get weight 0.
pub fn class_weights_present(labels: &[usize], k: usize) -> Result<ClassWeights, RebalanceError> {
    let counts = histogram(labels, k)?;
    let n = labels.len() as f64;
    Ok(ClassWeights(
        counts
            .iter()
            .map(|&nc| if nc == 0 { 0.0 } else { n / (k as f64 * nc as f64) })
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub seed: u64,
    /// Restricts neighbour distances to these columns; interpolation always
    /// covers every column.
    pub distance_columns: Option<std::ops::Range<usize>>,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            seed: 0,
            distance_columns: None,
        }
    }
}

/// Provenance of one synthetic row: `base + lambda * (neighbor - base)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutput {
    /// Original rows, unchanged and in order, followed by synthetic rows.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    /// One entry per synthetic row, indices refer to the input rows.
    pub synthetic: Vec<SyntheticOrigin>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Up to `k` nearest same-class members of `members[at]`, nearest first,
/// ties broken by row index.
fn nearest(x: &[Vec<f64>], members: &[usize], at: usize, k: usize, cols: &Option<std::ops::Range<usize>>) -> Vec<usize> {
    let row = |i: usize| -> &[f64] {
        match cols {
            Some(r) => &x[i][r.clone()],
            None => &x[i],
        }
    };
    let me = members[at];
    let mut d: Vec<(f64, usize)> = members
        .iter()
        .filter(|&&j| j != me)
        .map(|&j| (sq_dist(row(me), row(j)), j))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.truncate(k);
    d.into_iter().map(|(_, j)| j).collect()
}

/// Oversamples every class below the majority count up to it. Bases cycle
/// through the class members in order; neighbours and interpolation weights
/// come from a seeded generator.
pub fn smote(x: &[Vec<f64>], y: &[usize], cfg: &SmoteConfig) -> Result<SmoteOutput, RebalanceError> {
    if x.len() != y.len() {
        return Err(RebalanceError::ShapeMismatch {
            rows: x.len(),
            labels: y.len(),
        });
    }
    if cfg.k_neighbors == 0 {
        return Err(RebalanceError::BadK);
    }
    let k = y.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in y.iter().enumerate() {
        members[c].push(i);
    }
    let majority = members.iter().map(Vec::len).max().unwrap_or(0);
    for (c, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < majority && m.len() < 2 {
            return Err(RebalanceError::ClassTooSmall { class: c, count: m.len() });
        }
    }

    let mut out = SmoteOutput {
        x: x.to_vec(),
        y: y.to_vec(),
        synthetic: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (c, m) in members.iter().enumerate() {
        if m.is_empty() || m.len() >= majority {
            continue;
        }
        let neighbors: Vec<Vec<usize>> = (0..m.len())
            .map(|at| nearest(x, m, at, cfg.k_neighbors, &cfg.distance_columns))
            .collect();
        for s in 0..majority - m.len() {
            let at = s % m.len();
            let base = m[at];
            let nb = &neighbors[at];
            let neighbor = nb[rng.gen_range(0..nb.len())];
            let lambda: f64 = rng.gen();
            let row = x[base]
                .iter()
                .zip(&x[neighbor])
                .map(|(a, b)| a + lambda * (b - a))
                .collect();
            out.x.push(row);
            out.y.push(c);
            out.synthetic.push(SyntheticOrigin { base, neighbor, lambda });
        }
    }
    Ok(out)
}

/// Phrase (1-3 tokens) → replacement phrases.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParaphraseLexicon {
    entries: HashMap<Vec<String>, Vec<Vec<String>>>,
}

pub const MAX_PHRASE_LEN: usize = 3;

fn phrase(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

impl ParaphraseLexicon {
    pub fn bundled() -> Self {
        Self::parse(include_str!("../data/paraphrases.tsv")).expect("bundled paraphrase lexicon")
    }

    pub fn load(path: &Path) -> Result<Self, RebalanceError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses `phrase<TAB>replacement1|replacement2|...` lines.
    pub fn parse(src: &str) -> Result<Self, RebalanceError> {
        let mut lex = Self::default();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| RebalanceError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let (src_phrase, repl) = line.split_once('\t').ok_or_else(|| err("missing tab"))?;
            let replacements: Vec<&str> = repl.split('|').collect();
            lex.insert(src_phrase, &replacements).map_err(|_| err("bad phrase or empty replacement"))?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, source: &str, replacements: &[&str]) -> Result<(), RebalanceError> {
        let key = phrase(source);
        let reps: Vec<Vec<String>> = replacements.iter().map(|r| phrase(r)).collect();
        if key.is_empty() || key.len() > MAX_PHRASE_LEN || reps.is_empty() || reps.iter().any(Vec::is_empty) {
            return Err(RebalanceError::Parse {
                line: 0,
                msg: format!("invalid entry `{source}`"),
            });
        }
        self.entries.entry(key).or_default().extend(reps);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    fn lookup(&self, tokens: &[String]) -> Option<&Vec<Vec<String>>> {
        self.entries.get(tokens)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub p_replace: f64,
    pub copies: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            p_replace: 0.5,
            copies: 1,
            seed: 0,
        }
    }
}

/// A training sample after dense feature assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub id: String,
    /// Index of the corpus sample this record derives from.
    pub source: usize,
    pub tokens: Vec<String>,
    pub label: usize,
    pub dense: Vec<f64>,
}

/// One paraphrase pass: longest match first, each match replaced with
/// probability `p`. Returns the new tokens and the number of replacements
/// that changed the text.
fn paraphrase(tokens: &[String], lex: &ParaphraseLexicon, p: f64, rng: &mut ChaCha8Rng) -> (Vec<String>, usize) {
    let mut out = Vec::with_capacity(tokens.len());
    let mut changed = 0;
    let mut i = 0;
    while i < tokens.len() {
        let longest = (1..=MAX_PHRASE_LEN.min(tokens.len() - i))
            .rev()
            .find_map(|len| lex.lookup(&tokens[i..i + len]).map(|r| (len, r)));
        match longest {
            Some((len, reps)) => {
                if rng.gen_bool(p) {
                    let pick = &reps[rng.gen_range(0..reps.len())];
                    if pick.as_slice() != &tokens[i..i + len] {
                        changed += 1;
                    }
                    out.extend(pick.iter().cloned());
                } else {
                    out.extend_from_slice(&tokens[i..i + len]);
                }
                i += len;
            }
            None => {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    (out, changed)
}

/// Returns the input records followed by paraphrased copies. Each copy keeps
/// its source's label and dense features; copies whose text did not change
/// are dropped. Randomness is derived per sample from `(seed, id)`.
pub fn augment(
    records: &[TrainingRecord],
    lex: &ParaphraseLexicon,
    cfg: &AugmentConfig,
) -> Result<Vec<TrainingRecord>, RebalanceError> {
    if !(0.0..=1.0).contains(&cfg.p_replace) {
        return Err(RebalanceError::BadProbability(cfg.p_replace));
    }
    let mut out = records.to_vec();
    if lex.is_empty() || cfg.p_replace == 0.0 {
        return Ok(out);
    }
    for r in records {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, stable_hash(r.id.as_bytes())));
        for copy in 0..cfg.copies {
            let (tokens, changed) = paraphrase(&r.tokens, lex, cfg.p_replace, &mut rng);
            if changed > 0 {
                out.push(TrainingRecord {
                    id: format!("{}#aug{}", r.id, copy + 1),
                    source: r.source,
                    tokens,
                    label: r.label,
                    dense: r.dense.clone(),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weights_for_reference_split_sentiment() {
        let mut labels = vec![0; 631];
        labels.extend(vec![1; 2205]);
        labels.extend(vec![2; 4165]);
        let w = class_weights(&labels, 3).unwrap().0;
        let expect = [7001.0 / (3.0 * 631.0), 7001.0 / (3.0 * 2205.0), 7001.0 / (3.0 * 4165.0)];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((w[0] - 3.698).abs() < 1e-3 && (w[1] - 1.058).abs() < 1e-3 && (w[2] - 0.560).abs() < 1e-3);
    }

    #[test]
    fn weights_balanced_and_skewed() {
        assert_eq!(class_weights(&[0, 1, 2, 0, 1, 2], 3).unwrap().0, vec![1.0; 3]);
        let mut labels = vec![0; 90];
        labels.extend(vec![1; 10]);
        let w = class_weights(&labels, 2).unwrap().0;
        assert!((w[0] - 0.5556).abs() < 1e-4);
        assert_eq!(w[1], 5.0);
        assert!(matches!(class_weights(&[0, 0, 2], 3), Err(RebalanceError::MissingClass(1))));
        assert_eq!(class_weights_present(&[0, 0, 2], 3).unwrap().0[1], 0.0);
    }

    #[test]
    fn smote_on_diagonal_pair() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 5.0], vec![6.0, 5.0], vec![5.0, 6.0], vec![7.0, 7.0]];
        let y = vec![0, 0, 1, 1, 1, 1];
        let out = smote(&x, &y, &SmoteConfig { k_neighbors: 3, seed: 4, distance_columns: None }).unwrap();
        assert_eq!(out.y.iter().filter(|&&c| c == 0).count(), 4);
        assert_eq!(&out.x[..6], &x[..]);
        for row in &out.x[6..] {
            assert_eq!(row[0], row[1]);
            assert!((0.0..=1.0).contains(&row[0]));
        }
    }

    #[test]
    fn smote_degenerate_and_errors() {
        let x = vec![vec![2.0, 3.0], vec![2.0, 3.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let y = vec![0, 0, 1, 1, 1];
        let out = smote(&x, &y, &SmoteConfig::default()).unwrap();
        assert_eq!(out.x[5], vec![2.0, 3.0]);
        let cfg = SmoteConfig { k_neighbors: 0, ..Default::default() };
        assert!(matches!(smote(&x, &y, &cfg), Err(RebalanceError::BadK)));
        let y1 = vec![0, 1, 1, 1, 1];
        assert!(matches!(
            smote(&x, &y1, &SmoteConfig::default()),
            Err(RebalanceError::ClassTooSmall { class: 0, count: 1 })
        ));
    }

    #[test]
    fn smote_zero_lambda_is_base() {
        let x = vec![vec![0.0], vec![4.0], vec![9.0], vec![9.5], vec![10.0]];
        let y = vec![0, 0, 1, 1, 1];
        let out = smote(&x, &y, &SmoteConfig::default()).unwrap();
        let o = out.synthetic[0];
        let expect = x[o.base][0] + o.lambda * (x[o.neighbor][0] - x[o.base][0]);
        assert_eq!(out.x[5][0], expect);
        if o.lambda == 0.0 {
            assert_eq!(out.x[5], x[o.base]);
        }
    }

    fn record(id: &str, text: &str, dense: Vec<f64>) -> TrainingRecord {
        TrainingRecord {
            id: id.into(),
            source: 0,
            tokens: text.split_whitespace().map(String::from).collect(),
            label: 1,
            dense,
        }
    }

    #[test]
    fn augment_single_replacement() {
        let mut lex = ParaphraseLexicon::default();
        lex.insert("funny", &["hilarious"]).unwrap();
        let src = record("m1", "so funny meme", vec![0.25, -1.5, 3.0]);
        let cfg = AugmentConfig { p_replace: 1.0, copies: 1, seed: 11 };
        let out = augment(std::slice::from_ref(&src), &lex, &cfg).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], src);
        assert_eq!(out[1].tokens, vec!["so", "hilarious", "meme"]);
        assert_eq!(out[1].label, src.label);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&out[1].dense), bits(&src.dense));
    }

    #[test]
    fn augment_prefers_longest_match() {
        let lex = ParaphraseLexicon::parse("a lot of\tlots of\nlot\tbunch\n").unwrap();
        let cfg = AugmentConfig { p_replace: 1.0, copies: 1, seed: 0 };
        let out = augment(&[record("x", "a lot of fun", vec![])], &lex, &cfg).unwrap();
        assert_eq!(out[1].tokens, vec!["lots", "of", "fun"]);
    }

    #[test]
    fn augment_noops() {
        let recs = vec![record("a", "very funny", vec![1.0]), record("b", "good day", vec![2.0])];
        let lex = ParaphraseLexicon::bundled();
        let none = AugmentConfig { p_replace: 0.0, copies: 3, seed: 1 };
        assert_eq!(augment(&recs, &lex, &none).unwrap(), recs);
        let cfg = AugmentConfig { p_replace: 1.0, copies: 2, seed: 1 };
        assert_eq!(augment(&recs, &ParaphraseLexicon::default(), &cfg).unwrap(), recs);
        let a = augment(&recs, &lex, &cfg).unwrap();
        assert_eq!(a, augment(&recs, &lex, &cfg).unwrap());
        assert!(a.len() > recs.len());
        let bad = AugmentConfig { p_replace: 1.5, ..cfg };
        assert!(matches!(augment(&recs, &lex, &bad), Err(RebalanceError::BadProbability(_))));
    }

    #[test]
    fn lexicon_rejects_empty_replacement() {
        assert!(ParaphraseLexicon::parse("good\tgreat||fine\n").is_err());
        assert!(ParaphraseLexicon::parse("one two three four\tx\n").is_err());
    }

    proptest! {
        #[test]
        fn weights_preserve_mass(labels in proptest::collection::vec(0usize..4, 4..60)) {
            let w = class_weights_present(&labels, 4).unwrap();
            let mass: f64 = w.per_sample(&labels).iter().sum();
            let present = (0..4).filter(|c| labels.contains(c)).count() as f64;
            // with all classes present this is exactly N
            prop_assert!((mass - labels.len() as f64 * present / 4.0).abs() < 1e-9);
        }

        #[test]
        fn smote_within_class_box(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0usize..3), 6..40),
            seed in any::<u64>(),
        ) {
            let x: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0, p.1]).collect();
            let y: Vec<usize> = pts.iter().map(|p| p.2).collect();
            let counts = histogram(&y, 3).unwrap();
            prop_assume!(counts.iter().all(|&c| c >= 2));
            let out = smote(&x, &y, &SmoteConfig { k_neighbors: 3, seed, distance_columns: None }).unwrap();
            let after = histogram(&out.y, 3).unwrap();
            let majority = *counts.iter().max().unwrap();
            prop_assert!(after.iter().all(|&c| c == majority));
            prop_assert_eq!(&out.x[..x.len()], &x[..]);
            for (row, &c) in out.x.iter().zip(&out.y).skip(x.len()) {
                for d in 0..2 {
                    let lo = x.iter().zip(&y).filter(|p| *p.1 == c).map(|p| p.0[d]).fold(f64::INFINITY, f64::min);
                    let hi = x.iter().zip(&y).filter(|p| *p.1 == c).map(|p| p.0[d]).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(row[d] >= lo - 1e-12 && row[d] <= hi + 1e-12);
                }
            }
        }
    }
}
