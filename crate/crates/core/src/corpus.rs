//! Corpus ingestion, label schemas, distribution reports and stratified partitions.
//!
//! A corpus is a CSV file with the header
//! `id,image,text,sentiment,humour,sarcasm,offensive,motivational`. Label cells
//! hold the level strings of the graded (Task C) schemas, e.g. `very_funny` or
//! `hateful_offensive`. The `image` cell is a file name resolved against an
//! optional image directory; it may be empty.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: unknown {category} label `{value}`")]
    UnknownLabel {
        row: usize,
        category: Category,
        value: String,
    },
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    RatioSumInvalid([f64; 3]),
    #[error("fold count {k} is invalid for {n} samples")]
    KTooLarge { k: usize, n: usize },
    #[error("dataset schema for {0} is not the graded schema")]
    SchemaMismatch(Category),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
}

/// The five annotated affect dimensions of a meme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Sentiment,
    Humour,
    Sarcasm,
    Offensive,
    Motivational,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Sentiment,
        Category::Humour,
        Category::Sarcasm,
        Category::Offensive,
        Category::Motivational,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Sentiment => "sentiment",
            Category::Humour => "humour",
            Category::Sarcasm => "sarcasm",
            Category::Offensive => "offensive",
            Category::Motivational => "motivational",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sentiment" => Ok(Category::Sentiment),
            "humour" | "humor" => Ok(Category::Humour),
            "sarcasm" => Ok(Category::Sarcasm),
            "offensive" | "offense" => Ok(Category::Offensive),
            "motivational" => Ok(Category::Motivational),
            _ => Err(CorpusError::UnknownCategory(s.to_string())),
        }
    }
}

/// Ordered label vocabulary of one category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSchema {
    pub category: Category,
    pub levels: Vec<String>,
}

impl LabelSchema {
    /// Graded schema with levels in corpus-table order.
    pub fn graded(category: Category) -> Self {
        let levels: &[&str] = match category {
            Category::Sentiment => &["negative", "neutral", "positive"],
            Category::Humour => &["not_funny", "funny", "very_funny", "hilarious"],
            Category::Sarcasm => &["general", "not_sarcastic", "twisted_meaning", "very_twisted"],
            Category::Offensive => &[
                "not_offensive",
                "slight_offensive",
                "very_offensive",
                "hateful_offensive",
            ],
            Category::Motivational => &["not_motivational", "motivational"],
        };
        Self::from_levels(category, levels)
    }

    /// Binary schema: level 0 is the absence of the characteristic.
    /// Sentiment keeps its three polarity levels.
    pub fn binary(category: Category) -> Self {
        let levels: &[&str] = match category {
            Category::Sentiment => return Self::graded(category),
            Category::Humour => &["not_funny", "funny"],
            Category::Sarcasm => &["not_sarcastic", "sarcastic"],
            Category::Offensive => &["not_offensive", "offensive"],
            Category::Motivational => &["not_motivational", "motivational"],
        };
        Self::from_levels(category, levels)
    }

    fn from_levels(category: Category, levels: &[&str]) -> Self {
        Self {
            category,
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }

    pub fn level_name(&self, index: usize) -> &str {
        &self.levels[index]
    }

    /// Index of the level that marks absence of the characteristic in the
    /// graded schema, if the category has one.
    fn base_level(&self) -> Option<usize> {
        let base = match self.category {
            Category::Humour => "not_funny",
            Category::Sarcasm => "not_sarcastic",
            Category::Offensive => "not_offensive",
            Category::Sentiment | Category::Motivational => return None,
        };
        self.level_index(base)
    }
}

/// Label schemas of all five categories, indexed by [`Category::index`].
pub type Schemas = [LabelSchema; 5];

pub fn graded_schemas() -> Schemas {
    Category::ALL.map(LabelSchema::graded)
}

pub fn binary_schemas() -> Schemas {
    Category::ALL.map(LabelSchema::binary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub text: String,
    /// Image file name as written in the corpus, empty when absent.
    pub image_name: String,
    /// Resolved image path, set only when the file exists.
    pub image: Option<PathBuf>,
    /// Level index per category, indexed by [`Category::index`].
    pub labels: [usize; 5],
}

impl Sample {
    pub fn label(&self, category: Category) -> usize {
        self.labels[category.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub schemas: Schemas,
}

const COLUMNS: [&str; 8] = [
    "id",
    "image",
    "text",
    "sentiment",
    "humour",
    "sarcasm",
    "offensive",
    "motivational",
];

impl Dataset {
    /// Builds a dataset under the graded schemas, checking id uniqueness and
    /// label ranges.
    pub fn new(samples: Vec<Sample>) -> Result<Self, CorpusError> {
        Self::with_schemas(samples, graded_schemas())
    }

    pub fn with_schemas(samples: Vec<Sample>, schemas: Schemas) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(samples.len());
        for (row, s) in samples.iter().enumerate() {
            if !seen.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateId(s.id.clone()));
            }
            for cat in Category::ALL {
                if s.label(cat) >= schemas[cat.index()].len() {
                    return Err(CorpusError::UnknownLabel {
                        row: row + 1,
                        category: cat,
                        value: s.label(cat).to_string(),
                    });
                }
            }
        }
        Ok(Self { samples, schemas })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn schema(&self, category: Category) -> &LabelSchema {
        &self.schemas[category.index()]
    }

    pub fn labels(&self, category: Category) -> Vec<usize> {
        self.samples.iter().map(|s| s.label(category)).collect()
    }

    /// Sub-dataset holding the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            schemas: self.schemas.clone(),
        }
    }

    /// Reads a corpus CSV. Rows become samples in file order.
    pub fn load(csv_path: &Path, image_dir: Option<&Path>) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(csv_path).map_err(|source| CorpusError::Io {
            path: csv_path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file, image_dir)
    }

    pub fn from_reader<R: std::io::Read>(
        reader: R,
        image_dir: Option<&Path>,
    ) -> Result<Self, CorpusError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut positions = [0usize; 8];
        for (slot, col) in positions.iter_mut().zip(COLUMNS) {
            *slot = headers
                .iter()
                .position(|h| h.trim() == col)
                .ok_or_else(|| CorpusError::MissingColumn(col.to_string()))?;
        }
        let schemas = graded_schemas();
        let mut samples = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row = i + 1;
            let field = |c: usize| record.get(positions[c]).unwrap_or("");
            let mut labels = [0usize; 5];
            for cat in Category::ALL {
                let raw = field(3 + cat.index()).trim();
                labels[cat.index()] = schemas[cat.index()].level_index(raw).ok_or_else(|| {
                    CorpusError::UnknownLabel {
                        row,
                        category: cat,
                        value: raw.to_string(),
                    }
                })?;
            }
            let image_name = field(1).trim().to_string();
            let image = match image_dir {
                Some(dir) if !image_name.is_empty() => {
                    let p = dir.join(&image_name);
                    p.is_file().then_some(p)
                }
                _ => None,
            };
            samples.push(Sample {
                id: field(0).trim().to_string(),
                text: field(2).to_string(),
                image_name,
                image,
                labels,
            });
        }
        Self::with_schemas(samples, schemas)
    }

    /// Writes the dataset in the corpus CSV format.
    pub fn to_writer<W: std::io::Write>(&self, writer: W) -> Result<(), CorpusError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(COLUMNS)?;
        for s in &self.samples {
            let mut row = vec![s.id.as_str(), s.image_name.as_str(), s.text.as_str()];
            for cat in Category::ALL {
                row.push(self.schema(cat).level_name(s.label(cat)));
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|source| CorpusError::Io {
            path: PathBuf::from("<writer>"),
            source,
        })?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCount {
    pub level: String,
    pub count: usize,
    pub pct: f64,
}

/// Per-category label histogram; serializes as `{category: [{level, count, pct}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistributionReport {
    pub categories: BTreeMap<Category, Vec<LevelCount>>,
}

impl DistributionReport {
    pub fn level(&self, category: Category, level: &str) -> Option<&LevelCount> {
        self.categories.get(&category)?.iter().find(|l| l.level == level)
    }
}

/// Apportions `100%` over `counts` in hundredths of a percent: each share is
/// floored, then the leftover hundredths go to the largest remainders (lower
/// level index first on ties). Shares always sum to exactly 100.00.
fn percentages(counts: &[usize]) -> Vec<f64> {
    let total: u128 = counts.iter().map(|&c| c as u128).sum();
    let mut hundredths: Vec<u128> = Vec::with_capacity(counts.len());
    let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(counts.len());
    for (i, &c) in counts.iter().enumerate() {
        let scaled = c as u128 * 10_000;
        hundredths.push(scaled / total);
        remainders.push((scaled % total, i));
    }
    let assigned: u128 = hundredths.iter().sum();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take((10_000 - assigned) as usize) {
        hundredths[i] += 1;
    }
    hundredths.into_iter().map(|h| h as f64 / 100.0).collect()
}

pub fn distribution_report(d: &Dataset) -> Result<DistributionReport, CorpusError> {
    if d.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    let mut categories = BTreeMap::new();
    for cat in Category::ALL {
        let schema = d.schema(cat);
        let mut counts = vec![0usize; schema.len()];
        for s in &d.samples {
            counts[s.label(cat)] += 1;
        }
        let pcts = percentages(&counts);
        let rows = schema
            .levels
            .iter()
            .zip(counts.iter().zip(pcts))
            .map(|(level, (&count, pct))| LevelCount {
                level: level.clone(),
                count,
                pct,
            })
            .collect();
        categories.insert(cat, rows);
    }
    Ok(DistributionReport { categories })
}

/// Maps graded humour/sarcasm/offensive levels to presence (1) or absence (0).
pub fn collapse_to_binary(d: &Dataset) -> Result<Dataset, CorpusError> {
    for cat in Category::ALL {
        if d.schema(cat) != &LabelSchema::graded(cat) {
            return Err(CorpusError::SchemaMismatch(cat));
        }
    }
    let samples = d
        .samples
        .iter()
        .map(|s| {
            let mut out = s.clone();
            for cat in Category::ALL {
                if let Some(base) = d.schema(cat).base_level() {
                    out.labels[cat.index()] = usize::from(s.label(cat) != base);
                }
            }
            out
        })
        .collect();
    Ok(Dataset {
        samples,
        schemas: binary_schemas(),
    })
}

/// Index partition into train/validation/test parts, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Sample indices grouped by level, each group shuffled by `seed`.
fn shuffled_levels(d: &Dataset, category: Category, seed: u64) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); d.schema(category).len()];
    for (i, s) in d.samples.iter().enumerate() {
        groups[s.label(category)].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for g in &mut groups {
        g.shuffle(&mut rng);
    }
    groups
}

/// Largest-remainder apportionment of `total` units over `weights`.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if total == 0 || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let ideal: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = total - out.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if weights[i] > 0.0 {
            out[i] += 1;
            left -= 1;
        }
    }
    out
}

/// Stratified train/validation/test partition.
///
/// Levels with fewer samples than there are non-empty parts go entirely to
/// train. Other levels are apportioned so that overall part sizes follow the
/// ratios and each level's share per part is within one sample of its ideal.
pub fn stratified_split_indices(
    d: &Dataset,
    ratios: [f64; 3],
    stratify_on: Category,
    seed: u64,
) -> Result<SplitIndices, CorpusError> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(CorpusError::RatioSumInvalid(ratios));
    }
    let groups = shuffled_levels(d, stratify_on, seed);
    let active = ratios.iter().filter(|r| **r > 0.0).count();
    let mut targets = apportion(d.len(), &ratios);

    let mut parts: [Vec<usize>; 3] = Default::default();
    let mut big = Vec::new();
    for g in &groups {
        if g.len() < active {
            targets[0] = targets[0].saturating_sub(g.len());
            parts[0].extend_from_slice(g);
        } else {
            big.push(g);
        }
    }
    // Re-balance targets so they sum to the remaining sample count.
    let remaining: usize = big.iter().map(|g| g.len()).sum();
    let mut excess = targets.iter().sum::<usize>() as isize - remaining as isize;
    for t in targets.iter_mut().rev() {
        if excess <= 0 {
            break;
        }
        let take = (*t as isize).min(excess);
        *t -= take as usize;
        excess -= take;
    }
    if excess < 0 {
        targets[0] += (-excess) as usize;
    }

    // Floors per (level, part), then fill the leftovers by largest fraction
    // subject to row and column totals.
    let mut alloc: Vec<[usize; 3]> = Vec::with_capacity(big.len());
    let mut fractions: Vec<(f64, usize, usize)> = Vec::new();
    for (l, g) in big.iter().enumerate() {
        let mut row = [0usize; 3];
        for p in 0..3 {
            let ideal = g.len() as f64 * ratios[p];
            row[p] = ideal.floor() as usize;
            fractions.push((ideal - ideal.floor(), l, p));
        }
        alloc.push(row);
    }
    let mut row_left: Vec<usize> = big
        .iter()
        .zip(&alloc)
        .map(|(g, r)| g.len() - r.iter().sum::<usize>())
        .collect();
    let mut col_left = [0usize; 3];
    for p in 0..3 {
        let used: usize = alloc.iter().map(|r| r[p]).sum();
        col_left[p] = targets[p].saturating_sub(used);
    }
    fractions.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for &(_, l, p) in &fractions {
        if row_left[l] > 0 && col_left[p] > 0 && ratios[p] > 0.0 {
            alloc[l][p] += 1;
            row_left[l] -= 1;
            col_left[p] -= 1;
        }
    }
    for l in 0..big.len() {
        for p in 0..3 {
            let n = row_left[l].min(col_left[p]);
            alloc[l][p] += n;
            row_left[l] -= n;
            col_left[p] -= n;
        }
        alloc[l][0] += row_left[l];
        row_left[l] = 0;
    }

    for (g, row) in big.iter().zip(&alloc) {
        let mut start = 0;
        for p in 0..3 {
            parts[p].extend_from_slice(&g[start..start + row[p]]);
            start += row[p];
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, val, test] = parts;
    Ok(SplitIndices { train, val, test })
}

pub fn stratified_split(
    d: &Dataset,
    ratios: [f64; 3],
    stratify_on: Category,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), CorpusError> {
    let s = stratified_split_indices(d, ratios, stratify_on, seed)?;
    Ok((d.subset(&s.train), d.subset(&s.val), d.subset(&s.test)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold partition. Levels are laid out one after another (each
/// shuffled) and dealt round-robin, so fold sizes differ by at most one and
/// every level is spread evenly.
pub fn kfold(d: &Dataset, k: usize, stratify_on: Category, seed: u64) -> Result<Vec<Fold>, CorpusError> {
    let n = d.len();
    if k < 2 || k > n {
        return Err(CorpusError::KTooLarge { k, n });
    }
    let mut assignment = vec![0usize; n];
    let order = shuffled_levels(d, stratify_on, seed).concat();
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % k;
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}
