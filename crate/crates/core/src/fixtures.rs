//! Deterministic synthetic fixtures: a small multimodal corpus with images,
//! lexicons, emotion vectors and annotator ratings, plus a label-only corpus
//! with the full training-split label distribution.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Category, Dataset, LabelSchema, Sample};
use crate::image::{EmotionTable, PixelGrid};
use crate::seed::derive_seed;
use crate::Error;

/// Label counts of the full training split, per category in schema order.
pub const REFERENCE_COUNTS: [&[usize]; 5] = [
    &[631, 2205, 4165],
    &[1651, 2457, 2241, 652],
    &[3512, 1546, 1549, 394],
    &[2715, 2596, 1469, 221],
    &[4530, 2471],
];

#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub corpus: PathBuf,
    pub images: PathBuf,
    pub emotions: PathBuf,
    pub synonyms: PathBuf,
    pub pos_lexicon: PathBuf,
    pub paraphrases: PathBuf,
    pub ratings: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<std::fs::File, Error> {
    std::fs::File::create(path).map_err(io_err(path))
}

/// Labels for `n` samples following `weights`, with at least `min` per level,
/// shuffled.
fn skewed_labels(n: usize, weights: &[usize], min: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let total: usize = weights.iter().sum();
    let spare = n - min * weights.len();
    let mut counts: Vec<usize> = weights.iter().map(|w| min + spare * w / total).collect();
    let mut level = 0;
    while counts.iter().sum::<usize>() < n {
        counts[level % weights.len()] += 1;
        level += 1;
    }
    let mut labels: Vec<usize> = counts.iter().enumerate().flat_map(|(l, &c)| std::iter::repeat_n(l, c)).collect();
    labels.shuffle(rng);
    labels
}

const SENTIMENT_WORDS: [&[&str]; 3] = [
    &["hate", "terrible", "sad", "awful", "angry", "worst"],
    &["monday", "work", "people", "day", "office", "week"],
    &["love", "happy", "great", "awesome", "best", "nice"],
];
const HUMOUR_WORDS: [&str; 4] = ["plain", "funny", "very funny", "hilarious lol"];
const SARCASM_WORDS: [&str; 4] = ["obviously", "honestly", "sure totally", "yeah right genius"];
const OFFENSIVE_WORDS: [&str; 4] = ["kind", "dumb", "stupid idiot", "disgusting trash"];
const MOTIVATION_WORDS: [&str; 2] = ["whatever", "never give up dream"];
const FILLER: [&str; 10] = ["when", "the", "cat", "dog", "boss", "friend", "meme", "internet", "school", "life"];

fn meme_text(labels: &[usize; 5], rng: &mut ChaCha8Rng) -> String {
    let mut words: Vec<&str> = Vec::new();
    let sentiment = SENTIMENT_WORDS[labels[0]];
    words.push(sentiment[rng.gen_range(0..sentiment.len())]);
    words.push(FILLER[rng.gen_range(0..FILLER.len())]);
    words.push(HUMOUR_WORDS[labels[1]]);
    words.push(sentiment[rng.gen_range(0..sentiment.len())]);
    words.push(SARCASM_WORDS[labels[2]]);
    words.push(FILLER[rng.gen_range(0..FILLER.len())]);
    words.push(OFFENSIVE_WORDS[labels[3]]);
    words.push(MOTIVATION_WORDS[labels[4]]);
    let mut text = words.join(" ");
    if rng.gen_bool(0.2) {
        text.push_str(" @someone www.example.com/x");
    }
    if rng.gen_bool(0.5) {
        text = text.to_uppercase();
    }
    text.push_str(["!", "!!", "?", "...", ""][rng.gen_range(0..5)]);
    text
}

fn meme_image(sentiment: usize, rng: &mut ChaCha8Rng) -> Result<PixelGrid, Error> {
    let base: [u8; 3] = match sentiment {
        0 => [40, 30, 60],
        1 => [120, 120, 120],
        _ => [250, 190, 40],
    };
    let jitter = |c: u8, rng: &mut ChaCha8Rng| c.saturating_add(rng.gen_range(0..20));
    let a = base.map(|c| jitter(c, rng));
    let grid = if rng.gen_bool(0.5) {
        PixelGrid::uniform(8, 8, a)?
    } else {
        let b = [rng.gen(), rng.gen(), rng.gen()];
        PixelGrid::checkerboard(8, 8, a, b)?
    };
    Ok(grid)
}

/// Emotion distribution in eighths, peaked on a sentiment-linked emotion.
fn emotion_vector(sentiment: usize, rng: &mut ChaCha8Rng) -> [f64; 7] {
    let peak = match sentiment {
        0 => [0usize, 1, 2, 5][rng.gen_range(0..4)],
        1 => 4,
        _ => [3usize, 6][rng.gen_range(0..2)],
    };
    let mut eighths = [0u32; 7];
    eighths[peak] = 5;
    for _ in 0..3 {
        eighths[rng.gen_range(0..7)] += 1;
    }
    eighths.map(|e| e as f64 / 8.0)
}

/// Writes the multimodal fixture under `dir` and returns the file locations.
pub fn generate_multimodal(dir: &Path, n: usize, seed: u64) -> Result<FixturePaths, Error> {
    if n < 16 {
        return Err(Error::Config("multimodal fixture needs at least 16 samples".into()));
    }
    let paths = FixturePaths {
        corpus: dir.join("corpus.csv"),
        images: dir.join("images"),
        emotions: dir.join("emotions.csv"),
        synonyms: dir.join("synonyms.tsv"),
        pos_lexicon: dir.join("pos_lexicon.tsv"),
        paraphrases: dir.join("paraphrases.tsv"),
        ratings: dir.join("ratings.csv"),
    };
    std::fs::create_dir_all(&paths.images).map_err(io_err(&paths.images))?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut columns: Vec<Vec<usize>> = Vec::new();
    for (cat, weights) in REFERENCE_COUNTS.iter().enumerate() {
        let min = if cat == 0 { 4 } else { 3 };
        columns.push(skewed_labels(n, weights, min, &mut rng));
    }

    let mut samples = Vec::with_capacity(n);
    let mut emotions = EmotionTable::default();
    for i in 0..n {
        let labels = [columns[0][i], columns[1][i], columns[2][i], columns[3][i], columns[4][i]];
        let id = format!("meme_{i:03}");
        let image_name = if i % 7 == 6 {
            String::new()
        } else {
            let name = format!("{id}.png");
            meme_image(labels[0], &mut rng)?.save_png(&paths.images.join(&name))?;
            name
        };
        if i % 5 != 4 {
            emotions.insert(id.clone(), emotion_vector(labels[0], &mut rng))?;
        }
        samples.push(Sample {
            text: meme_text(&labels, &mut rng),
            image: (!image_name.is_empty()).then(|| paths.images.join(&image_name)),
            image_name,
            id,
            labels,
        });
    }
    let dataset = Dataset::new(samples)?;
    dataset.to_writer(create(&paths.corpus)?)?;
    emotions.to_writer(create(&paths.emotions)?)?;

    for (path, body) in [
        (&paths.synonyms, include_str!("../data/synonyms.tsv")),
        (&paths.pos_lexicon, include_str!("../data/pos_lexicon.tsv")),
        (&paths.paraphrases, include_str!("../data/paraphrases.tsv")),
    ] {
        std::fs::write(path, body).map_err(io_err(path))?;
    }

    write_ratings(&paths.ratings, &dataset, Category::Sentiment, 4, &mut rng)?;
    Ok(paths)
}

/// Four-rater annotation of every sample: each rater reproduces the gold
/// level with probability 0.6 and otherwise picks a level uniformly.
fn write_ratings(path: &Path, d: &Dataset, cat: Category, raters: usize, rng: &mut ChaCha8Rng) -> Result<(), Error> {
    let schema = LabelSchema::graded(cat);
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["item_id".to_string(), "gold".to_string()];
    header.extend((1..=raters).map(|r| format!("rater{r}")));
    w.write_record(&header).map_err(crate::corpus::CorpusError::from)?;
    for s in &d.samples {
        let gold = s.label(cat);
        let mut row = vec![s.id.clone(), schema.level_name(gold).to_string()];
        for _ in 0..raters {
            let l = if rng.gen_bool(0.6) { gold } else { rng.gen_range(0..schema.len()) };
            row.push(schema.level_name(l).to_string());
        }
        w.write_record(&row).map_err(crate::corpus::CorpusError::from)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Label-only corpus whose per-category counts equal [`REFERENCE_COUNTS`].
pub fn reference_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let n: usize = REFERENCE_COUNTS[0].iter().sum();
    let columns: Vec<Vec<usize>> = REFERENCE_COUNTS
        .iter()
        .map(|counts| {
            let mut col: Vec<usize> = counts.iter().enumerate().flat_map(|(l, &c)| std::iter::repeat_n(l, c)).collect();
            col.shuffle(&mut rng);
            col
        })
        .collect();
    let samples = (0..n)
        .map(|i| Sample {
            id: format!("t{i:04}"),
            text: String::new(),
            image_name: String::new(),
            image: None,
            labels: [columns[0][i], columns[1][i], columns[2][i], columns[3][i], columns[4][i]],
        })
        .collect();
    Dataset::new(samples).expect("table fixture is valid")
}

pub fn write_reference(path: &Path, seed: u64) -> Result<(), Error> {
    reference_dataset(seed).to_writer(create(path)?)?;
    Ok(())
}
