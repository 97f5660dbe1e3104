#![allow(dead_code)]

use memeaffect::corpus::Dataset;
use memeaffect::fixtures;
use memeaffect::image::EmotionTable;
use memeaffect::pipeline::{self, PreparedCorpus, Resources};
use memeaffect::rebalance::ParaphraseLexicon;
use memeaffect::text::{PosLexicon, SynonymLexicon};
use tempfile::TempDir;

pub struct Fixture {
    pub dir: TempDir,
    pub paths: fixtures::FixturePaths,
    pub corpus: PreparedCorpus,
    pub res: Resources,
}

/// Generated multimodal fixture loaded back from disk.
pub fn multimodal(n: usize, seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let paths = fixtures::generate_multimodal(dir.path(), n, seed).unwrap();
    let res = Resources {
        pos: PosLexicon::load(&paths.pos_lexicon).unwrap(),
        synonyms: SynonymLexicon::load(&paths.synonyms).unwrap(),
        paraphrases: ParaphraseLexicon::load(&paths.paraphrases).unwrap(),
        emotions: EmotionTable::load(&paths.emotions).unwrap(),
    };
    let dataset = Dataset::load(&paths.corpus, Some(&paths.images)).unwrap();
    let corpus = pipeline::prepare(dataset, &res).unwrap();
    Fixture { dir, paths, corpus, res }
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_memeaffect")
}

pub fn run_cli(args: &[&str]) -> std::process::Output {
    std::process::Command::new(bin()).args(args).output().unwrap()
}
