//! Text cleaning, POS-based stylistic counts, synset ambiguity statistics and
//! word (1,2)-gram TFIDF.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{tags} tags for {tokens} tokens")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("cannot fit TFIDF on an empty corpus")]
    EmptyCorpus,
}

/// Lowercase tokens with URLs, mentions and punctuation stripped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanText {
    pub tokens: Vec<String>,
}

impl CleanText {
    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        Self {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(https?://|www\.)\S*").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").unwrap())
}

pub fn preprocess(raw: &str) -> CleanText {
    let lower = raw.to_lowercase();
    let no_urls = url_re().replace_all(&lower, " ");
    let no_mentions = mention_re().replace_all(&no_urls, " ");
    let kept: String = no_mentions
        .chars()
        .map(|c| match c {
            'a'..='z' | '0'..='9' | '\'' => c,
            _ => ' ',
        })
        .collect();
    CleanText::from_tokens(kept.split_whitespace())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PosTag {
    #[serde(rename = "N")]
    Noun,
    #[serde(rename = "V")]
    Verb,
    #[serde(rename = "A")]
    Adj,
    #[serde(rename = "O")]
    Other,
}

impl PosTag {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "N" => Some(PosTag::Noun),
            "V" => Some(PosTag::Verb),
            "A" => Some(PosTag::Adj),
            "O" => Some(PosTag::Other),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            PosTag::Noun => 'N',
            PosTag::Verb => 'V',
            PosTag::Adj => 'A',
            PosTag::Other => 'O',
        }
    }
}

/// Splits a TSV line into its two columns.
fn tsv_pair(line: &str, lineno: usize) -> Result<(&str, &str), TextError> {
    line.split_once('\t').ok_or_else(|| TextError::Parse {
        line: lineno,
        msg: "expected two tab-separated columns".into(),
    })
}

fn content_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// Word → tag table consulted before the suffix rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PosLexicon {
    entries: HashMap<String, PosTag>,
}

impl PosLexicon {
    pub fn bundled() -> Self {
        Self::parse(include_str!("../data/pos_lexicon.tsv")).expect("bundled POS lexicon")
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(src: &str) -> Result<Self, TextError> {
        let mut entries = HashMap::new();
        for (lineno, line) in content_lines(src) {
            let (word, tag) = tsv_pair(line, lineno)?;
            let tag = PosTag::parse(tag.trim()).ok_or_else(|| TextError::Parse {
                line: lineno,
                msg: format!("unknown tag `{}`", tag.trim()),
            })?;
            entries.insert(word.trim().to_lowercase(), tag);
        }
        Ok(Self { entries })
    }

    pub fn insert(&mut self, word: &str, tag: PosTag) {
        self.entries.insert(word.to_string(), tag);
    }

    pub fn get(&self, word: &str) -> Option<PosTag> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn suffix_tag(word: &str) -> PosTag {
    if word.ends_with("ing") || word.ends_with("ed") {
        PosTag::Verb
    } else if ["ous", "ful", "able", "ive"].iter().any(|s| word.ends_with(s)) {
        PosTag::Adj
    } else if word.ends_with("ly") {
        PosTag::Other
    } else {
        PosTag::Noun
    }
}

pub fn pos_tag(text: &CleanText, lexicon: &PosLexicon) -> Vec<PosTag> {
    text.tokens
        .iter()
        .map(|w| lexicon.get(w).unwrap_or_else(|| suffix_tag(w)))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StylisticFeatures {
    pub n_words: usize,
    pub n_noun: usize,
    pub n_verb: usize,
    pub n_adj: usize,
    pub r_noun: f64,
    pub r_verb: f64,
    pub r_adj: f64,
}

impl StylisticFeatures {
    pub const DIM: usize = 7;
    pub const NAMES: [&'static str; 7] =
        ["n_words", "n_noun", "n_verb", "n_adj", "r_noun", "r_verb", "r_adj"];

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.n_words as f64,
            self.n_noun as f64,
            self.n_verb as f64,
            self.n_adj as f64,
            self.r_noun,
            self.r_verb,
            self.r_adj,
        ]
    }
}

pub fn stylistic_features(text: &CleanText, tags: &[PosTag]) -> Result<StylisticFeatures, TextError> {
    if tags.len() != text.len() {
        return Err(TextError::LengthMismatch {
            tokens: text.len(),
            tags: tags.len(),
        });
    }
    let count = |t: PosTag| tags.iter().filter(|&&x| x == t).count();
    let n_words = text.len();
    let (n_noun, n_verb, n_adj) = (count(PosTag::Noun), count(PosTag::Verb), count(PosTag::Adj));
    let ratio = |c: usize| if n_words > 0 { c as f64 / n_words as f64 } else { 0.0 };
    Ok(StylisticFeatures {
        n_words,
        n_noun,
        n_verb,
        n_adj,
        r_noun: ratio(n_noun),
        r_verb: ratio(n_verb),
        r_adj: ratio(n_adj),
    })
}

/// Head word → synset. Every synset contains its head word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    synsets: HashMap<String, BTreeSet<String>>,
}

impl SynonymLexicon {
    pub fn bundled() -> Self {
        Self::parse(include_str!("../data/synonyms.tsv")).expect("bundled synonym lexicon")
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses `word<TAB>syn1,syn2,...` lines.
    pub fn parse(src: &str) -> Result<Self, TextError> {
        let mut lex = Self::default();
        for (lineno, line) in content_lines(src) {
            let (word, syns) = tsv_pair(line, lineno)?;
            let syns: Vec<&str> = syns.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            lex.insert(word.trim(), &syns);
        }
        Ok(lex)
    }

    pub fn insert(&mut self, word: &str, synonyms: &[&str]) {
        let word = word.to_lowercase();
        let set = self.synsets.entry(word.clone()).or_default();
        set.insert(word);
        set.extend(synonyms.iter().map(|s| s.to_lowercase()));
    }

    /// Synset size, 1 for unlisted words.
    pub fn synset_len(&self, word: &str) -> usize {
        self.synsets.get(word).map_or(1, BTreeSet::len)
    }

    pub fn synset(&self, word: &str) -> Option<&BTreeSet<String>> {
        self.synsets.get(word)
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityFeatures {
    pub mean_synset_len: f64,
    pub max_synset_len: usize,
    pub synset_gap: f64,
}

impl AmbiguityFeatures {
    pub const DIM: usize = 3;
    pub const NAMES: [&'static str; 3] = ["mean_synset_len", "max_synset_len", "synset_gap"];

    pub fn to_array(&self) -> [f64; 3] {
        [self.mean_synset_len, self.max_synset_len as f64, self.synset_gap]
    }
}

pub fn ambiguity_features(text: &CleanText, lex: &SynonymLexicon) -> AmbiguityFeatures {
    if text.is_empty() {
        return AmbiguityFeatures::default();
    }
    let lens: Vec<usize> = text.tokens.iter().map(|w| lex.synset_len(w)).collect();
    let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
    let max = lens.iter().copied().max().unwrap_or(0);
    AmbiguityFeatures {
        mean_synset_len: mean,
        max_synset_len: max,
        synset_gap: max as f64 - mean,
    }
}

/// Unigrams followed by space-joined bigrams, in text order.
pub fn ngrams(text: &CleanText) -> impl Iterator<Item = String> + '_ {
    let t = &text.tokens;
    t.iter()
        .cloned()
        .chain(t.windows(2).map(|w| format!("{} {}", w[0], w[1])))
}

/// Sparse vector with strictly increasing column indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }
}

/// Smoothed-idf word (1,2)-gram model. Columns follow lexicographic n-gram order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub n_docs: usize,
}

impl TfidfModel {
    pub fn fit(corpus: &[CleanText], min_df: usize) -> Result<Self, TextError> {
        if corpus.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in corpus {
            let unique: BTreeSet<String> = ngrams(doc).collect();
            for g in unique {
                *df.entry(g).or_insert(0) += 1;
            }
        }
        let n = corpus.len();
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::new();
        for (gram, count) in df.into_iter().filter(|(_, c)| *c >= min_df) {
            vocabulary.insert(gram, idf.len());
            idf.push(((1.0 + n as f64) / (1.0 + count as f64)).ln() + 1.0);
        }
        Ok(Self {
            vocabulary,
            idf,
            n_docs: n,
        })
    }

    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    /// Raw counts times idf, scaled to unit L2 norm.
    pub fn transform(&self, text: &CleanText) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams(text) {
            if let Some(&col) = self.vocabulary.get(&g) {
                *counts.entry(col).or_insert(0.0) += 1.0;
            }
        }
        let mut v = SparseVector {
            indices: counts.keys().copied().collect(),
            values: counts.iter().map(|(&c, &tf)| tf * self.idf[c]).collect(),
        };
        let norm = v.norm();
        if norm > 0.0 {
            v.values.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(t: &CleanText) -> Vec<&str> {
        t.tokens.iter().map(String::as_str).collect()
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(toks(&preprocess("Check www.foo.com @user NOW!!")), vec!["check", "now"]);
        assert!(preprocess("").is_empty());
        assert_eq!(toks(&preprocess("It's FINE")), vec!["it's", "fine"]);
        assert_eq!(
            toks(&preprocess("see HTTPS://x.y/z?q=1 and http://a.b, ok")),
            vec!["see", "and", "ok"]
        );
    }

    #[test]
    fn tagging_uses_lexicon_then_suffixes() {
        let mut lex = PosLexicon::default();
        lex.insert("dog", PosTag::Noun);
        lex.insert("the", PosTag::Other);
        let t = CleanText::from_tokens(["running", "dog", "jumped", "famous", "quickly", "cat", "the"]);
        let tags: String = pos_tag(&t, &lex).into_iter().map(PosTag::letter).collect();
        assert_eq!(tags, "VNVAONO");
        assert!(pos_tag(&CleanText::default(), &lex).is_empty());
    }

    #[test]
    fn bundled_lexicons_parse() {
        assert!(PosLexicon::bundled().len() > 50);
        let syn = SynonymLexicon::bundled();
        assert_eq!(syn.synset_len("new"), 6);
    }

    #[test]
    fn stylistic_counts() {
        use PosTag::*;
        let t = CleanText::from_tokens(["the", "quick", "brown", "fox", "jumps"]);
        let f = stylistic_features(&t, &[Other, Adj, Adj, Noun, Verb]).unwrap();
        assert_eq!((f.n_words, f.n_adj, f.n_noun, f.n_verb), (5, 2, 1, 1));
        assert_eq!(f.r_adj, 0.4);
        assert_eq!(stylistic_features(&CleanText::default(), &[]).unwrap(), StylisticFeatures::default());
        let all = stylistic_features(&CleanText::from_tokens(["a", "b"]), &[Noun, Noun]).unwrap();
        assert_eq!(all.r_noun, 1.0);
        assert!(matches!(
            stylistic_features(&t, &[Noun]),
            Err(TextError::LengthMismatch { tokens: 5, tags: 1 })
        ));
    }

    #[test]
    fn ambiguity_examples() {
        let lex = SynonymLexicon::parse("new\tfresh,raw,newfangled,modern,newly\n").unwrap();
        assert_eq!(lex.synset_len("new"), 6);
        let f = ambiguity_features(&CleanText::from_tokens(["new", "day"]), &lex);
        assert_eq!((f.mean_synset_len, f.max_synset_len, f.synset_gap), (3.5, 6, 2.5));
        assert_eq!(ambiguity_features(&CleanText::default(), &lex), AmbiguityFeatures::default());
    }

    #[test]
    fn synset_contains_head() {
        let lex = SynonymLexicon::parse("big\tlarge\nlonely\t\n").unwrap();
        assert!(lex.synset("big").unwrap().contains("big"));
        assert_eq!(lex.synset_len("lonely"), 1);
    }

    #[test]
    fn tfidf_two_doc_idf() {
        let corpus = [preprocess("a b"), preprocess("a c")];
        let m = TfidfModel::fit(&corpus, 1).unwrap();
        let idf = |g: &str| m.idf[m.vocabulary[g]];
        assert_eq!(idf("a"), 1.0);
        let rare = 1.5f64.ln() + 1.0;
        assert_eq!(idf("b"), rare);
        assert_eq!(idf("a b"), rare);
        // lexicographic columns
        let cols: Vec<&str> = m.vocabulary.keys().map(String::as_str).collect();
        assert_eq!(cols, vec!["a", "a b", "a c", "b", "c"]);
        assert_eq!(m, TfidfModel::fit(&corpus, 1).unwrap());

        // "a a b": a -> 2*1.0, b -> 1*idf(b), "a a" oov, "a b" -> 1*idf("a b")
        let v = m.transform(&preprocess("a a b"));
        let raw = [2.0, rare, rare];
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dense = v.to_dense(m.dim());
        assert!((dense[m.vocabulary["a"]] - 2.0 / norm).abs() < 1e-12);
        assert!((dense[m.vocabulary["b"]] - rare / norm).abs() < 1e-12);
        assert!((dense[m.vocabulary["a"]] / dense[m.vocabulary["b"]] - 2.0 / rare).abs() < 1e-12);
    }

    #[test]
    fn tfidf_boundaries() {
        assert!(matches!(TfidfModel::fit(&[], 1), Err(TextError::EmptyCorpus)));
        let m = TfidfModel::fit(&[preprocess("x y")], 5).unwrap();
        assert_eq!(m.dim(), 0);
        assert!(m.transform(&preprocess("x y")).is_zero());
        let m = TfidfModel::fit(&[preprocess("x y")], 1).unwrap();
        assert!(m.transform(&CleanText::default()).is_zero());
    }

    proptest! {
        #[test]
        fn preprocess_idempotent(s in "\\PC{0,60}") {
            let once = preprocess(&s);
            prop_assert_eq!(preprocess(&once.joined()), once.clone());
            for t in &once.tokens {
                prop_assert!(t.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\''));
            }
        }

        #[test]
        fn stylistic_ratios_bounded(words in proptest::collection::vec("[a-z]{1,8}", 0..20)) {
            let t = CleanText::from_tokens(words);
            let tags = pos_tag(&t, &PosLexicon::bundled());
            let f = stylistic_features(&t, &tags).unwrap();
            let other = tags.iter().filter(|&&x| x == PosTag::Other).count();
            prop_assert_eq!(f.n_noun + f.n_verb + f.n_adj + other, f.n_words);
            for r in [f.r_noun, f.r_verb, f.r_adj] {
                prop_assert!((0.0..=1.0).contains(&r));
            }
            let a = ambiguity_features(&t, &SynonymLexicon::bundled());
            if !t.is_empty() {
                prop_assert!(a.synset_gap >= 0.0);
            }
        }

        #[test]
        fn tfidf_unit_norm(docs in proptest::collection::vec("[a-e ]{0,20}", 1..8)) {
            let corpus: Vec<CleanText> = docs.iter().map(|d| preprocess(d)).collect();
            let m = TfidfModel::fit(&corpus, 1).unwrap();
            for d in &corpus {
                let v = m.transform(d);
                prop_assert!(v.indices.iter().all(|&i| i < m.dim()));
                prop_assert!(v.indices.windows(2).all(|w| w[0] < w[1]));
                if !v.is_zero() {
                    prop_assert!((v.norm() - 1.0).abs() < 1e-9);
                    prop_assert!((v.dot(&v) - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
