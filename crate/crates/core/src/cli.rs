//! The `memeaffect` command line.
//!
//! Exit codes: 0 on success, 1 when arguments, configuration or input files
//! are invalid, 2 when a valid run fails.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classifier::LRModel;
use crate::corpus::{self, Category, Dataset};
use crate::evaluation::{self, tables, CvOptions, RatingsFile};
use crate::fixtures;
use crate::image::{EmotionTable, ImageFeatureVector};
use crate::pipeline::{self, Featurizer, PipelineConfig, PreparedCorpus, Resources, TrainedPipeline};
use crate::rebalance::ParaphraseLexicon;
use crate::text::{AmbiguityFeatures, PosLexicon, StylisticFeatures, SynonymLexicon};
use crate::Error;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "memeaffect", version, about = "Meme affect classification toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label distribution of a corpus
    Stats(StatsArgs),
    /// Per-sample dense feature dump
    Featurize(FeaturizeArgs),
    /// Train on a whole corpus and save the model
    Train(TrainArgs),
    /// Score a saved model on a corpus
    Eval(EvalArgs),
    /// Stratified k-fold cross-validation
    Cv(CvArgs),
    /// Eight-row ablation of balanced training, augmentation and image features
    Ablate(CvArgs),
    /// Free-marginal multirater kappa of a ratings file
    Kappa(KappaArgs),
    /// Annotators and model scored against gold labels
    AnnotatorReport(AnnotatorArgs),
    /// Write the synthetic multimodal fixture (corpus, images, lexicons, ratings)
    GenFixtures(GenArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus CSV
    #[arg(long)]
    pub data: PathBuf,
    /// Collapse graded humour/sarcasm/offensive labels to binary
    #[arg(long)]
    pub binary: bool,
    /// Output JSON file; without it the report is printed as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Inputs shared by every subcommand that featurizes a corpus.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// JSON experiment config; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corpus CSV
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Directory holding the images named in the corpus
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Emotion table CSV (id,angry,...,surprised); missing ids get a uniform vector
    #[arg(long)]
    pub emotions: Option<PathBuf>,
    /// Synonym lexicon TSV [default: bundled]
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// POS lexicon TSV [default: bundled]
    #[arg(long)]
    pub pos_lexicon: Option<PathBuf>,
    /// Paraphrase lexicon TSV [default: bundled]
    #[arg(long)]
    pub paraphrases: Option<PathBuf>,
    /// Collapse graded humour/sarcasm/offensive labels to binary
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub tfidf: bool,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub stylistic: bool,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub ambiguity: bool,
    /// Pixel statistics (HSV means, contrast, colourfulness, PAD)
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub image: bool,
    /// Facial-emotion vector
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub emotion: bool,
    /// Minimum document frequency of a TFIDF n-gram
    #[arg(long, default_value_t = 1)]
    pub min_df: usize,
    /// Balanced class weights N / (k * N_c)
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub balanced: bool,
    /// Paraphrase augmentation of the training split
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub augment: bool,
    /// Per-match replacement probability for augmentation
    #[arg(long, default_value_t = 0.5)]
    pub p_replace: f64,
    /// Augmented copies per training sample
    #[arg(long, default_value_t = 1)]
    pub copies: usize,
    /// SMOTE oversampling after feature assembly
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub smote: bool,
    #[arg(long, default_value_t = 5)]
    pub smote_k: usize,
    /// Measure SMOTE distances on the dense block only
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub smote_dense_only: bool,
    /// L2 strength
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Relative loss-change stopping threshold
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Master seed; every random choice derives from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of folds
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Maximum folds trained concurrently (output does not depend on it)
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Category to model
    #[arg(long)]
    pub category: Option<Category>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model JSON
    #[arg(long)]
    pub out: PathBuf,
    /// Featurizer JSON [default: <out>.featurizer.json]
    #[arg(long)]
    pub featurizer_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model JSON written by `train`
    #[arg(long)]
    pub model: PathBuf,
    /// Featurizer JSON [default: <model>.featurizer.json]
    #[arg(long)]
    pub featurizer: Option<PathBuf>,
    /// Metrics JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Predictions CSV (item_id,label)
    #[arg(long)]
    pub predictions_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Categories to evaluate [default: all five]
    #[arg(long, value_delimiter = ',')]
    pub category: Vec<Category>,
    /// Report JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plain-text table
    #[arg(long)]
    pub table_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// Ratings CSV (item_id,gold,rater1,...,raterN)
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long)]
    pub category: Category,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotatorArgs {
    /// Ratings CSV (item_id,gold,rater1,...,raterN)
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long)]
    pub category: Category,
    /// Model predictions CSV (item_id,label)
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output directory
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of memes in the multimodal corpus
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write reference.csv, a 7001-row label-only corpus
    #[arg(long)]
    pub reference: bool,
}

/// Experiment settings as stored in a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub emotions: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub paraphrases: Option<PathBuf>,
    pub binary: bool,
    pub categories: Vec<Category>,
    pub pipeline: PipelineConfig,
    pub k: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: None,
            images: None,
            emotions: None,
            synonyms: None,
            pos_lexicon: None,
            paraphrases: None,
            binary: false,
            categories: Vec::new(),
            pipeline: PipelineConfig::default(),
            k: 10,
            seed: 0,
            jobs: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        let data = self.data.as_ref().ok_or_else(|| invalid("--data is required"))?;
        let files = [Some(data), self.emotions.as_ref(), self.synonyms.as_ref(), self.pos_lexicon.as_ref(), self.paraphrases.as_ref()];
        for f in files.into_iter().flatten() {
            if !f.is_file() {
                return Err(invalid(format!("file not found: {}", f.display())));
            }
        }
        if let Some(d) = &self.images {
            if !d.is_dir() {
                return Err(invalid(format!("image directory not found: {}", d.display())));
            }
        }
        let p = &self.pipeline;
        p.train.validate().map_err(invalid)?;
        if !(0.0..=1.0).contains(&p.rebalance.p_replace) {
            return Err(invalid("--p-replace must lie in [0, 1]"));
        }
        if p.rebalance.smote && p.rebalance.smote_k == 0 {
            return Err(invalid("--smote-k must be at least 1"));
        }
        let f = &p.features;
        if !(f.tfidf || f.stylistic || f.ambiguity || f.image || f.emotion) {
            return Err(invalid("at least one feature block must be enabled"));
        }
        if self.k < 2 {
            return Err(invalid("--k must be at least 2"));
        }
        Ok(())
    }
}

fn explicit(m: &ArgMatches, id: &str) -> bool {
    matches!(m.value_source(id), Some(ValueSource::CommandLine))
}

fn load_config(path: Option<&PathBuf>) -> CliResult<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let raw = std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&raw).map_err(|e| invalid(format!("{}: {e}", p.display())))
        }
    }
}

fn apply_data(cfg: &mut ExperimentConfig, a: &DataArgs, m: &ArgMatches) {
    macro_rules! path {
        ($field:ident) => {
            if a.$field.is_some() {
                cfg.$field = a.$field.clone();
            }
        };
    }
    path!(data);
    path!(images);
    path!(emotions);
    path!(synonyms);
    path!(pos_lexicon);
    path!(paraphrases);
    if explicit(m, "binary") {
        cfg.binary = a.binary;
    }
}

fn apply_pipeline(cfg: &mut PipelineConfig, a: &PipelineArgs, m: &ArgMatches) {
    macro_rules! set {
        ($section:ident . $field:ident) => {
            if explicit(m, stringify!($field)) {
                cfg.$section.$field = a.$field;
            }
        };
    }
    set!(features.tfidf);
    set!(features.stylistic);
    set!(features.ambiguity);
    set!(features.image);
    set!(features.emotion);
    set!(features.min_df);
    set!(rebalance.balanced);
    set!(rebalance.augment);
    set!(rebalance.p_replace);
    set!(rebalance.copies);
    set!(rebalance.smote);
    set!(rebalance.smote_k);
    set!(rebalance.smote_dense_only);
    set!(train.lambda);
    set!(train.learning_rate);
    set!(train.max_iters);
    set!(train.tol);
}

fn apply_run(cfg: &mut ExperimentConfig, a: &RunArgs, m: &ArgMatches) {
    if explicit(m, "seed") {
        cfg.seed = a.seed;
    }
    if explicit(m, "k") {
        cfg.k = a.k;
    }
    if explicit(m, "jobs") {
        cfg.jobs = a.jobs;
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| failed(format!("{}: {e}", dir.display())))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(failed(format!("{}: {e}", path.display())));
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(failed)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn load_dataset(cfg: &ExperimentConfig) -> CliResult<Dataset> {
    let data = cfg.data.as_ref().ok_or_else(|| invalid("--data is required"))?;
    let d = Dataset::load(data, cfg.images.as_deref()).map_err(invalid)?;
    if cfg.binary {
        corpus::collapse_to_binary(&d).map_err(invalid)
    } else {
        Ok(d)
    }
}

fn load_resources(cfg: &ExperimentConfig) -> CliResult<Resources> {
    let mut res = Resources::default();
    if let Some(p) = &cfg.pos_lexicon {
        res.pos = PosLexicon::load(p).map_err(invalid)?;
    }
    if let Some(p) = &cfg.synonyms {
        res.synonyms = SynonymLexicon::load(p).map_err(invalid)?;
    }
    if let Some(p) = &cfg.paraphrases {
        res.paraphrases = ParaphraseLexicon::load(p).map_err(invalid)?;
    }
    if let Some(p) = &cfg.emotions {
        res.emotions = EmotionTable::load(p).map_err(invalid)?;
    }
    Ok(res)
}

fn prepare(cfg: &ExperimentConfig) -> CliResult<(PreparedCorpus, Resources)> {
    cfg.validate()?;
    let res = load_resources(cfg)?;
    let d = load_dataset(cfg)?;
    let prepared = pipeline::prepare(d, &res).map_err(|e| match e {
        Error::Image(_) | Error::Text(_) => invalid(e),
        other => failed(other),
    })?;
    Ok((prepared, res))
}

fn categories_or_all(cats: &[Category]) -> Vec<Category> {
    if cats.is_empty() {
        Category::ALL.to_vec()
    } else {
        cats.to_vec()
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    let sub = matches.subcommand().map(|(_, m)| m).expect("subcommand required");
    match dispatch(cli.command, sub) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, m: &ArgMatches) -> CliResult<()> {
    match cmd {
        Command::Stats(a) => stats(a),
        Command::Featurize(a) => featurize(a, m),
        Command::Train(a) => train(a, m),
        Command::Eval(a) => eval(a, m),
        Command::Cv(a) => cv(a, m, false),
        Command::Ablate(a) => cv(a, m, true),
        Command::Kappa(a) => kappa(a),
        Command::AnnotatorReport(a) => annotator(a),
        Command::GenFixtures(a) => gen_fixtures(a),
    }
}

fn stats(a: StatsArgs) -> CliResult<()> {
    let mut d = Dataset::load(&a.data, None).map_err(invalid)?;
    if a.binary {
        d = corpus::collapse_to_binary(&d).map_err(invalid)?;
    }
    let report = corpus::distribution_report(&d).map_err(invalid)?;
    let rows: Vec<Vec<String>> = report
        .categories
        .iter()
        .flat_map(|(cat, levels)| {
            levels.iter().map(move |l| vec![cat.to_string(), l.level.clone(), l.count.to_string(), format!("{:.2}", l.pct)])
        })
        .collect();
    let headers = ["Category", "Tag", "Samples", "Percentage(%)"].map(String::from);
    match &a.out {
        Some(out) => {
            print!("{}", tables::render(&headers, &rows));
            write_json(out, &report)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&report).map_err(failed)?),
    }
    Ok(())
}

fn featurize(a: FeaturizeArgs, m: &ArgMatches) -> CliResult<()> {
    let mut cfg = load_config(a.data.config.as_ref())?;
    apply_data(&mut cfg, &a.data, m);
    let (prepared, _) = prepare(&cfg)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id"];
    header.extend(StylisticFeatures::NAMES);
    header.extend(AmbiguityFeatures::NAMES);
    header.extend(ImageFeatureVector::NAMES);
    w.write_record(&header).map_err(failed)?;
    for (s, p) in prepared.dataset.samples.iter().zip(&prepared.samples) {
        let mut row = vec![s.id.clone()];
        row.extend(
            p.stylistic
                .to_array()
                .iter()
                .chain(&p.ambiguity.to_array())
                .chain(&p.image.to_array())
                .map(|x| x.to_string()),
        );
        w.write_record(&row).map_err(failed)?;
    }
    let bytes = w.into_inner().map_err(failed)?;
    write_atomic(&a.out, &bytes)?;
    println!("wrote {} rows to {}", prepared.samples.len(), a.out.display());
    Ok(())
}

fn featurizer_path(model: &Path, explicit: Option<&PathBuf>) -> PathBuf {
    explicit.cloned().unwrap_or_else(|| {
        let mut s = model.as_os_str().to_owned();
        s.push(".featurizer.json");
        PathBuf::from(s)
    })
}

fn train(a: TrainArgs, m: &ArgMatches) -> CliResult<()> {
    let mut cfg = load_config(a.data.config.as_ref())?;
    apply_data(&mut cfg, &a.data, m);
    apply_pipeline(&mut cfg.pipeline, &a.pipeline, m);
    if explicit(m, "seed") {
        cfg.seed = a.seed;
    }
    let category = a
        .category
        .or_else(|| cfg.categories.first().copied())
        .ok_or_else(|| invalid("--category is required"))?;
    let (prepared, res) = prepare(&cfg)?;
    let all: Vec<usize> = (0..prepared.samples.len()).collect();
    let trained = pipeline::train(&prepared, &all, category, &cfg.pipeline, &res, cfg.seed, None).map_err(failed)?;
    write_json(&a.out, &trained.model)?;
    write_json(&featurizer_path(&a.out, a.featurizer_out.as_ref()), &trained.featurizer)?;
    println!(
        "{category}: {} classes, {} features, final loss {:.6}",
        trained.model.k, trained.model.d, trained.model.final_loss
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    category: Category,
    n: usize,
    accuracy: f64,
    macro_f1: f64,
    per_class: BTreeMap<String, evaluation::ClassScores>,
}

fn eval(a: EvalArgs, m: &ArgMatches) -> CliResult<()> {
    let mut cfg = load_config(a.data.config.as_ref())?;
    apply_data(&mut cfg, &a.data, m);
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())));
    let model: LRModel = serde_json::from_str(&read(&a.model)?).map_err(invalid)?;
    let featurizer: Featurizer =
        serde_json::from_str(&read(&featurizer_path(&a.model, a.featurizer.as_ref()))?).map_err(invalid)?;
    if featurizer.dim() != model.d {
        return Err(invalid("model and featurizer dimensions differ"));
    }
    let (prepared, _) = prepare(&cfg)?;
    let category = featurizer.category;
    let schema = prepared.dataset.schema(category).clone();
    if schema.len() != model.k {
        return Err(invalid(format!("model has {} classes, corpus schema has {}", model.k, schema.len())));
    }
    let trained = TrainedPipeline { featurizer, model };
    let refs: Vec<_> = prepared.samples.iter().collect();
    let pred = trained.predict(&refs).map_err(failed)?;
    let gold = prepared.dataset.labels(category);
    let metrics = evaluation::score_labels(&gold, &pred, schema.len()).map_err(failed)?;
    let out = EvalOutput {
        category,
        n: gold.len(),
        accuracy: metrics.accuracy,
        macro_f1: metrics.macro_f1,
        per_class: schema.levels.iter().cloned().zip(metrics.per_class.iter().copied()).collect(),
    };
    println!("{category}: macro-F1 {:.2}%  accuracy {:.2}%", 100.0 * out.macro_f1, 100.0 * out.accuracy);
    if let Some(p) = &a.out {
        write_json(p, &out)?;
    }
    if let Some(p) = &a.predictions_out {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["item_id", "label"]).map_err(failed)?;
        for (s, &y) in prepared.dataset.samples.iter().zip(&pred) {
            w.write_record([s.id.as_str(), schema.level_name(y)]).map_err(failed)?;
        }
        write_atomic(p, &w.into_inner().map_err(failed)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CvOutput<'a> {
    config: &'a ExperimentConfig,
    reports: Vec<evaluation::CvReport>,
}

#[derive(Serialize)]
struct AblationOutput<'a> {
    config: &'a ExperimentConfig,
    rows: Vec<evaluation::AblationRow>,
}

fn cv(a: CvArgs, m: &ArgMatches, ablate: bool) -> CliResult<()> {
    let mut cfg = load_config(a.data.config.as_ref())?;
    apply_data(&mut cfg, &a.data, m);
    apply_pipeline(&mut cfg.pipeline, &a.pipeline, m);
    apply_run(&mut cfg, &a.run, m);
    if !a.category.is_empty() {
        cfg.categories = a.category.clone();
    }
    let (prepared, res) = prepare(&cfg)?;
    if cfg.k > prepared.samples.len() {
        return Err(invalid(format!("--k {} exceeds corpus size {}", cfg.k, prepared.samples.len())));
    }
    let cats = categories_or_all(&cfg.categories);
    let opts = CvOptions {
        jobs: cfg.jobs,
        observer: None,
    };
    let (json, table) = if ablate {
        let rows = evaluation::ablation(&prepared, &cats, &cfg.pipeline, &res, cfg.k, cfg.seed, opts).map_err(failed)?;
        let table = tables::ablation_table(&rows);
        (serde_json::to_string_pretty(&AblationOutput { config: &cfg, rows }).map_err(failed)?, table)
    } else {
        let reports = cats
            .iter()
            .map(|&c| evaluation::cross_validate(&prepared, c, &cfg.pipeline, &res, cfg.k, cfg.seed, opts))
            .collect::<Result<Vec<_>, _>>()
            .map_err(failed)?;
        let table = tables::cv_table("Logistic Regression", &reports);
        (serde_json::to_string_pretty(&CvOutput { config: &cfg, reports }).map_err(failed)?, table)
    };
    print!("{table}");
    if let Some(p) = &a.out {
        write_atomic(p, format!("{json}\n").as_bytes())?;
    }
    if let Some(p) = &a.table_out {
        write_atomic(p, table.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct KappaOutput {
    category: Category,
    items: usize,
    raters: usize,
    kappa: f64,
}

fn kappa(a: KappaArgs) -> CliResult<()> {
    let schema = corpus::LabelSchema::graded(a.category);
    let f = RatingsFile::load(&a.ratings, &schema).map_err(invalid)?;
    let kappa = evaluation::randolph_kappa(&f.ratings).map_err(invalid)?;
    println!("{}: free-marginal kappa {kappa:.4} ({} items, {} raters)", a.category, f.ratings.n_items(), f.ratings.n_raters());
    if let Some(p) = &a.out {
        write_json(
            p,
            &KappaOutput {
                category: a.category,
                items: f.ratings.n_items(),
                raters: f.ratings.n_raters(),
                kappa,
            },
        )?;
    }
    Ok(())
}

fn annotator(a: AnnotatorArgs) -> CliResult<()> {
    let schema = corpus::LabelSchema::graded(a.category);
    let f = RatingsFile::load(&a.ratings, &schema).map_err(invalid)?;
    let mut rdr = csv::Reader::from_path(&a.predictions).map_err(invalid)?;
    let mut preds: BTreeMap<String, usize> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(invalid)?;
        let label = rec.get(1).unwrap_or("").trim();
        let idx = schema
            .level_index(label)
            .ok_or_else(|| invalid(format!("unknown {} label `{label}` in predictions", a.category)))?;
        preds.insert(rec.get(0).unwrap_or("").trim().to_string(), idx);
    }
    let model_preds = f
        .item_ids
        .iter()
        .map(|id| preds.get(id).copied().ok_or_else(|| invalid(format!("no prediction for item `{id}`"))))
        .collect::<CliResult<Vec<_>>>()?;
    let report = evaluation::annotator_report(&f.ratings, &f.gold, &model_preds).map_err(invalid)?;
    print!("{}", tables::annotator_table(a.category, &f.rater_names, &report));
    if let Some(p) = &a.out {
        write_json(p, &report)?;
    }
    Ok(())
}

fn gen_fixtures(a: GenArgs) -> CliResult<()> {
    let paths = fixtures::generate_multimodal(&a.out_dir, a.n, a.seed).map_err(|e| match e {
        Error::Config(_) => invalid(e),
        other => failed(other),
    })?;
    println!("corpus: {}", paths.corpus.display());
    println!("images: {}", paths.images.display());
    if a.reference {
        let p = a.out_dir.join("reference.csv");
        fixtures::write_reference(&p, a.seed).map_err(failed)?;
        println!("reference: {}", p.display());
    }
    Ok(())
}
