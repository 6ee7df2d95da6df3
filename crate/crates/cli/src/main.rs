//! Command-line pipeline: ingest or synthesize a dataset, build rating
//! and similarity matrices, train factor models, and run experiments.
//!
//! Exit codes: 0 success, 2 input/validation error, 3 numeric failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use feedrec_core::config::{read_stop_words, RunConfig};
use feedrec_core::data::{
    generate_synthetic, load_dataset, write_dataset, Dataset, SyntheticScale,
};
use feedrec_core::error::ProfileError;
use feedrec_core::eval::{
    report_csv, run_experiment_grid, split, topk_f1, MetricReport, ModelKind,
};
use feedrec_core::factor::{load_model, save_model, train};
use feedrec_core::profile::{
    build_rating_matrix, category_coverage, Category, ProfileSelector, WeightTable,
};
use feedrec_core::similarity::{build_similarity, SimilarityMatrix};
use feedrec_core::text::build_tfidf;
use feedrec_core::{RatingMatrix64, Scalar};

#[derive(Parser)]
#[command(
    name = "feedrec",
    version,
    about = "Implicit-feedback content recommender: weighted profiles, matrix factorization, and a content-similarity hybrid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and print its shape and per-category coverage
    Ingest(IngestArgs),
    /// Generate a deterministic synthetic dataset
    Synth(SynthArgs),
    /// Build a rating matrix and write it as user_id,post_id,rating CSV
    Profiles(ProfilesArgs),
    /// Build the sparse item-similarity matrix from post texts
    Similarity(SimilarityArgs),
    /// Train a factor model and write the model and loss files
    Train(TrainArgs),
    /// Print top-k unseen posts for one user from a trained model
    Recommend(RecommendArgs),
    /// Train and score a single configuration
    Evaluate(EvaluateArgs),
    /// Run the full selector x model experiment grid
    Experiment(ExperimentArgs),
}

enum CliError {
    Core(feedrec_core::Error),
    Io { path: String, message: String },
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
            CliError::Usage(message) => write!(f, "{message}"),
        }
    }
}

impl<E: Into<feedrec_core::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Profiles(args) => cmd_profiles(args),
        Command::Similarity(args) => cmd_similarity(args),
        Command::Train(args) => cmd_train(args),
        Command::Recommend(args) => cmd_recommend(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

// -------------------------------------------------------------------
// Shared flag groups; every flag overrides the corresponding config key.

#[derive(Args)]
struct ConfigArg {
    /// Key-value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig, CliError> {
        match &self.config {
            Some(path) => Ok(RunConfig::from_file(path)?),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Args)]
struct HpArgs {
    /// Latent rank
    #[arg(long)]
    d: Option<usize>,
    /// Frobenius regularization strength
    #[arg(long)]
    lambda: Option<f64>,
    /// Similarity regularization strength (0 = basic model)
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Seed for factor initialization and pair sampling
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    init_scale: Option<f64>,
    /// Zero-similarity pairs sampled per item for the hybrid objective
    #[arg(long)]
    zero_sample_per_item: Option<usize>,
    /// Sum the similarity term over the full item grid (small data only)
    #[arg(long)]
    exact_sim_pairs: Option<bool>,
}

impl HpArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.d {
            cfg.d = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.init_scale {
            cfg.init_scale = v;
        }
        if let Some(v) = self.zero_sample_per_item {
            cfg.zero_sample_per_item = v;
        }
        if let Some(v) = self.exact_sim_pairs {
            cfg.exact_sim_pairs = v;
        }
    }
}

#[derive(Args)]
struct NormArgs {
    /// none | log1p_minmax | minmax
    #[arg(long)]
    norm_method: Option<String>,
    #[arg(long)]
    rating_min: Option<f64>,
    #[arg(long)]
    rating_max: Option<f64>,
}

impl NormArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(v) = &self.norm_method {
            cfg.set("norm_method", v)?;
        }
        if let Some(v) = self.rating_min {
            cfg.rating_min = v;
        }
        if let Some(v) = self.rating_max {
            cfg.rating_max = v;
        }
        Ok(())
    }
}

#[derive(Args)]
struct SimBuildArgs {
    /// Neighbors kept per item
    #[arg(long)]
    sim_top_k: Option<usize>,
    /// Minimum cosine a kept pair must exceed
    #[arg(long)]
    sim_threshold: Option<f64>,
    /// Store the unit diagonal (set false to ablate it)
    #[arg(long)]
    sim_diagonal: Option<bool>,
    /// Stop-word file, one word per line
    #[arg(long)]
    stop_words: Option<PathBuf>,
}

impl SimBuildArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.sim_top_k {
            cfg.sim_top_k = v;
        }
        if let Some(v) = self.sim_threshold {
            cfg.sim_threshold = v;
        }
        if let Some(v) = self.sim_diagonal {
            cfg.sim_diagonal = v;
        }
        if let Some(v) = &self.stop_words {
            cfg.stop_words = Some(v.clone());
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    /// Held-out items at or above this true rating count as relevant
    #[arg(long)]
    relevance_threshold: Option<f64>,
    /// Ranking depth for precision/recall/F1
    #[arg(short, long)]
    k: Option<usize>,
    /// test | all-unrated
    #[arg(long)]
    candidates: Option<String>,
    /// Clamp predictions to the rating bounds for RMSE/MAE
    #[arg(long)]
    clamp: Option<bool>,
}

impl EvalArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(v) = self.test_fraction {
            cfg.test_fraction = v;
        }
        if let Some(v) = self.split_seed {
            cfg.split_seed = v;
        }
        if let Some(v) = self.relevance_threshold {
            cfg.relevance_threshold = Some(v);
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = &self.candidates {
            cfg.set("candidates", v)?;
        }
        if let Some(v) = self.clamp {
            cfg.clamp = v;
        }
        Ok(())
    }
}

fn load_weights(path: &Option<PathBuf>) -> Result<WeightTable, CliError> {
    match path {
        Some(path) => Ok(WeightTable::read_file(path)?),
        None => Ok(WeightTable::default_table()),
    }
}

fn selector_of(cfg: &RunConfig) -> ProfileSelector {
    cfg.selector
}

// -------------------------------------------------------------------

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    posts: PathBuf,
    /// interaction_type,weight,category file (defaults built in)
    #[arg(long)]
    weights: Option<PathBuf>,
}

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.events, &args.posts)?;
    if dataset.events().is_empty() {
        return Err(ProfileError::EmptyMatrix.into());
    }
    let weights = load_weights(&args.weights)?;
    let coverage = category_coverage(&dataset, &weights)?;
    println!("users:  {}", dataset.users().len());
    println!("posts:  {}", dataset.posts().len());
    println!("events: {}", dataset.events().len());
    println!("category   events    users");
    for category in Category::ALL {
        let row = coverage.row(category);
        println!("{:<10} {:>7} {:>8}", category.as_str(), row.events, row.users);
    }
    Ok(())
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out_events: PathBuf,
    #[arg(long)]
    out_posts: PathBuf,
    /// User count for a custom scale (default: the 250-user reference shape)
    #[arg(long)]
    users: Option<usize>,
    /// Post count for a custom scale
    #[arg(long)]
    post_count: Option<usize>,
    /// Target fraction of the user x post grid with ratings
    #[arg(long)]
    density: Option<f64>,
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let custom = [
        args.users.is_some(),
        args.post_count.is_some(),
        args.density.is_some(),
    ];
    let scale = if custom.iter().any(|&c| c) {
        if !custom.iter().all(|&c| c) {
            return Err(CliError::Usage(
                "custom scales need --users, --post-count and --density together".into(),
            ));
        }
        SyntheticScale::structured(
            args.users.unwrap(),
            args.post_count.unwrap(),
            args.density.unwrap(),
        )
    } else {
        SyntheticScale::reference()
    };
    let dataset = generate_synthetic(args.seed, &scale)?;
    write_dataset(&dataset, &args.out_events, &args.out_posts)?;
    println!(
        "wrote {} users, {} posts, {} events (seed {})",
        dataset.users().len(),
        dataset.posts().len(),
        dataset.events().len(),
        args.seed
    );
    Ok(())
}

#[derive(Args)]
struct ProfilesArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    posts: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// all | direct | social | reading
    #[arg(long)]
    selector: Option<String>,
    #[command(flatten)]
    norm: NormArgs,
    #[arg(long)]
    out: PathBuf,
}

fn require_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let events = cfg
        .events
        .as_ref()
        .ok_or_else(|| CliError::Usage("an events file is required (--events)".into()))?;
    let posts = cfg
        .posts
        .as_ref()
        .ok_or_else(|| CliError::Usage("a posts file is required (--posts)".into()))?;
    Ok(load_dataset(events, posts)?)
}

fn cmd_profiles(args: ProfilesArgs) -> Result<(), CliError> {
    let mut cfg = args.config.load()?;
    if let Some(p) = args.events {
        cfg.events = Some(p);
    }
    if let Some(p) = args.posts {
        cfg.posts = Some(p);
    }
    if let Some(p) = args.weights {
        cfg.weights = Some(p);
    }
    if let Some(s) = &args.selector {
        cfg.set("selector", s)?;
    }
    args.norm.apply(&mut cfg)?;

    let dataset = require_dataset(&cfg)?;
    let weights = load_weights(&cfg.weights)?;
    let matrix = build_rating_matrix::<Scalar>(
        &dataset,
        &weights,
        selector_of(&cfg),
        &cfg.norm_spec(),
    )?;
    write_text(&args.out, &matrix.to_csv_string())?;
    println!(
        "wrote {} ratings ({} users x {} posts, selector {})",
        matrix.len(),
        matrix.num_users(),
        matrix.num_items(),
        cfg.selector
    );
    Ok(())
}

#[derive(Args)]
struct SimilarityArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    posts: Option<PathBuf>,
    #[command(flatten)]
    sim: SimBuildArgs,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_similarity(args: SimilarityArgs) -> Result<(), CliError> {
    let mut cfg = args.config.load()?;
    if let Some(p) = args.posts {
        cfg.posts = Some(p);
    }
    args.sim.apply(&mut cfg);
    let posts_path = cfg
        .posts
        .as_ref()
        .ok_or_else(|| CliError::Usage("a posts file is required (--posts)".into()))?;
    let posts = feedrec_core::data::read_posts_file(posts_path)?;
    let stop = match &cfg.stop_words {
        Some(path) => Some(read_stop_words(path)?),
        None => None,
    };
    let (vocabulary, profiles) = build_tfidf::<Scalar>(&posts, stop.as_ref());
    let sim = build_similarity(&profiles, cfg.sim_top_k, cfg.sim_threshold, cfg.sim_diagonal)?;
    sim.write_file(&args.out)?;
    println!(
        "wrote {} similarity entries for {} posts ({} vocabulary terms)",
        sim.entries().len(),
        sim.num_items(),
        vocabulary.len()
    );
    Ok(())
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Precomputed user_id,post_id,rating file (skips profile building)
    #[arg(long)]
    ratings: Option<PathBuf>,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    posts: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    selector: Option<String>,
    /// post_id_j,post_id_n,similarity file (required when alpha > 0,
    /// unless a posts file is given to build it from)
    #[arg(long)]
    similarity: Option<PathBuf>,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    hp: HpArgs,
    #[command(flatten)]
    sim: SimBuildArgs,
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long)]
    out_loss: Option<PathBuf>,
}

/// Rating matrix from a ratings file when given, otherwise from events
/// and posts through the profile builder.
fn resolve_matrix(cfg: &RunConfig) -> Result<RatingMatrix64, CliError> {
    if let Some(path) = &cfg.ratings {
        let raw = fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        return Ok(RatingMatrix64::from_csv_str(&raw)?);
    }
    let dataset = require_dataset(cfg)?;
    let weights = load_weights(&cfg.weights)?;
    Ok(build_rating_matrix::<Scalar>(
        &dataset,
        &weights,
        selector_of(cfg),
        &cfg.norm_spec(),
    )?)
}

/// Similarity matrix aligned to `items`: read from a file when given,
/// otherwise built from the posts file.
fn resolve_similarity(
    cfg: &RunConfig,
    items: &[String],
) -> Result<SimilarityMatrix<Scalar>, CliError> {
    if let Some(path) = &cfg.similarity {
        return Ok(SimilarityMatrix::read_file(path, items)?);
    }
    let posts_path = cfg.posts.as_ref().ok_or_else(|| {
        CliError::Usage(
            "alpha > 0 needs --similarity or a posts file to build one from".into(),
        )
    })?;
    let posts = feedrec_core::data::read_posts_file(posts_path)?;
    let stop = match &cfg.stop_words {
        Some(path) => Some(read_stop_words(path)?),
        None => None,
    };
    let (_, profiles) = build_tfidf::<Scalar>(&posts, stop.as_ref());
    let full = build_similarity(&profiles, cfg.sim_top_k, cfg.sim_threshold, cfg.sim_diagonal)?;
    Ok(full.restrict(items))
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let mut cfg = args.config.load()?;
    if let Some(p) = args.ratings {
        cfg.ratings = Some(p);
    }
    if let Some(p) = args.events {
        cfg.events = Some(p);
    }
    if let Some(p) = args.posts {
        cfg.posts = Some(p);
    }
    if let Some(p) = args.weights {
        cfg.weights = Some(p);
    }
    if let Some(p) = args.similarity {
        cfg.similarity = Some(p);
    }
    if let Some(s) = &args.selector {
        cfg.set("selector", s)?;
    }
    args.norm.apply(&mut cfg)?;
    args.hp.apply(&mut cfg);
    args.sim.apply(&mut cfg);

    let matrix = resolve_matrix(&cfg)?;
    let hp = cfg.hyperparams::<Scalar>();
    let sim = if cfg.alpha > 0.0 {
        Some(resolve_similarity(&cfg, matrix.items())?)
    } else {
        None
    };
    let (model, report) = train(&matrix, sim.as_ref(), &hp)?;
    save_model(&model, &args.out_model, &cfg.echo())?;
    if let Some(out_loss) = &args.out_loss {
        write_text(out_loss, &report.to_loss_csv())?;
    }
    println!(
        "trained {} ({} epochs recorded, final {} = {:.6}, {:.2}s{})",
        args.out_model.display(),
        report.losses.len() - 1,
        report.objective,
        report.final_loss,
        report.wall_seconds,
        if report.early_stopped {
            ", stopped early"
        } else {
            ""
        }
    );
    Ok(())
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    user: String,
    #[arg(short, long, default_value_t = 10)]
    k: usize,
}

fn cmd_recommend(args: RecommendArgs) -> Result<(), CliError> {
    let (model, _config) = load_model::<Scalar>(&args.model)?;
    let user = model
        .user_position(&args.user)
        .ok_or_else(|| CliError::Usage(format!("unknown user `{}`", args.user)))?;
    if model.rated_items(user).is_empty() {
        eprintln!(
            "warning: user `{}` has no training ratings; scores reflect initialization only",
            args.user
        );
    }
    for (item, score) in model.recommend(user, args.k)? {
        println!("{}\t{}", model.items()[item], score);
    }
    Ok(())
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    ratings: Option<PathBuf>,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    posts: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    selector: Option<String>,
    #[arg(long)]
    similarity: Option<PathBuf>,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    hp: HpArgs,
    #[command(flatten)]
    sim: SimBuildArgs,
    #[command(flatten)]
    eval: EvalArgs,
    /// Also write the one-row report here
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let mut cfg = args.config.load()?;
    if let Some(p) = args.ratings {
        cfg.ratings = Some(p);
    }
    if let Some(p) = args.events {
        cfg.events = Some(p);
    }
    if let Some(p) = args.posts {
        cfg.posts = Some(p);
    }
    if let Some(p) = args.weights {
        cfg.weights = Some(p);
    }
    if let Some(p) = args.similarity {
        cfg.similarity = Some(p);
    }
    if let Some(s) = &args.selector {
        cfg.set("selector", s)?;
    }
    args.norm.apply(&mut cfg)?;
    args.hp.apply(&mut cfg);
    args.sim.apply(&mut cfg);
    args.eval.apply(&mut cfg)?;

    let matrix = resolve_matrix(&cfg)?;
    let hp = cfg.hyperparams::<Scalar>();
    let (train_mx, test_mx) = split(&matrix, &cfg.split_spec())?;
    let sim = if cfg.alpha > 0.0 {
        Some(resolve_similarity(&cfg, matrix.items())?)
    } else {
        None
    };
    let (model, _) = train(&train_mx, sim.as_ref(), &hp)?;

    let norm = cfg.norm_spec::<Scalar>();
    let mut pairs = Vec::with_capacity(test_mx.len());
    for &(u, i, truth) in test_mx.entries() {
        let mut predicted = model.predict(u, i)?;
        if cfg.clamp {
            predicted = predicted.max(norm.rating_min).min(norm.rating_max);
        }
        pairs.push((truth, predicted));
    }
    let (rmse, mae) = feedrec_core::eval::rmse_mae(&pairs)?;
    let rule = cfg.relevance_rule::<Scalar>()?;
    let (precision, recall, f1) =
        topk_f1(&model, &train_mx, &test_mx, cfg.k, &rule, cfg.candidates)?;
    let report = MetricReport {
        selector: cfg.selector,
        model: if cfg.alpha > 0.0 {
            ModelKind::Hybrid
        } else {
            ModelKind::Basic
        },
        d: hp.d,
        lambda: hp.lambda,
        alpha: hp.alpha,
        rmse,
        mae,
        precision_at_k: precision,
        recall_at_k: recall,
        f1_at_k: f1,
        k: cfg.k,
        n_test_pairs: test_mx.len(),
    };
    let csv = report_csv(std::slice::from_ref(&report));
    print!("{csv}");
    if let Some(out) = &args.out {
        write_text(out, &csv)?;
    }
    Ok(())
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    posts: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Comma-separated subset of all,direct,social,reading
    #[arg(long)]
    selectors: Option<String>,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    hp: HpArgs,
    #[command(flatten)]
    sim: SimBuildArgs,
    #[command(flatten)]
    eval: EvalArgs,
    /// Also write the grid CSV here
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let mut cfg = args.config.load()?;
    if let Some(p) = args.events {
        cfg.events = Some(p);
    }
    if let Some(p) = args.posts {
        cfg.posts = Some(p);
    }
    if let Some(p) = args.weights {
        cfg.weights = Some(p);
    }
    if let Some(s) = &args.selectors {
        cfg.set("selectors", s)?;
    }
    args.norm.apply(&mut cfg)?;
    args.hp.apply(&mut cfg);
    args.sim.apply(&mut cfg);
    args.eval.apply(&mut cfg)?;

    let dataset = require_dataset(&cfg)?;
    let weights = load_weights(&cfg.weights)?;
    let stop = match &cfg.stop_words {
        Some(path) => Some(read_stop_words(path)?),
        None => None,
    };
    let grid = cfg.grid_config::<Scalar>(stop)?;
    let reports = run_experiment_grid(&dataset, &weights, &grid)?;
    let csv = report_csv(&reports);
    print!("{csv}");
    if let Some(out) = &args.out {
        write_text(out, &csv)?;
    }
    Ok(())
}
