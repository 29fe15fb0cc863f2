use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "coldrec", version, about = "Cold-start game recommendation benchmark")]
pub struct Cli {
    /// Worker threads for parallel fitting and evaluation.
    #[arg(long, global = true, env = "COLDREC_THREADS")]
    pub threads: Option<usize>,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (likes.csv, tags.csv, questions.csv).
    Generate(GenerateArgs),
    /// Split a dataset into training likes and four validation sets.
    Split(SplitArgs),
    /// Fit one model and save it as JSON.
    Fit(FitArgs),
    /// Score a model on one setting of a split.
    Evaluate(EvaluateArgs),
    /// Tune, fit and score every model on all four settings.
    Benchmark(BenchmarkArgs),
    /// Top games for one player, as TSV rank, game_id, score.
    Recommend(RecommendArgs),
    /// Strongest coefficients of a fitted model.
    Interpret(InterpretArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// File of key=value lines (n, m, r, s, density, rank, noise, seed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated key=value overrides, applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE,...")]
    pub overrides: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SplitOptions {
    #[arg(long, default_value_t = 0.25)]
    pub test_game_fraction: f64,
    #[arg(long, default_value_t = 0.25)]
    pub test_player_fraction: f64,
    #[arg(long, default_value_t = 0.20)]
    pub setting1_fraction: f64,
    /// Likes kept in training for each Setting-1 player.
    #[arg(long, default_value_t = 3)]
    pub seed_likes: usize,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for the split files.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub options: SplitOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Mvn,
    Knn,
    Svd,
    Tags,
    Questions,
    Interactions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Similarity {
    Cos,
    Phi,
}

/// Which model, and how to fit it when no saved file is given.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelChoice,
    /// Use a saved model instead of fitting one.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Ridge penalty for SVD and the content models.
    #[arg(long, default_value_t = 8.0)]
    pub lambda: f64,
    /// Latent dimension for SVD.
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    /// ALS iterations for SVD.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// kNN similarity.
    #[arg(long, value_enum, default_value_t = Similarity::Cos)]
    pub similarity: Similarity,
    /// kNN neighbourhood size; defaults to every game.
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// MVN on the correlation matrix with zero mean.
    #[arg(long)]
    pub correlation: bool,
    /// Fit content models on popularity-standardized likes.
    #[arg(long)]
    pub popularity_free: bool,
    /// Seed for ALS initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Fit on the training part of this split instead of the whole dataset.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the interaction matrix as CSV (interactions only).
    #[arg(long)]
    pub export_csv: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset directory (features for every player and game).
    #[arg(long)]
    pub data: PathBuf,
    /// Split directory.
    #[arg(long)]
    pub split: PathBuf,
    /// Setting 1 to 4.
    #[arg(long, default_value_t = 1)]
    pub setting: usize,
    #[arg(long, default_value_t = 20)]
    pub precision_k: usize,
    /// Include per-player metrics in the JSON.
    #[arg(long)]
    pub per_player: bool,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Markdown,
    Json,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Dataset directory.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,
    /// Generate the dataset from comma-separated key=value settings.
    #[arg(long, value_name = "KEY=VALUE,...")]
    pub synthetic: Option<String>,
    /// Seed for the split, tuning and the random baseline; also the
    /// generator seed unless --synthetic sets one.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// SVD latent dimensions.
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
    /// Ridge penalties for SVD and the content models.
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// ALS iterations per fit.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Smaller grids and fewer ALS iterations; explicit grids still win.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 20)]
    pub precision_k: usize,
    /// Add the correlation-matrix MVN variant.
    #[arg(long)]
    pub with_correlation_mvn: bool,
    /// Fit content models on popularity-standardized likes.
    #[arg(long)]
    pub popularity_free: bool,
    /// Replace tag indicators with unit-norm PCA profiles.
    #[arg(long, value_name = "DIMS")]
    pub tag_pca: Option<usize>,
    /// Record fit wall-clock times in the JSON.
    #[arg(long)]
    pub timings: bool,
    /// Directory for results.json and results.md.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = TableFormat::Markdown)]
    pub format: TableFormat,
    #[command(flatten)]
    pub split: SplitOptions,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub player: String,
    #[arg(long, default_value_t = 20)]
    pub top: usize,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct InterpretArgs {
    /// Dataset directory, needed only when fitting on the fly.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Subject game (mvn, questions).
    #[arg(long)]
    pub game: Option<String>,
    /// Subject player (tags).
    #[arg(long)]
    pub player: Option<String>,
    /// Subject tag (interactions).
    #[arg(long)]
    pub tag: Option<String>,
    /// Rank every tag × question pair (interactions).
    #[arg(long)]
    pub global: bool,
    #[arg(long, default_value_t = 4)]
    pub top: usize,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub model: ModelArgs,
}
