//! End-to-end benchmark: split once, tune every model on an inner holdout
//! carved from the training likes, refit, and score all four settings.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cf::{AlsOptions, KnnModel, MvnModel, SimilarityKind, SvdModel};
use crate::content::{align_columns, popularity_normalize, InteractionModel, QuestionsModel, TagsModel};
use crate::data::{axis_index, Dataset};
use crate::error::{Error, Result};
use crate::linalg::pca_project;
use crate::metrics::{try_evaluate_player_set, EvalPlayer, MetricReport};
use crate::persist::SavedModel;
use crate::split::{capability_matrix, check_no_leakage, four_way_split, ModelKind, Setting, SplitBundle, SplitConfig};

/// Powers of two from 1 to 512.
pub const DEFAULT_LAMBDA_GRID: [f64; 10] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
pub const DEFAULT_K_GRID: [usize; 6] = [4, 8, 16, 32, 64, 128];

/// A model family together with its hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Random,
    Mvn { use_correlation: bool },
    Knn { kind: SimilarityKind, neighbors: Option<usize> },
    PureSvd { k_grid: Vec<usize> },
    Svd { k_grid: Vec<usize>, lambda_grid: Vec<f64> },
    Tags { lambda_grid: Vec<f64> },
    Questions { lambda_grid: Vec<f64> },
    TagsXQuestions { lambda_grid: Vec<f64> },
}

impl ModelSpec {
    /// Row label in the result tables.
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Random => "Random".into(),
            ModelSpec::Mvn { use_correlation: false } => "MVN".into(),
            ModelSpec::Mvn { use_correlation: true } => "MVN (corr)".into(),
            ModelSpec::Knn { kind, .. } => format!("kNN ({kind})"),
            ModelSpec::PureSvd { .. } => "PureSVD".into(),
            ModelSpec::Svd { .. } => "SVD".into(),
            ModelSpec::Tags { .. } => "Tags".into(),
            ModelSpec::Questions { .. } => "Questions".into(),
            ModelSpec::TagsXQuestions { .. } => "Tags X Questions".into(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Random => ModelKind::Random,
            ModelSpec::Mvn { .. } => ModelKind::Mvn,
            ModelSpec::Knn { .. } => ModelKind::Knn,
            ModelSpec::PureSvd { .. } | ModelSpec::Svd { .. } => ModelKind::Svd,
            ModelSpec::Tags { .. } => ModelKind::Tags,
            ModelSpec::Questions { .. } => ModelKind::Questions,
            ModelSpec::TagsXQuestions { .. } => ModelKind::TagsXQuestions,
        }
    }

    /// The setting the model is tuned on: the cold-start setting it was
    /// built for, or Setting 1 for collaborative models.
    pub fn tuning_setting(&self) -> Setting {
        match self.kind() {
            ModelKind::Tags => Setting::NewGames,
            ModelKind::Questions => Setting::NewPlayers,
            ModelKind::TagsXQuestions => Setting::NewNew,
            _ => Setting::KnownKnown,
        }
    }

    pub fn grid(&self) -> Vec<Hyper> {
        let lambdas = |grid: &[f64]| grid.iter().map(|&l| Hyper { k: None, lambda: Some(l) }).collect();
        match self {
            ModelSpec::Random | ModelSpec::Mvn { .. } => vec![Hyper::default()],
            ModelSpec::Knn { neighbors, .. } => vec![Hyper {
                k: *neighbors,
                lambda: None,
            }],
            ModelSpec::PureSvd { k_grid } => k_grid
                .iter()
                .map(|&k| Hyper {
                    k: Some(k),
                    lambda: Some(0.0),
                })
                .collect(),
            ModelSpec::Svd { k_grid, lambda_grid } => k_grid
                .iter()
                .flat_map(|&k| {
                    lambda_grid.iter().map(move |&l| Hyper {
                        k: Some(k),
                        lambda: Some(l),
                    })
                })
                .collect(),
            ModelSpec::Tags { lambda_grid }
            | ModelSpec::Questions { lambda_grid }
            | ModelSpec::TagsXQuestions { lambda_grid } => lambdas(lambda_grid),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let name = self.name();
        let check_lambdas = |grid: &[f64]| {
            if grid.is_empty() {
                return Err(Error::Config(format!("{name}: empty lambda grid")));
            }
            match grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                Some(bad) => Err(Error::Config(format!("{name}: lambda {bad} must be positive"))),
                None => Ok(()),
            }
        };
        let check_ks = |grid: &[usize]| {
            if grid.is_empty() || grid.contains(&0) {
                Err(Error::Config(format!("{name}: k grid must be non-empty and positive")))
            } else {
                Ok(())
            }
        };
        match self {
            ModelSpec::Random | ModelSpec::Mvn { .. } => Ok(()),
            ModelSpec::Knn { neighbors, .. } => match neighbors {
                Some(0) => Err(Error::Config(format!("{name}: neighbourhood size must be positive"))),
                _ => Ok(()),
            },
            ModelSpec::PureSvd { k_grid } => check_ks(k_grid),
            ModelSpec::Svd { k_grid, lambda_grid } => {
                check_ks(k_grid)?;
                check_lambdas(lambda_grid)
            }
            ModelSpec::Tags { lambda_grid }
            | ModelSpec::Questions { lambda_grid }
            | ModelSpec::TagsXQuestions { lambda_grid } => check_lambdas(lambda_grid),
        }
    }
}

/// One grid point. Unused coordinates are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub models: Vec<ModelSpec>,
    pub precision_k: usize,
    pub rng_seed: u64,
    /// Share of inner training players whose likes are cut to seeds for tuning.
    pub tuning_fraction: f64,
    pub als: AlsOptions,
    /// Fit content models on popularity-standardized likes.
    pub popularity_free: bool,
    /// Replace tag indicators with unit-norm PCA profiles of this dimension.
    pub tag_pca_dims: Option<usize>,
    /// Record wall-clock seconds per fit in the result.
    pub record_timings: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self::with_grids(&DEFAULT_K_GRID, &DEFAULT_LAMBDA_GRID)
    }
}

impl BenchmarkConfig {
    /// The full model line-up with the given SVD rank and lambda grids.
    pub fn with_grids(k_grid: &[usize], lambda_grid: &[f64]) -> Self {
        Self {
            models: vec![
                ModelSpec::Random,
                ModelSpec::Mvn { use_correlation: false },
                ModelSpec::Knn {
                    kind: SimilarityKind::Cosine,
                    neighbors: None,
                },
                ModelSpec::Knn {
                    kind: SimilarityKind::Phi,
                    neighbors: None,
                },
                ModelSpec::PureSvd {
                    k_grid: k_grid.to_vec(),
                },
                ModelSpec::Svd {
                    k_grid: k_grid.to_vec(),
                    lambda_grid: lambda_grid.to_vec(),
                },
                ModelSpec::Tags {
                    lambda_grid: lambda_grid.to_vec(),
                },
                ModelSpec::Questions {
                    lambda_grid: lambda_grid.to_vec(),
                },
                ModelSpec::TagsXQuestions {
                    lambda_grid: lambda_grid.to_vec(),
                },
            ],
            precision_k: 20,
            rng_seed: 0,
            tuning_fraction: 0.10,
            als: AlsOptions::default(),
            popularity_free: false,
            tag_pca_dims: None,
            record_timings: false,
        }
    }

    /// Small SVD grid for quick runs; the content models keep the full
    /// lambda grid since they are cheap to fit.
    pub fn quick() -> Self {
        let mut config = Self::with_grids(&[4, 8, 16], &DEFAULT_LAMBDA_GRID);
        for spec in &mut config.models {
            if let ModelSpec::Svd { lambda_grid, .. } = spec {
                *lambda_grid = vec![4.0, 16.0, 64.0];
            }
        }
        config.als.max_iters = 30;
        config
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("no models to benchmark".into()));
        }
        if self.precision_k == 0 {
            return Err(Error::Config("precision cutoff must be positive".into()));
        }
        if !(self.tuning_fraction > 0.0 && self.tuning_fraction < 1.0) {
            return Err(Error::Config(format!(
                "tuning fraction {} is not in (0,1)",
                self.tuning_fraction
            )));
        }
        if self.tag_pca_dims == Some(0) {
            return Err(Error::Config("PCA dimension must be positive".into()));
        }
        self.models.iter().try_for_each(ModelSpec::validate)
    }
}

/// Dense feature views over a dataset's axes.
#[derive(Debug, Clone)]
struct Features {
    game: DMatrix<f64>,
    game_names: Vec<String>,
    player: DMatrix<f64>,
    player_names: Vec<String>,
}

impl Features {
    fn raw(dataset: &Dataset) -> Self {
        Self {
            game: dataset.tags.to_dense(),
            game_names: dataset.tags.tag_names().to_vec(),
            player: dataset.questions.to_dense(),
            player_names: dataset.questions.question_ids().to_vec(),
        }
    }

    fn new(dataset: &Dataset, tag_pca_dims: Option<usize>) -> Result<Self> {
        let mut features = Self::raw(dataset);
        if let Some(dims) = tag_pca_dims {
            let dims = dims.min(features.game.nrows()).min(features.game.ncols());
            features.game = pca_project(&features.game, dims)?;
            features.game_names = (1..=dims).map(|d| format!("pc{d:02}")).collect();
        }
        Ok(features)
    }
}

fn rows_of(matrix: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    matrix.select_rows(rows)
}

fn indices(axis: &[String], ids: &[String], what: &'static str) -> Result<Vec<usize>> {
    ids.iter()
        .map(|id| {
            axis_index(axis, id).ok_or_else(|| Error::Unknown {
                what,
                name: id.clone(),
            })
        })
        .collect()
}

/// Everything needed to score a split: per-setting evaluation players and
/// feature rows, looked up once.
pub struct EvalContext<'a> {
    pub bundle: &'a SplitBundle,
    features: Features,
    /// Feature-matrix rows of the setting's player and game axes, by setting.
    player_rows: [Vec<usize>; 4],
    game_rows: [Vec<usize>; 4],
    /// Evaluation players and their positions on the setting's player axis.
    players: [Vec<EvalPlayer>; 4],
    slots: [Vec<usize>; 4],
}

impl<'a> EvalContext<'a> {
    /// `dataset` supplies features for every player and game in the split;
    /// its like matrix is never read.
    pub fn new(dataset: &Dataset, bundle: &'a SplitBundle) -> Result<Self> {
        Self::build(dataset, bundle, Features::raw(dataset))
    }

    fn build(dataset: &Dataset, bundle: &'a SplitBundle, features: Features) -> Result<Self> {
        let game_axis = dataset.tags.game_ids();
        let player_axis = dataset.questions.player_ids();
        let mut player_rows: [Vec<usize>; 4] = Default::default();
        let mut game_rows: [Vec<usize>; 4] = Default::default();
        let mut players: [Vec<EvalPlayer>; 4] = Default::default();
        let mut slots: [Vec<usize>; 4] = Default::default();
        let train = &bundle.train_likes;
        for setting in Setting::ALL {
            let s = setting.number() - 1;
            let (player_ids, game_ids) = bundle.axes(setting);
            player_rows[s] = indices(player_axis, player_ids, "player")?;
            game_rows[s] = indices(game_axis, game_ids, "game")?;

            let mut validation: Vec<Vec<usize>> = vec![Vec::new(); player_ids.len()];
            for (player, game) in bundle.validation(setting) {
                let slot = axis_index(player_ids, player).ok_or_else(|| {
                    Error::Alignment(format!("{setting} validation player {player} is off its axis"))
                })?;
                let j = axis_index(game_ids, game).ok_or_else(|| {
                    Error::Alignment(format!("{setting} validation game {game} is off its axis"))
                })?;
                validation[slot].push(j);
            }
            let candidates: Vec<usize> = match setting {
                Setting::KnownKnown => indices(player_ids, &bundle.setting1_player_ids, "player")?,
                _ => (0..player_ids.len()).collect(),
            };
            for slot in candidates {
                let exclude = if setting == Setting::KnownKnown {
                    train.liked_games(slot)
                } else {
                    Vec::new()
                };
                players[s].push(EvalPlayer {
                    player_id: player_ids[slot].clone(),
                    validation: std::mem::take(&mut validation[slot]),
                    exclude,
                });
                slots[s].push(slot);
            }
        }
        Ok(Self {
            bundle,
            features,
            player_rows,
            game_rows,
            players,
            slots,
        })
    }

    pub fn eval_players(&self, setting: Setting) -> &[EvalPlayer] {
        &self.players[setting.number() - 1]
    }

    fn game_features(&self, setting: Setting) -> DMatrix<f64> {
        rows_of(&self.features.game, &self.game_rows[setting.number() - 1])
    }

    fn player_features(&self, setting: Setting) -> DMatrix<f64> {
        rows_of(&self.features.player, &self.player_rows[setting.number() - 1])
    }
}

/// Per-setting scorer over the setting's player axis.
enum Scorer<'m> {
    Matrix(DMatrix<f64>),
    Mvn(&'m MvnModel, &'m SplitBundle),
    Knn(&'m KnnModel, &'m SplitBundle),
    Svd(&'m SvdModel),
    Random { seed: u64, setting: Setting, games: usize },
}

impl Scorer<'_> {
    fn scores(&self, slot: usize) -> Result<Vec<f64>> {
        match self {
            Scorer::Matrix(matrix) => Ok(matrix.row(slot).iter().copied().collect()),
            Scorer::Mvn(model, bundle) => Ok(model.predict(&bundle.train_likes.liked_games(slot))?.as_slice().to_vec()),
            Scorer::Knn(model, bundle) => {
                let row: Vec<f64> = bundle.train_likes.row(slot).iter().map(|&v| f64::from(v)).collect();
                Ok(model.predict(&row)?.as_slice().to_vec())
            }
            Scorer::Svd(model) => Ok(model.player_scores(slot)?.as_slice().to_vec()),
            Scorer::Random { seed, setting, games } => Ok(random_scores(*seed, *setting, slot, *games)),
        }
    }
}

/// Uniform scores from a stream keyed by setting and player position.
pub fn random_scores(seed: u64, setting: Setting, slot: usize, games: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((setting.number() as u64) << 40) | slot as u64);
    (0..games).map(|_| rng.random::<f64>()).collect()
}

fn unsupported(kind: &str, setting: Setting) -> Error {
    Error::Config(format!("{kind} model cannot score {setting}"))
}

fn check_axis(model_axis: &[String], split_axis: &[String], what: &str) -> Result<()> {
    if model_axis == split_axis {
        Ok(())
    } else {
        Err(Error::Alignment(format!(
            "model {what} axis does not match the split's training {what}s"
        )))
    }
}

fn scorer<'m>(model: &'m SavedModel, ctx: &'m EvalContext<'_>, setting: Setting) -> Result<Scorer<'m>> {
    let bundle = ctx.bundle;
    let kind = model.kind_name();
    let model_kind: ModelKind = kind.parse()?;
    if !capability_matrix(model_kind).contains(&setting) {
        return Err(unsupported(kind, setting));
    }
    Ok(match model {
        SavedModel::Mvn(m) => {
            check_axis(&m.game_ids, &bundle.train_game_ids, "game")?;
            Scorer::Mvn(m, bundle)
        }
        SavedModel::Knn(m) => {
            check_axis(&m.game_ids, &bundle.train_game_ids, "game")?;
            Scorer::Knn(m, bundle)
        }
        SavedModel::Svd(m) => {
            check_axis(&m.game_ids, &bundle.train_game_ids, "game")?;
            check_axis(&m.player_ids, &bundle.train_player_ids, "player")?;
            Scorer::Svd(m)
        }
        SavedModel::Tags(m) => {
            check_axis(&m.player_ids, &bundle.train_player_ids, "player")?;
            let xt = align_columns(&ctx.game_features(setting), &ctx.features.game_names, &m.tag_names, "tag")?;
            Scorer::Matrix(m.predict_dense(&xt))
        }
        SavedModel::Questions(m) => {
            check_axis(&m.game_ids, &bundle.train_game_ids, "game")?;
            let xq = align_columns(
                &ctx.player_features(setting),
                &ctx.features.player_names,
                &m.question_ids,
                "question",
            )?;
            Scorer::Matrix(m.predict_dense(&xq))
        }
        SavedModel::Interactions(m) => {
            let xq = align_columns(
                &ctx.player_features(setting),
                &ctx.features.player_names,
                &m.question_ids,
                "question",
            )?;
            let xt = align_columns(&ctx.game_features(setting), &ctx.features.game_names, &m.tag_names, "tag")?;
            Scorer::Matrix(m.predict_dense(&xq, &xt))
        }
    })
}

fn run_scorer(scorer: &Scorer<'_>, ctx: &EvalContext<'_>, setting: Setting, precision_k: usize) -> Result<MetricReport> {
    let slots = &ctx.slots[setting.number() - 1];
    try_evaluate_player_set(|i| scorer.scores(slots[i]), ctx.eval_players(setting), precision_k)
}

/// Scores a fitted model on one setting of a split.
pub fn evaluate_model(
    model: &SavedModel,
    ctx: &EvalContext<'_>,
    setting: Setting,
    precision_k: usize,
) -> Result<MetricReport> {
    let scorer = scorer(model, ctx, setting)?;
    run_scorer(&scorer, ctx, setting, precision_k)
}

/// The uniform-random baseline on one setting.
pub fn evaluate_random(ctx: &EvalContext<'_>, setting: Setting, seed: u64, precision_k: usize) -> Result<MetricReport> {
    let games = ctx.bundle.axes(setting).1.len();
    let scorer = Scorer::Random { seed, setting, games };
    run_scorer(&scorer, ctx, setting, precision_k)
}

/// Fits one grid point of a model on the split's training likes.
/// Returns `None` for the random baseline, which has nothing to fit.
pub fn fit_model(
    spec: &ModelSpec,
    hyper: Hyper,
    ctx: &EvalContext<'_>,
    config: &BenchmarkConfig,
) -> Result<Option<SavedModel>> {
    let train = &ctx.bundle.train_likes;
    let need_k = || hyper.k.ok_or_else(|| Error::Config(format!("{} needs a rank k", spec.name())));
    let need_lambda = || hyper.lambda.ok_or_else(|| Error::Config(format!("{} needs a lambda", spec.name())));
    let targets = || {
        if config.popularity_free {
            popularity_normalize(train).0
        } else {
            train.to_dense()
        }
    };
    let train_games = || ctx.game_features(Setting::KnownKnown);
    let train_players = || rows_of(&ctx.features.player, &ctx.player_rows[Setting::KnownKnown.number() - 1]);
    let model = match spec {
        ModelSpec::Random => return Ok(None),
        ModelSpec::Mvn { use_correlation } => SavedModel::Mvn(MvnModel::fit(train, *use_correlation)?),
        ModelSpec::Knn { kind, .. } => {
            let model = KnnModel::fit(train, *kind);
            let k = hyper.k.unwrap_or(model.k);
            SavedModel::Knn(model.with_neighbors(k)?)
        }
        ModelSpec::PureSvd { .. } | ModelSpec::Svd { .. } => {
            let mut als = config.als;
            als.rng_seed = config.rng_seed;
            SavedModel::Svd(SvdModel::fit_als(train, need_k()?, need_lambda()?, &als)?)
        }
        ModelSpec::Tags { .. } => SavedModel::Tags(TagsModel::fit_targets(
            &targets(),
            &train_games(),
            need_lambda()?,
            train.player_ids().to_vec(),
            ctx.features.game_names.clone(),
        )?),
        ModelSpec::Questions { .. } => SavedModel::Questions(QuestionsModel::fit_targets(
            &targets(),
            &train_players(),
            need_lambda()?,
            train.game_ids().to_vec(),
            ctx.features.player_names.clone(),
        )?),
        ModelSpec::TagsXQuestions { .. } => SavedModel::Interactions(InteractionModel::fit_targets(
            &targets(),
            &train_players(),
            &train_games(),
            need_lambda()?,
            ctx.features.game_names.clone(),
            ctx.features.player_names.clone(),
        )?),
    };
    Ok(Some(model))
}

/// Fits one grid point and scores it on a setting.
pub fn evaluate_spec(
    spec: &ModelSpec,
    hyper: Hyper,
    ctx: &EvalContext<'_>,
    setting: Setting,
    config: &BenchmarkConfig,
) -> Result<MetricReport> {
    match fit_model(spec, hyper, ctx, config)? {
        Some(model) => evaluate_model(&model, ctx, setting, config.precision_k),
        None => evaluate_random(ctx, setting, config.rng_seed, config.precision_k),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub hyper: Hyper,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchOutcome {
    pub best: Hyper,
    pub best_score: f64,
    pub curve: Vec<GridPoint>,
}

/// Evaluates every grid point and returns the best one. Ties go to the
/// smaller lambda, then the smaller k.
pub fn grid_search<F>(grid: &[Hyper], evaluate: F) -> Result<GridSearchOutcome>
where
    F: Fn(Hyper) -> Result<f64> + Sync,
{
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let point = |hyper: &Hyper| match evaluate(*hyper) {
        Ok(score) if score.is_finite() => GridPoint {
            hyper: *hyper,
            score: Some(score),
            error: None,
        },
        Ok(score) => GridPoint {
            hyper: *hyper,
            score: None,
            error: Some(format!("non-finite score {score}")),
        },
        Err(e) => GridPoint {
            hyper: *hyper,
            score: None,
            error: Some(e.to_string()),
        },
    };
    #[cfg(feature = "parallel")]
    let curve: Vec<GridPoint> = {
        use rayon::prelude::*;
        grid.par_iter().map(point).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let curve: Vec<GridPoint> = grid.iter().map(point).collect();

    let key = |h: &Hyper| (h.lambda.unwrap_or(0.0), h.k.unwrap_or(0));
    let best = curve
        .iter()
        .filter_map(|p| p.score.map(|s| (s, p.hyper)))
        .reduce(|best, cand| {
            let better = cand.0 > best.0
                || (cand.0 == best.0 && key(&cand.1).0.total_cmp(&key(&best.1).0).then(key(&cand.1).1.cmp(&key(&best.1).1)).is_lt());
            if better {
                cand
            } else {
                best
            }
        });
    match best {
        Some((best_score, best)) => Ok(GridSearchOutcome {
            best,
            best_score,
            curve,
        }),
        None => Err(Error::Numerical(format!(
            "every grid point failed; first error: {}",
            curve[0].error.as_deref().unwrap_or("unknown")
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub setting: usize,
    /// False when the model cannot score the setting and the cell carries
    /// the random baseline.
    pub supported: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ndcg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    pub counted_players: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub name: String,
    pub spec: ModelSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen: Option<Hyper>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tuning_curve: Vec<GridPoint>,
    pub cells: Vec<Cell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_seconds: Option<f64>,
}

impl ModelResult {
    pub fn cell(&self, setting: Setting) -> &Cell {
        &self.cells[setting.number() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train_players: usize,
    pub test_players: usize,
    pub train_games: usize,
    pub test_games: usize,
    pub setting1_players: usize,
    pub validation_likes: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub rng_seed: u64,
    pub precision_k: usize,
    pub split: SplitSummary,
    pub models: Vec<ModelResult>,
}

impl BenchmarkResult {
    pub fn model(&self, name: &str) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("benchmark result serializes")
    }

    /// Two tables, models × settings, in percent.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let tables: [(String, fn(&Cell) -> Option<f64>); 2] = [
            ("Ranking Accuracy by nDCG@m (%)".into(), |c| c.ndcg),
            (
                format!("Recommendation List Accuracy by Precision@{} (%)", self.precision_k),
                |c| c.precision,
            ),
        ];
        for (title, value) in tables {
            let _ = writeln!(out, "### {title}\n");
            out.push_str("| Model | Setting 1 | Setting 2 | Setting 3 | Setting 4 |\n");
            out.push_str("|---|---:|---:|---:|---:|\n");
            for model in &self.models {
                let _ = write!(out, "| {} |", model.name);
                for cell in &model.cells {
                    match value(cell) {
                        Some(v) => {
                            let _ = write!(out, " {:.1} |", 100.0 * v);
                        }
                        None => out.push_str(" n/a |"),
                    }
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// The training players and games of a split with their features.
pub fn training_dataset(dataset: &Dataset, bundle: &SplitBundle) -> Result<Dataset> {
    let players = indices(dataset.likes.player_ids(), &bundle.train_player_ids, "player")?;
    let games = indices(dataset.likes.game_ids(), &bundle.train_game_ids, "game")?;
    Ok(Dataset {
        likes: bundle.train_likes.clone(),
        tags: dataset.tags.select_games(&games)?,
        questions: dataset.questions.select_players(&players)?,
        untagged_games: Vec::new(),
    })
}

fn elapsed_seconds<T>(record: bool, f: impl FnOnce() -> T) -> (T, Option<f64>) {
    if !record {
        return (f(), None);
    }
    let start = std::time::Instant::now();
    let value = f();
    (value, Some(start.elapsed().as_secs_f64()))
}

/// Splits `dataset`, tunes and fits every configured model, and scores it
/// on each setting it supports. Model failures are recorded in the cells.
pub fn run_benchmark(
    dataset: &Dataset,
    split_config: &SplitConfig,
    config: &BenchmarkConfig,
) -> Result<BenchmarkResult> {
    config.validate()?;
    let bundle = four_way_split(dataset, split_config)?;
    debug_assert!(check_no_leakage(&bundle).is_ok());
    let ctx = EvalContext::build(dataset, &bundle, Features::new(dataset, config.tag_pca_dims)?)?;

    // Tuning sees only the training likes, re-split with a derived seed.
    let needs_tuning = config.models.iter().any(|spec| spec.grid().len() > 1);
    let inner = if needs_tuning {
        let inner_dataset = training_dataset(dataset, &bundle)?;
        let inner_config = SplitConfig {
            setting1_player_fraction: config.tuning_fraction,
            rng_seed: split_config.rng_seed.wrapping_add(0x5eed),
            ..split_config.clone()
        };
        let inner_bundle = four_way_split(&inner_dataset, &inner_config)?;
        let features = Features::new(&inner_dataset, config.tag_pca_dims)?;
        Some((inner_dataset, inner_bundle, features))
    } else {
        None
    };
    let inner_ctx = match &inner {
        Some((data, split, features)) => Some(EvalContext::build(data, split, features.clone())?),
        None => None,
    };

    let mut baseline: [Option<MetricReport>; 4] = Default::default();
    for setting in Setting::ALL {
        baseline[setting.number() - 1] =
            Some(evaluate_random(&ctx, setting, config.rng_seed, config.precision_k)?);
    }

    let mut models = Vec::with_capacity(config.models.len());
    for spec in &config.models {
        let name = spec.name();
        let grid = spec.grid();
        let mut tuning_curve = Vec::new();
        let chosen = match (&inner_ctx, grid.len()) {
            (Some(inner_ctx), len) if len > 1 => {
                let setting = spec.tuning_setting();
                let outcome = grid_search(&grid, |hyper| {
                    Ok(evaluate_spec(spec, hyper, inner_ctx, setting, config)?.ndcg_at_m)
                });
                match outcome {
                    Ok(outcome) => {
                        log_boundary(&name, &grid, &outcome);
                        tuning_curve = outcome.curve;
                        Ok(outcome.best)
                    }
                    Err(e) => Err(e),
                }
            }
            _ => Ok(grid[0]),
        };
        log::info!("{name}: chosen {chosen:?}");

        let supported: BTreeSet<Setting> = capability_matrix(spec.kind());
        let (fitted, fit_seconds) = elapsed_seconds(config.record_timings, || {
            match &chosen {
                Ok(hyper) => fit_model(spec, *hyper, &ctx, config),
                Err(e) => Err(Error::Numerical(format!("tuning failed: {e}"))),
            }
        });
        let cells = Setting::ALL
            .iter()
            .map(|&setting| {
                let base = baseline[setting.number() - 1].as_ref().expect("baseline computed");
                if !supported.contains(&setting) {
                    return Cell {
                        setting: setting.number(),
                        supported: false,
                        ndcg: Some(base.ndcg_at_m),
                        precision: Some(base.precision),
                        counted_players: base.counted_players,
                        error: None,
                    };
                }
                let report = match &fitted {
                    Ok(Some(model)) => evaluate_model(model, &ctx, setting, config.precision_k),
                    Ok(None) => Ok(base.clone()),
                    Err(e) => Err(Error::Numerical(format!("fit failed: {e}"))),
                };
                match report {
                    Ok(report) => Cell {
                        setting: setting.number(),
                        supported: true,
                        ndcg: Some(report.ndcg_at_m),
                        precision: Some(report.precision),
                        counted_players: report.counted_players,
                        error: None,
                    },
                    Err(e) => {
                        log::warn!("{name} failed on {setting}: {e}");
                        Cell {
                            setting: setting.number(),
                            supported: true,
                            ndcg: None,
                            precision: None,
                            counted_players: 0,
                            error: Some(e.to_string()),
                        }
                    }
                }
            })
            .collect();
        models.push(ModelResult {
            name,
            spec: spec.clone(),
            chosen: chosen.ok().filter(|_| grid.len() > 1),
            tuning_curve,
            cells,
            fit_seconds,
        });
    }

    Ok(BenchmarkResult {
        rng_seed: config.rng_seed,
        precision_k: config.precision_k,
        split: SplitSummary {
            train_players: bundle.train_player_ids.len(),
            test_players: bundle.test_player_ids.len(),
            train_games: bundle.train_game_ids.len(),
            test_games: bundle.test_game_ids.len(),
            setting1_players: bundle.setting1_player_ids.len(),
            validation_likes: std::array::from_fn(|s| bundle.validation[s].len()),
        },
        models,
    })
}

/// Logs when the best lambda sits on the edge of the grid.
fn log_boundary(name: &str, grid: &[Hyper], outcome: &GridSearchOutcome) {
    let lambdas: BTreeSet<u64> = grid.iter().filter_map(|h| h.lambda).map(f64::to_bits).collect();
    if lambdas.len() < 3 {
        return;
    }
    let best = outcome.best.lambda.unwrap_or(0.0);
    let (lo, hi) = grid
        .iter()
        .filter_map(|h| h.lambda)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l), hi.max(l)));
    if best == lo || best == hi {
        log::info!("{name}: best lambda {best} is on the grid boundary");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper(k: usize, lambda: f64) -> Hyper {
        Hyper {
            k: Some(k),
            lambda: Some(lambda),
        }
    }

    #[test]
    fn single_point_grid_returns_that_point() {
        let outcome = grid_search(&[hyper(4, 2.0)], |_| Ok(0.3)).unwrap();
        assert_eq!(outcome.best, hyper(4, 2.0));
        assert_eq!(outcome.curve.len(), 1);
    }

    #[test]
    fn grid_ties_prefer_small_lambda_then_small_k() {
        let grid = [hyper(8, 4.0), hyper(4, 4.0), hyper(4, 1.0), hyper(16, 1.0)];
        let outcome = grid_search(&grid, |h| Ok(if h.lambda == Some(4.0) && h.k == Some(8) { 0.1 } else { 0.5 })).unwrap();
        assert_eq!(outcome.best, hyper(4, 1.0));
        let outcome = grid_search(&grid, |h| Ok(h.k.unwrap() as f64)).unwrap();
        assert_eq!(outcome.best, hyper(16, 1.0));
    }

    #[test]
    fn failed_points_are_recorded_and_all_failures_error() {
        let grid = [hyper(4, 1.0), hyper(4, 2.0)];
        let outcome = grid_search(&grid, |h| {
            if h.lambda == Some(1.0) {
                Err(Error::Numerical("boom".into()))
            } else {
                Ok(0.2)
            }
        })
        .unwrap();
        assert_eq!(outcome.best, hyper(4, 2.0));
        assert_eq!(outcome.curve[0].error.as_deref(), Some("numerical failure: boom"));
        assert!(grid_search(&grid, |_| Err(Error::Numerical("x".into()))).is_err());
        assert!(grid_search(&[], |_| Ok(1.0)).is_err());
    }

    #[test]
    fn default_grids() {
        let config = BenchmarkConfig::default();
        let names: Vec<String> = config.models.iter().map(ModelSpec::name).collect();
        assert_eq!(
            names,
            [
                "Random",
                "MVN",
                "kNN (cos)",
                "kNN (phi)",
                "PureSVD",
                "SVD",
                "Tags",
                "Questions",
                "Tags X Questions"
            ]
        );
        assert_eq!(config.models[5].grid().len(), 60);
        assert_eq!(config.models[4].grid()[0].lambda, Some(0.0));
        config.validate().unwrap();
        let bad = ModelSpec::Tags { lambda_grid: vec![0.0] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn random_scores_are_keyed_by_setting_and_slot() {
        let a = random_scores(3, Setting::KnownKnown, 0, 10);
        assert_eq!(a, random_scores(3, Setting::KnownKnown, 0, 10));
        assert_ne!(a, random_scores(3, Setting::KnownKnown, 1, 10));
        assert_ne!(a, random_scores(3, Setting::NewGames, 0, 10));
        assert!(a.iter().all(|v| (0.0..1.0).contains(v)));
    }
}
