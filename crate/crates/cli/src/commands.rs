use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use coldrec::cf::{AlsOptions, KnnModel, MvnModel, SimilarityKind, SvdModel};
use coldrec::content::{popularity_normalize, InteractionModel, QuestionsModel, TagsModel};
use coldrec::data::{generate_synthetic, Dataset, SyntheticConfig};
use coldrec::harness::{
    evaluate_model, run_benchmark, training_dataset, BenchmarkConfig, EvalContext, ModelSpec,
    DEFAULT_K_GRID, DEFAULT_LAMBDA_GRID,
};
use coldrec::interpret::{
    top_correlated_games, top_interactions, top_question_responses, top_tag_responses, InteractionQuery,
};
use coldrec::metrics::rank_games;
use coldrec::persist::{load_model, save_model, SavedModel};
use coldrec::split::{four_way_split, Setting, SplitBundle, SplitConfig};
use coldrec::{Error, Result};

use crate::args::{
    BenchmarkArgs, Command, EvaluateArgs, FitArgs, GenerateArgs, InterpretArgs, ModelArgs, ModelChoice,
    RecommendArgs, Similarity, SplitArgs, SplitOptions, TableFormat,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Split(args) => split(args),
        Command::Fit(args) => fit(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Benchmark(args) => benchmark(args),
        Command::Recommend(args) => recommend(args),
        Command::Interpret(args) => interpret(args),
    }
}

fn stdout_write(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut config = SyntheticConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        config.apply_overrides(&text)?;
    }
    if let Some(overrides) = &args.overrides {
        config.apply_overrides(overrides)?;
    }
    if let Some(seed) = args.seed {
        config.rng_seed = seed;
    }
    let dataset = generate_synthetic(&config)?;
    dataset.save_dir(&args.out)?;
    log::info!(
        "wrote {}x{} likes ({} likes) to {}",
        dataset.likes.n(),
        dataset.likes.m(),
        dataset.likes.like_count(),
        args.out.display()
    );
    Ok(())
}

fn split_config(options: &SplitOptions, seed: u64) -> SplitConfig {
    SplitConfig {
        test_game_fraction: options.test_game_fraction,
        test_player_fraction: options.test_player_fraction,
        setting1_player_fraction: options.setting1_fraction,
        seed_likes_per_player: options.seed_likes,
        rng_seed: seed,
    }
}

fn split(args: SplitArgs) -> Result<()> {
    let dataset = Dataset::load_dir(&args.data)?;
    let bundle = four_way_split(&dataset, &split_config(&args.options, args.seed))?;
    bundle.write_dir(&args.out)?;
    log::info!(
        "validation likes per setting: {:?}",
        bundle.validation.iter().map(Vec::len).collect::<Vec<_>>()
    );
    Ok(())
}

fn expected_kind(choice: ModelChoice) -> &'static str {
    match choice {
        ModelChoice::Mvn => "mvn",
        ModelChoice::Knn => "knn",
        ModelChoice::Svd => "svd",
        ModelChoice::Tags => "tags",
        ModelChoice::Questions => "questions",
        ModelChoice::Interactions => "interactions",
    }
}

fn fit_on(args: &ModelArgs, data: &Dataset) -> Result<SavedModel> {
    let likes = &data.likes;
    let targets = || {
        if args.popularity_free {
            popularity_normalize(likes).0
        } else {
            likes.to_dense()
        }
    };
    Ok(match args.model {
        ModelChoice::Mvn => SavedModel::Mvn(MvnModel::fit(likes, args.correlation)?),
        ModelChoice::Knn => {
            let kind = match args.similarity {
                Similarity::Cos => SimilarityKind::Cosine,
                Similarity::Phi => SimilarityKind::Phi,
            };
            let model = KnnModel::fit(likes, kind);
            let k = args.neighbors.unwrap_or(model.k);
            SavedModel::Knn(model.with_neighbors(k)?)
        }
        ModelChoice::Svd => {
            let opts = AlsOptions {
                max_iters: args.iters,
                rng_seed: args.seed,
                ..AlsOptions::default()
            };
            SavedModel::Svd(SvdModel::fit_als(likes, args.k, args.lambda, &opts)?)
        }
        ModelChoice::Tags => SavedModel::Tags(TagsModel::fit_targets(
            &targets(),
            &data.tags.to_dense(),
            args.lambda,
            likes.player_ids().to_vec(),
            data.tags.tag_names().to_vec(),
        )?),
        ModelChoice::Questions => SavedModel::Questions(QuestionsModel::fit_targets(
            &targets(),
            &data.questions.to_dense(),
            args.lambda,
            likes.game_ids().to_vec(),
            data.questions.question_ids().to_vec(),
        )?),
        ModelChoice::Interactions => SavedModel::Interactions(InteractionModel::fit_targets(
            &targets(),
            &data.questions.to_dense(),
            &data.tags.to_dense(),
            args.lambda,
            data.tags.tag_names().to_vec(),
            data.questions.question_ids().to_vec(),
        )?),
    })
}

/// Loads `--model-file` or fits `--model` on `data`.
fn obtain_model(args: &ModelArgs, data: Option<&Dataset>) -> Result<SavedModel> {
    match (&args.model_file, data) {
        (Some(path), _) => {
            let model = load_model(path)?;
            if model.kind_name() != expected_kind(args.model) {
                return Err(Error::Config(format!(
                    "{} holds a {} model, not {}",
                    path.display(),
                    model.kind_name(),
                    expected_kind(args.model)
                )));
            }
            Ok(model)
        }
        (None, Some(data)) => fit_on(args, data),
        (None, None) => Err(Error::Config("give --model-file or --data to fit on".into())),
    }
}

fn fit(args: FitArgs) -> Result<()> {
    let dataset = Dataset::load_dir(&args.data)?;
    let train = match &args.split {
        Some(dir) => training_dataset(&dataset, &SplitBundle::read_dir(dir)?)?,
        None => dataset,
    };
    let model = fit_on(&args.model, &train)?;
    save_model(&model, &args.out)?;
    if let Some(csv) = &args.export_csv {
        match &model {
            SavedModel::Interactions(m) => m.write_csv(csv)?,
            _ => return Err(Error::Config("--export-csv applies to the interactions model only".into())),
        }
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let dataset = Dataset::load_dir(&args.data)?;
    let bundle = SplitBundle::read_dir(&args.split)?;
    let setting = Setting::from_number(args.setting)?;
    let model = match &args.model.model_file {
        Some(_) => obtain_model(&args.model, None)?,
        None => fit_on(&args.model, &training_dataset(&dataset, &bundle)?)?,
    };
    let ctx = EvalContext::new(&dataset, &bundle)?;
    let mut report = evaluate_model(&model, &ctx, setting, args.precision_k)?;
    if !args.per_player {
        report.per_player.clear();
    }
    stdout_write(&(report.to_json() + "\n"))
}

fn benchmark(args: BenchmarkArgs) -> Result<()> {
    let dataset = match (&args.data, &args.synthetic) {
        (Some(dir), _) => Dataset::load_dir(dir)?,
        (None, Some(spec)) => {
            let mut config = SyntheticConfig {
                rng_seed: args.seed,
                ..SyntheticConfig::default()
            };
            config.apply_overrides(spec)?;
            generate_synthetic(&config)?
        }
        (None, None) => return Err(Error::Config("give --data or --synthetic".into())),
    };
    let mut config = match (args.quick, &args.k_grid, &args.lambda_grid) {
        (true, None, None) => BenchmarkConfig::quick(),
        (quick, k_grid, lambda_grid) => {
            let base = if quick { BenchmarkConfig::quick() } else { BenchmarkConfig::default() };
            let mut config = BenchmarkConfig::with_grids(
                k_grid.as_deref().unwrap_or(&DEFAULT_K_GRID),
                lambda_grid.as_deref().unwrap_or(&DEFAULT_LAMBDA_GRID),
            );
            config.als = base.als;
            config
        }
    };
    if args.with_correlation_mvn {
        config.models.insert(2, ModelSpec::Mvn { use_correlation: true });
    }
    config.precision_k = args.precision_k;
    config.rng_seed = args.seed;
    if let Some(iters) = args.iters {
        config.als.max_iters = iters;
    }
    config.popularity_free = args.popularity_free;
    config.tag_pca_dims = args.tag_pca;
    config.record_timings = args.timings;

    let result = run_benchmark(&dataset, &split_config(&args.split, args.seed), &config)?;
    let json = result.to_json() + "\n";
    let markdown = result.to_markdown();
    if let Some(dir) = &args.out {
        write_file(&dir.join("results.json"), &json)?;
        write_file(&dir.join("results.md"), &markdown)?;
    }
    stdout_write(match args.format {
        TableFormat::Markdown => &markdown,
        TableFormat::Json => &json,
    })
}

fn liked_ids(data: &Dataset, player: &str) -> BTreeSet<String> {
    match data.likes.player_index(player) {
        Some(i) => data
            .likes
            .liked_games(i)
            .into_iter()
            .map(|j| data.likes.game_ids()[j].clone())
            .collect(),
        None => BTreeSet::new(),
    }
}

fn unknown_player(player: &str) -> Error {
    Error::Unknown {
        what: "player",
        name: player.to_owned(),
    }
}

/// Scores for every candidate game, with the game axis they refer to.
fn player_scores(model: &SavedModel, data: &Dataset, player: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let liked = liked_ids(data, player);
    Ok(match model {
        SavedModel::Mvn(m) => {
            let seeds: Vec<usize> = m
                .game_ids
                .iter()
                .enumerate()
                .filter(|(_, g)| liked.contains(*g))
                .map(|(j, _)| j)
                .collect();
            (m.game_ids.clone(), m.predict(&seeds)?.as_slice().to_vec())
        }
        SavedModel::Knn(m) => {
            let row: Vec<f64> = m.game_ids.iter().map(|g| f64::from(u8::from(liked.contains(g)))).collect();
            (m.game_ids.clone(), m.predict(&row)?.as_slice().to_vec())
        }
        SavedModel::Svd(m) => {
            let i = coldrec::data::axis_index(&m.player_ids, player).ok_or_else(|| unknown_player(player))?;
            (m.game_ids.clone(), m.player_scores(i)?.as_slice().to_vec())
        }
        SavedModel::Tags(m) => {
            let i = coldrec::data::axis_index(&m.player_ids, player).ok_or_else(|| unknown_player(player))?;
            let scores = m.predict(&data.tags)?;
            (data.tags.game_ids().to_vec(), scores.row(i).iter().copied().collect())
        }
        SavedModel::Questions(m) => {
            let i = data.questions.player_ids().iter().position(|p| p == player).ok_or_else(|| unknown_player(player))?;
            let one = data.questions.select_players(&[i])?;
            let scores = m.predict(&one)?;
            (m.game_ids.clone(), scores.row(0).iter().copied().collect())
        }
        SavedModel::Interactions(m) => {
            let i = data.questions.player_ids().iter().position(|p| p == player).ok_or_else(|| unknown_player(player))?;
            let one = data.questions.select_players(&[i])?;
            let scores = m.predict(&one, &data.tags)?;
            (data.tags.game_ids().to_vec(), scores.row(0).iter().copied().collect())
        }
    })
}

fn recommend(args: RecommendArgs) -> Result<()> {
    if args.top == 0 {
        return Err(Error::Config("--top must be positive".into()));
    }
    let dataset = Dataset::load_dir(&args.data)?;
    let model = obtain_model(&args.model, Some(&dataset))?;
    let (games, scores) = player_scores(&model, &dataset, &args.player)?;
    let liked = liked_ids(&dataset, &args.player);
    let exclude: BTreeSet<usize> = games
        .iter()
        .enumerate()
        .filter(|(_, g)| liked.contains(*g))
        .map(|(j, _)| j)
        .collect();
    let ranked = rank_games(&scores, &exclude);
    let mut out = String::from("rank\tgame_id\tscore\n");
    for (rank, (&j, score)) in ranked.order.iter().zip(&ranked.scores).take(args.top).enumerate() {
        out.push_str(&format!("{}\t{}\t{score:.6}\n", rank + 1, games[j]));
    }
    stdout_write(&out)
}

fn need<'a>(value: &'a Option<String>, flag: &str) -> Result<&'a str> {
    value
        .as_deref()
        .ok_or_else(|| Error::Config(format!("this model's report needs --{flag}")))
}

fn interpret(args: InterpretArgs) -> Result<()> {
    let dataset = match &args.data {
        Some(dir) if args.model.model_file.is_none() => Some(Dataset::load_dir(dir)?),
        _ => None,
    };
    let model = obtain_model(&args.model, dataset.as_ref())?;
    let report = match &model {
        SavedModel::Mvn(m) => top_correlated_games(m, need(&args.game, "game")?, args.top)?,
        SavedModel::Tags(m) => top_tag_responses(m, need(&args.player, "player")?, args.top)?,
        SavedModel::Questions(m) => top_question_responses(m, need(&args.game, "game")?, args.top)?,
        SavedModel::Interactions(m) => {
            let query = match (&args.tag, args.global) {
                (Some(tag), false) => InteractionQuery::Tag(tag),
                (None, true) => InteractionQuery::Global,
                _ => return Err(Error::Config("give exactly one of --tag or --global".into())),
            };
            top_interactions(m, query, args.top)?
        }
        other => {
            return Err(Error::Config(format!(
                "no coefficient report for {} models",
                other.kind_name()
            )))
        }
    };
    if args.json {
        stdout_write(&(report.to_json() + "\n"))
    } else {
        stdout_write(&report.to_text())
    }
}
