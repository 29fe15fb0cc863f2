//! Four-setting train/validation partition.
//!
//! A quarter of the games and a quarter of the players are held out as
//! "test" axes. Among the remaining players, a fraction with enough likes
//! keeps only a few seed likes in training; their other training-game likes
//! validate Setting 1. Settings 2 to 4 validate on the held-out blocks:
//! known players × new games, new players × known games, and new × new.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{axis_index, load_likes, save_likes, Dataset, GameLikeMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Setting {
    /// Known players, known games.
    KnownKnown = 1,
    /// Known players, new games.
    NewGames = 2,
    /// New players, known games.
    NewPlayers = 3,
    /// New players, new games.
    NewNew = 4,
}

impl Setting {
    pub const ALL: [Setting; 4] = [
        Setting::KnownKnown,
        Setting::NewGames,
        Setting::NewPlayers,
        Setting::NewNew,
    ];

    pub fn number(self) -> usize {
        self as usize
    }

    pub fn from_number(n: usize) -> Result<Self> {
        Self::ALL
            .get(n.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::Unknown {
                what: "setting",
                name: n.to_string(),
            })
    }

    pub fn new_players(self) -> bool {
        matches!(self, Setting::NewPlayers | Setting::NewNew)
    }

    pub fn new_games(self) -> bool {
        matches!(self, Setting::NewGames | Setting::NewNew)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Setting {}", self.number())
    }
}

/// Model families, for the capability lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Random,
    Mvn,
    Knn,
    Svd,
    Tags,
    Questions,
    TagsXQuestions,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Self::Random),
            "mvn" => Ok(Self::Mvn),
            "knn" => Ok(Self::Knn),
            "svd" | "puresvd" => Ok(Self::Svd),
            "tags" => Ok(Self::Tags),
            "questions" => Ok(Self::Questions),
            "tagsxquestions" | "interactions" | "tags_x_questions" => Ok(Self::TagsXQuestions),
            other => Err(Error::Unknown {
                what: "model kind",
                name: other.to_owned(),
            }),
        }
    }
}

/// Settings a model family can score: it needs learned representations for
/// both the players and the games of the setting. Random scores everywhere.
pub fn capability_matrix(kind: ModelKind) -> BTreeSet<Setting> {
    use Setting::*;
    let settings: &[Setting] = match kind {
        ModelKind::Random | ModelKind::TagsXQuestions => &Setting::ALL,
        ModelKind::Mvn | ModelKind::Knn | ModelKind::Svd => &[KnownKnown],
        ModelKind::Tags => &[KnownKnown, NewGames],
        ModelKind::Questions => &[KnownKnown, NewPlayers],
    };
    settings.iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_game_fraction: f64,
    pub test_player_fraction: f64,
    pub setting1_player_fraction: f64,
    pub seed_likes_per_player: usize,
    pub rng_seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_game_fraction: 0.25,
            test_player_fraction: 0.25,
            setting1_player_fraction: 0.20,
            seed_likes_per_player: 3,
            rng_seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("test_game_fraction", self.test_game_fraction),
            ("test_player_fraction", self.test_player_fraction),
            ("setting1_player_fraction", self.setting1_player_fraction),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::Config(format!("{name} {value} is not in (0,1)")));
            }
        }
        if self.seed_likes_per_player == 0 {
            return Err(Error::Config("seed_likes_per_player must be positive".into()));
        }
        Ok(())
    }
}

pub type LikePair = (String, String);

#[derive(Debug, Clone, PartialEq)]
pub struct SplitBundle {
    /// Training players × training games, without Setting-1 validation likes.
    pub train_likes: GameLikeMatrix,
    /// Validation like pairs for Settings 1..=4, sorted.
    pub validation: [Vec<LikePair>; 4],
    pub train_game_ids: Vec<String>,
    pub test_game_ids: Vec<String>,
    pub train_player_ids: Vec<String>,
    pub test_player_ids: Vec<String>,
    /// Training players whose likes were reduced to seeds.
    pub setting1_player_ids: Vec<String>,
    pub config: SplitConfig,
}

impl SplitBundle {
    pub fn validation(&self, setting: Setting) -> &[LikePair] {
        &self.validation[setting.number() - 1]
    }

    /// Player and game axes spanned by a setting.
    pub fn axes(&self, setting: Setting) -> (&[String], &[String]) {
        let players = if setting.new_players() {
            &self.test_player_ids
        } else {
            &self.train_player_ids
        };
        let games = if setting.new_games() {
            &self.test_game_ids
        } else {
            &self.train_game_ids
        };
        (players, games)
    }
}

fn fraction_count(total: usize, fraction: f64, what: &str) -> Result<usize> {
    let count = (total as f64 * fraction).floor() as usize;
    if count == 0 || count >= total {
        return Err(Error::Config(format!(
            "{what} fraction {fraction} of {total} leaves an empty partition"
        )));
    }
    Ok(count)
}

fn pick(total: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(rng);
    let mut chosen = vec![false; total];
    for &i in &order[..count] {
        chosen[i] = true;
    }
    chosen
}

/// Deterministic in `config.rng_seed` and in the dataset's canonical axes.
pub fn four_way_split(dataset: &Dataset, config: &SplitConfig) -> Result<SplitBundle> {
    config.validate()?;
    let likes = &dataset.likes;
    let (n, m) = (likes.n(), likes.m());
    if n < 4 || m < 4 {
        return Err(Error::Config(format!("need at least 4x4 likes to split, got {n}x{m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let test_game = pick(m, fraction_count(m, config.test_game_fraction, "test game")?, &mut rng);
    let test_player = pick(n, fraction_count(n, config.test_player_fraction, "test player")?, &mut rng);

    let train_games: Vec<usize> = (0..m).filter(|&j| !test_game[j]).collect();
    let test_games: Vec<usize> = (0..m).filter(|&j| test_game[j]).collect();
    let train_players: Vec<usize> = (0..n).filter(|&i| !test_player[i]).collect();
    let test_players: Vec<usize> = (0..n).filter(|&i| test_player[i]).collect();

    let seeds = config.seed_likes_per_player;
    let s1_target = fraction_count(
        train_players.len(),
        config.setting1_player_fraction,
        "setting-1 player",
    )?;
    let liked_train_games = |i: usize| -> Vec<usize> {
        train_games.iter().copied().filter(|&j| likes.get(i, j)).collect()
    };
    let mut eligible: Vec<usize> = train_players
        .iter()
        .copied()
        .filter(|&i| liked_train_games(i).len() > seeds)
        .collect();
    if eligible.is_empty() {
        return Err(Error::Config(format!(
            "no training player likes more than {seeds} training games"
        )));
    }
    if eligible.len() < s1_target {
        log::warn!(
            "only {} players are eligible for Setting 1 (wanted {s1_target}); using all of them",
            eligible.len()
        );
    }
    eligible.shuffle(&mut rng);
    eligible.truncate(s1_target);
    eligible.sort_unstable();

    let id_pair = |i: usize, j: usize| (likes.player_ids()[i].clone(), likes.game_ids()[j].clone());
    let mut validation: [Vec<LikePair>; 4] = Default::default();
    let mut train_full = likes.clone();
    for &i in &eligible {
        let mut liked = liked_train_games(i);
        liked.shuffle(&mut rng);
        for &j in &liked[seeds..] {
            train_full.clear(i, j);
            validation[0].push(id_pair(i, j));
        }
    }
    for (block, players, games) in [
        (1, &train_players, &test_games),
        (2, &test_players, &train_games),
        (3, &test_players, &test_games),
    ] {
        for &i in players.iter() {
            for &j in games.iter() {
                if likes.get(i, j) {
                    validation[block].push(id_pair(i, j));
                }
            }
        }
    }
    for set in validation.iter_mut() {
        set.sort();
    }

    let ids = |axis: &[String], idx: &[usize]| idx.iter().map(|&k| axis[k].clone()).collect::<Vec<_>>();
    let bundle = SplitBundle {
        train_likes: train_full.select(&train_players, &train_games)?,
        validation,
        train_game_ids: ids(likes.game_ids(), &train_games),
        test_game_ids: ids(likes.game_ids(), &test_games),
        train_player_ids: ids(likes.player_ids(), &train_players),
        test_player_ids: ids(likes.player_ids(), &test_players),
        setting1_player_ids: ids(likes.player_ids(), &eligible),
        config: config.clone(),
    };
    debug_assert!(check_no_leakage(&bundle).is_ok());
    Ok(bundle)
}

/// Verifies that no validation pair is visible in the training matrix.
pub fn check_no_leakage(bundle: &SplitBundle) -> Result<()> {
    for (k, set) in bundle.validation.iter().enumerate() {
        for (p, g) in set {
            if let (Some(i), Some(j)) = (bundle.train_likes.player_index(p), bundle.train_likes.game_index(g)) {
                if bundle.train_likes.get(i, j) {
                    return Err(Error::Alignment(format!(
                        "validation pair ({p}, {g}) of Setting {} leaks into training",
                        k + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SplitManifest {
    rng_seed: u64,
    config: SplitConfig,
    train_game_ids: Vec<String>,
    test_game_ids: Vec<String>,
    train_player_ids: Vec<String>,
    test_player_ids: Vec<String>,
    setting1_player_ids: Vec<String>,
    validation_counts: [usize; 4],
}

const MANIFEST: &str = "manifest.json";
const TRAIN: &str = "train_likes.csv";

fn validation_file(k: usize) -> String {
    format!("validation_s{}.csv", k + 1)
}

fn write_pairs(pairs: &[LikePair], path: &Path) -> Result<()> {
    let mut text = String::from("player_id,game_id\n");
    for (p, g) in pairs {
        text.push_str(p);
        text.push(',');
        text.push_str(g);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_pairs(path: &Path) -> Result<Vec<LikePair>> {
    match load_likes(path) {
        Ok(matrix) => Ok(matrix
            .pairs()
            .map(|(i, j)| (matrix.player_ids()[i].clone(), matrix.game_ids()[j].clone()))
            .collect()),
        Err(Error::EmptyFile(_)) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

impl SplitBundle {
    /// Writes the training likes, the four validation sets (likes CSV schema)
    /// and a JSON manifest with the axis partitions.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_likes(&self.train_likes, dir.join(TRAIN))?;
        for (k, set) in self.validation.iter().enumerate() {
            write_pairs(set, &dir.join(validation_file(k)))?;
        }
        let manifest = SplitManifest {
            rng_seed: self.config.rng_seed,
            config: self.config.clone(),
            train_game_ids: self.train_game_ids.clone(),
            test_game_ids: self.test_game_ids.clone(),
            train_player_ids: self.train_player_ids.clone(),
            test_player_ids: self.test_player_ids.clone(),
            setting1_player_ids: self.setting1_player_ids.clone(),
            validation_counts: [0, 1, 2, 3].map(|k| self.validation[k].len()),
        };
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: SplitManifest = serde_json::from_str(&text)?;
        let train_pairs = read_pairs(&dir.join(TRAIN))?;
        let train_likes = GameLikeMatrix::from_pairs_with_axes(
            manifest.train_player_ids.clone(),
            manifest.train_game_ids.clone(),
            &train_pairs,
        )?;
        let mut validation: [Vec<LikePair>; 4] = Default::default();
        for (k, set) in validation.iter_mut().enumerate() {
            *set = read_pairs(&dir.join(validation_file(k)))?;
        }
        Ok(Self {
            train_likes,
            validation,
            train_game_ids: manifest.train_game_ids,
            test_game_ids: manifest.test_game_ids,
            train_player_ids: manifest.train_player_ids,
            test_player_ids: manifest.test_player_ids,
            setting1_player_ids: manifest.setting1_player_ids,
            config: manifest.config,
        })
    }

    /// Index of a setting's players in its player axis.
    pub fn player_slot(&self, setting: Setting, id: &str) -> Option<usize> {
        axis_index(self.axes(setting).0, id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{GameFeatureMatrix, PlayerFeatureMatrix};

    fn dataset(likes: GameLikeMatrix) -> Dataset {
        let tags = GameFeatureMatrix::new(likes.game_ids().to_vec(), vec!["t".into()], vec![1; likes.m()]).unwrap();
        let questions =
            PlayerFeatureMatrix::new(likes.player_ids().to_vec(), vec!["q".into()], vec![0; likes.n()]).unwrap();
        Dataset::new(likes, tags, questions).unwrap()
    }

    fn square(n: usize, m: usize, liked: impl Fn(usize, usize) -> bool) -> GameLikeMatrix {
        let players = (0..n).map(|i| format!("p{i:03}")).collect();
        let games = (0..m).map(|j| format!("g{j:03}")).collect();
        let values = (0..n * m).map(|k| liked(k / m, k % m) as u8).collect();
        GameLikeMatrix::new(players, games, values).unwrap()
    }

    #[test]
    fn test_game_count_floors() {
        assert_eq!(fraction_count(6465, 0.25, "g").unwrap(), 1616);
        assert!(fraction_count(3, 0.25, "g").is_err());
    }

    #[test]
    fn capabilities() {
        use Setting::*;
        assert_eq!(capability_matrix(ModelKind::Tags), [KnownKnown, NewGames].into());
        assert_eq!(capability_matrix(ModelKind::Mvn), [KnownKnown].into());
        assert_eq!(capability_matrix(ModelKind::Questions), [KnownKnown, NewPlayers].into());
        assert_eq!(capability_matrix(ModelKind::TagsXQuestions).len(), 4);
        assert_eq!(capability_matrix(ModelKind::Random).len(), 4);
        assert!("bpr".parse::<ModelKind>().is_err());
    }

    #[test]
    fn toy_setting_one_player_keeps_three_seeds() {
        let config = SplitConfig {
            rng_seed: 17,
            ..SplitConfig::default()
        };
        // Probe the axis partition, which depends only on the seed and shape.
        let probe = four_way_split(&dataset(square(8, 8, |_, _| true)), &config).unwrap();
        let player = probe.train_player_ids[0].clone();
        let chosen_games: Vec<String> = probe.train_game_ids[..5].to_vec();
        let other = probe.train_player_ids[1].clone();

        let mut pairs: Vec<(String, String)> = chosen_games.iter().map(|g| (player.clone(), g.clone())).collect();
        pairs.push((other, probe.train_game_ids[0].clone()));
        let players = (0..8).map(|i| format!("p{i:03}")).collect();
        let games = (0..8).map(|j| format!("g{j:03}")).collect();
        let likes = GameLikeMatrix::from_pairs_with_axes(players, games, &pairs).unwrap();
        let bundle = four_way_split(&dataset(likes), &config).unwrap();

        assert_eq!(bundle.test_game_ids.len(), 2);
        assert_eq!(bundle.test_player_ids.len(), 2);
        assert_eq!(bundle.setting1_player_ids, [player.clone()]);
        let row = bundle.train_likes.player_index(&player).unwrap();
        assert_eq!(bundle.train_likes.liked_games(row).len(), 3);
        assert_eq!(bundle.validation(Setting::KnownKnown).len(), 2);
    }

    #[test]
    fn split_errors() {
        let tiny = dataset(square(3, 8, |_, _| true));
        assert!(four_way_split(&tiny, &SplitConfig::default()).is_err());
        let sparse = dataset(square(8, 8, |i, j| i == j));
        assert!(matches!(
            four_way_split(&sparse, &SplitConfig::default()),
            Err(Error::Config(_))
        ));
        let bad = SplitConfig {
            test_game_fraction: 1.0,
            ..SplitConfig::default()
        };
        assert!(four_way_split(&dataset(square(8, 8, |_, _| true)), &bad).is_err());
    }

    #[test]
    fn bundle_round_trips_through_directory() {
        let data = dataset(square(12, 10, |i, j| (i * 7 + j * 3) % 4 != 0));
        let bundle = four_way_split(&data, &SplitConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        bundle.write_dir(dir.path()).unwrap();
        assert_eq!(SplitBundle::read_dir(dir.path()).unwrap(), bundle);
    }
}
