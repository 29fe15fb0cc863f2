//! Dense like, tag and questionnaire matrices with canonical (sorted) axes.
//!
//! Every matrix here keys its rows and columns by opaque string IDs kept in
//! lexicographic order, so two datasets holding the same facts are equal
//! regardless of the order in which the facts were read.

mod io;
mod synthetic;

pub use io::{
    load_game_tags, load_likes, load_player_questions, save_game_tags, save_likes,
    save_player_questions, LikertScale,
};
pub use synthetic::{generate_synthetic, generate_synthetic_with_truth, PlantedTruth, SyntheticConfig};

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Position of `id` in a sorted axis.
pub fn axis_index(axis: &[String], id: &str) -> Option<usize> {
    axis.binary_search_by(|probe| probe.as_str().cmp(id)).ok()
}

fn check_axis(axis: &[String], what: &str) -> Result<()> {
    if axis.windows(2).all(|w| w[0] < w[1]) {
        Ok(())
    } else {
        Err(Error::Alignment(format!(
            "{what} must be unique and sorted lexicographically"
        )))
    }
}

fn sorted_unique<'a>(ids: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    ids.into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect()
}

/// Binary player × game like matrix `R`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameLikeMatrix {
    player_ids: Vec<String>,
    game_ids: Vec<String>,
    /// Row-major, one byte per cell.
    values: Vec<u8>,
}

impl GameLikeMatrix {
    pub fn new(player_ids: Vec<String>, game_ids: Vec<String>, values: Vec<u8>) -> Result<Self> {
        check_axis(&player_ids, "player_ids")?;
        check_axis(&game_ids, "game_ids")?;
        if values.len() != player_ids.len() * game_ids.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{} like matrix",
                values.len(),
                player_ids.len(),
                game_ids.len()
            )));
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::Alignment("like matrix entries must be 0 or 1".into()));
        }
        Ok(Self {
            player_ids,
            game_ids,
            values,
        })
    }

    /// Builds the matrix spanned by the IDs occurring in `pairs`.
    pub fn from_pairs<P, G>(pairs: &[(P, G)]) -> Self
    where
        P: AsRef<str>,
        G: AsRef<str>,
    {
        let players = sorted_unique(pairs.iter().map(|(p, _)| p.as_ref()));
        let games = sorted_unique(pairs.iter().map(|(_, g)| g.as_ref()));
        Self::from_pairs_with_axes(players, games, pairs).expect("axes cover every pair")
    }

    /// Builds a matrix over explicit axes; every pair must be on the axes.
    pub fn from_pairs_with_axes<P, G>(
        player_ids: Vec<String>,
        game_ids: Vec<String>,
        pairs: &[(P, G)],
    ) -> Result<Self>
    where
        P: AsRef<str>,
        G: AsRef<str>,
    {
        check_axis(&player_ids, "player_ids")?;
        check_axis(&game_ids, "game_ids")?;
        let m = game_ids.len();
        let mut values = vec![0u8; player_ids.len() * m];
        for (p, g) in pairs {
            let i = axis_index(&player_ids, p.as_ref()).ok_or_else(|| Error::Unknown {
                what: "player",
                name: p.as_ref().to_owned(),
            })?;
            let j = axis_index(&game_ids, g.as_ref()).ok_or_else(|| Error::Unknown {
                what: "game",
                name: g.as_ref().to_owned(),
            })?;
            values[i * m + j] = 1;
        }
        Ok(Self {
            player_ids,
            game_ids,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.player_ids.len()
    }

    /// Adds zero rows for the given players not already on the axis.
    pub fn with_players<S: AsRef<str>>(&self, extra: &[S]) -> Result<Self> {
        let mut player_ids = self.player_ids.clone();
        player_ids.extend(
            extra
                .iter()
                .map(AsRef::as_ref)
                .filter(|p| axis_index(&self.player_ids, p).is_none())
                .map(str::to_owned),
        );
        player_ids.sort();
        player_ids.dedup();
        let pairs: Vec<(&str, &str)> = self
            .pairs()
            .map(|(i, j)| (self.player_ids[i].as_str(), self.game_ids[j].as_str()))
            .collect();
        Self::from_pairs_with_axes(player_ids, self.game_ids.clone(), &pairs)
    }

    pub fn m(&self) -> usize {
        self.game_ids.len()
    }

    pub fn player_ids(&self) -> &[String] {
        &self.player_ids
    }

    pub fn game_ids(&self) -> &[String] {
        &self.game_ids
    }

    pub fn player_index(&self, id: &str) -> Option<usize> {
        axis_index(&self.player_ids, id)
    }

    pub fn game_index(&self, id: &str) -> Option<usize> {
        axis_index(&self.game_ids, id)
    }

    pub fn get(&self, player: usize, game: usize) -> bool {
        self.values[player * self.m() + game] == 1
    }

    pub fn row(&self, player: usize) -> &[u8] {
        let m = self.m();
        &self.values[player * m..(player + 1) * m]
    }

    /// Indices of the games liked by `player`, ascending.
    pub fn liked_games(&self, player: usize) -> Vec<usize> {
        self.row(player)
            .iter()
            .enumerate()
            .filter_map(|(j, &v)| (v == 1).then_some(j))
            .collect()
    }

    /// All liked `(player, game)` index pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.m();
        self.values
            .iter()
            .enumerate()
            .filter_map(move |(k, &v)| (v == 1).then_some((k / m, k % m)))
    }

    pub fn like_count(&self) -> usize {
        self.values.iter().map(|&v| v as usize).sum()
    }

    pub fn density(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.like_count() as f64 / self.values.len() as f64
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.m(), |i, j| self.values[i * self.m() + j] as f64)
    }

    /// Sub-matrix over the given rows and columns. Indices must be strictly
    /// ascending so the result keeps sorted axes.
    pub fn select(&self, players: &[usize], games: &[usize]) -> Result<Self> {
        let player_ids = players.iter().map(|&i| self.player_ids[i].clone()).collect();
        let game_ids = games.iter().map(|&j| self.game_ids[j].clone()).collect();
        let mut values = Vec::with_capacity(players.len() * games.len());
        for &i in players {
            let row = self.row(i);
            values.extend(games.iter().map(|&j| row[j]));
        }
        Self::new(player_ids, game_ids, values)
    }

    pub(crate) fn clear(&mut self, player: usize, game: usize) {
        let m = self.m();
        self.values[player * m + game] = 0;
    }
}

/// Binary game × tag indicator matrix `X_tags`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameFeatureMatrix {
    game_ids: Vec<String>,
    tag_names: Vec<String>,
    values: Vec<u8>,
}

impl GameFeatureMatrix {
    pub fn new(game_ids: Vec<String>, tag_names: Vec<String>, values: Vec<u8>) -> Result<Self> {
        check_axis(&game_ids, "game_ids")?;
        check_axis(&tag_names, "tag_names")?;
        if values.len() != game_ids.len() * tag_names.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{} tag matrix",
                values.len(),
                game_ids.len(),
                tag_names.len()
            )));
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::Alignment("tag indicators must be 0 or 1".into()));
        }
        Ok(Self {
            game_ids,
            tag_names,
            values,
        })
    }

    pub fn from_pairs<G: AsRef<str>, T: AsRef<str>>(pairs: &[(G, T)]) -> Self {
        let game_ids = sorted_unique(pairs.iter().map(|(g, _)| g.as_ref()));
        let tag_names = sorted_unique(pairs.iter().map(|(_, t)| t.as_ref()));
        let r = tag_names.len();
        let mut values = vec![0u8; game_ids.len() * r];
        for (g, t) in pairs {
            let i = axis_index(&game_ids, g.as_ref()).unwrap();
            let j = axis_index(&tag_names, t.as_ref()).unwrap();
            values[i * r + j] = 1;
        }
        Self {
            game_ids,
            tag_names,
            values,
        }
    }

    pub fn m(&self) -> usize {
        self.game_ids.len()
    }

    pub fn r(&self) -> usize {
        self.tag_names.len()
    }

    pub fn game_ids(&self) -> &[String] {
        &self.game_ids
    }

    pub fn tag_names(&self) -> &[String] {
        &self.tag_names
    }

    pub fn get(&self, game: usize, tag: usize) -> bool {
        self.values[game * self.r() + tag] == 1
    }

    pub fn row(&self, game: usize) -> &[u8] {
        let r = self.r();
        &self.values[game * r..(game + 1) * r]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m(), self.r(), |i, j| self.values[i * self.r() + j] as f64)
    }

    /// Reorders rows onto `game_ids`. Games without tag data get all-zero
    /// rows and are returned in the second slot; a tagged game missing
    /// from `game_ids` is an alignment error.
    pub fn align_to(&self, game_ids: &[String]) -> Result<(Self, Vec<String>)> {
        if self.r() == 0 {
            return Err(Error::NoTags);
        }
        if let Some(unknown) = self.game_ids.iter().find(|g| axis_index(game_ids, g).is_none()) {
            return Err(Error::Alignment(format!(
                "tagged game `{unknown}` does not occur in the like matrix"
            )));
        }
        let r = self.r();
        let mut values = vec![0u8; game_ids.len() * r];
        let mut untagged = Vec::new();
        for (i, g) in game_ids.iter().enumerate() {
            match axis_index(&self.game_ids, g) {
                Some(src) => values[i * r..(i + 1) * r].copy_from_slice(self.row(src)),
                None => untagged.push(g.clone()),
            }
        }
        let aligned = Self::new(game_ids.to_vec(), self.tag_names.clone(), values)?;
        Ok((aligned, untagged))
    }

    /// Rows for the given game indices (strictly ascending).
    pub fn select_games(&self, games: &[usize]) -> Result<Self> {
        let game_ids = games.iter().map(|&i| self.game_ids[i].clone()).collect();
        let mut values = Vec::with_capacity(games.len() * self.r());
        for &i in games {
            values.extend_from_slice(self.row(i));
        }
        Self::new(game_ids, self.tag_names.clone(), values)
    }
}

/// Integer player × question Likert matrix `X_questions`, entries in -2..=2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayerFeatureMatrix {
    player_ids: Vec<String>,
    question_ids: Vec<String>,
    values: Vec<i8>,
}

impl PlayerFeatureMatrix {
    pub fn new(player_ids: Vec<String>, question_ids: Vec<String>, values: Vec<i8>) -> Result<Self> {
        check_axis(&player_ids, "player_ids")?;
        check_axis(&question_ids, "question_ids")?;
        if values.len() != player_ids.len() * question_ids.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{} question matrix",
                values.len(),
                player_ids.len(),
                question_ids.len()
            )));
        }
        if values.iter().any(|v| !(-2..=2).contains(v)) {
            return Err(Error::Alignment("question answers must lie in -2..=2".into()));
        }
        Ok(Self {
            player_ids,
            question_ids,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.player_ids.len()
    }

    pub fn s(&self) -> usize {
        self.question_ids.len()
    }

    pub fn player_ids(&self) -> &[String] {
        &self.player_ids
    }

    pub fn question_ids(&self) -> &[String] {
        &self.question_ids
    }

    pub fn get(&self, player: usize, question: usize) -> i8 {
        self.values[player * self.s() + question]
    }

    pub fn row(&self, player: usize) -> &[i8] {
        let s = self.s();
        &self.values[player * s..(player + 1) * s]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.s(), |i, j| self.values[i * self.s() + j] as f64)
    }

    /// Reorders rows onto `player_ids`; players without answers become
    /// neutral all-zero rows and are returned in the second slot.
    pub fn align_to(&self, player_ids: &[String]) -> Result<(Self, Vec<String>)> {
        if let Some(unknown) = self
            .player_ids
            .iter()
            .find(|p| axis_index(player_ids, p).is_none())
        {
            return Err(Error::Alignment(format!(
                "player `{unknown}` answered questions but does not occur in the like matrix"
            )));
        }
        let s = self.s();
        let mut values = vec![0i8; player_ids.len() * s];
        let mut missing = Vec::new();
        for (i, p) in player_ids.iter().enumerate() {
            match axis_index(&self.player_ids, p) {
                Some(src) => values[i * s..(i + 1) * s].copy_from_slice(self.row(src)),
                None => missing.push(p.clone()),
            }
        }
        let aligned = Self::new(player_ids.to_vec(), self.question_ids.clone(), values)?;
        Ok((aligned, missing))
    }

    pub fn select_players(&self, players: &[usize]) -> Result<Self> {
        let player_ids = players.iter().map(|&i| self.player_ids[i].clone()).collect();
        let mut values = Vec::with_capacity(players.len() * self.s());
        for &i in players {
            values.extend_from_slice(self.row(i));
        }
        Self::new(player_ids, self.question_ids.clone(), values)
    }
}

/// Likes plus both feature matrices, with aligned axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub likes: GameLikeMatrix,
    pub tags: GameFeatureMatrix,
    pub questions: PlayerFeatureMatrix,
    /// Games in the like matrix that had no tag data (all-zero rows).
    pub untagged_games: Vec<String>,
}

impl Dataset {
    /// Aligns the feature matrices onto the like matrix axes.
    pub fn new(
        likes: GameLikeMatrix,
        tags: GameFeatureMatrix,
        questions: PlayerFeatureMatrix,
    ) -> Result<Self> {
        let (tags, untagged_games) = tags.align_to(likes.game_ids())?;
        let (questions, unanswered) = questions.align_to(likes.player_ids())?;
        if !untagged_games.is_empty() {
            log::warn!(
                "{} game(s) have no tags and get all-zero feature rows",
                untagged_games.len()
            );
        }
        if !unanswered.is_empty() {
            log::warn!(
                "{} player(s) answered no questions and get neutral rows",
                unanswered.len()
            );
        }
        Ok(Self {
            likes,
            tags,
            questions,
            untagged_games,
        })
    }

    /// Loads `likes.csv`, `tags.csv` and `questions.csv`.
    pub fn load(
        likes: impl AsRef<std::path::Path>,
        tags: impl AsRef<std::path::Path>,
        questions: impl AsRef<std::path::Path>,
    ) -> Result<Self> {
        let likes = load_likes(likes)?;
        let tags = load_game_tags(tags)?;
        let questions = load_player_questions(questions, LikertScale::Auto)?;
        // players who answered questions but liked nothing have no like rows
        let likes = likes.with_players(questions.player_ids())?;
        Self::new(likes, tags, questions)
    }

    /// Loads the three standard file names from a directory.
    pub fn load_dir(dir: impl AsRef<std::path::Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Self::load(
            dir.join("likes.csv"),
            dir.join("tags.csv"),
            dir.join("questions.csv"),
        )
    }

    pub fn save_dir(&self, dir: impl AsRef<std::path::Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_likes(&self.likes, dir.join("likes.csv"))?;
        save_game_tags(&self.tags, dir.join("tags.csv"))?;
        save_player_questions(&self.questions, dir.join("questions.csv"))
    }

    /// Restriction to the given player and game indices (strictly ascending).
    pub fn select(&self, players: &[usize], games: &[usize]) -> Result<Self> {
        Ok(Self {
            likes: self.likes.select(players, games)?,
            tags: self.tags.select_games(games)?,
            questions: self.questions.select_players(players)?,
            untagged_games: Vec::new(),
        })
    }
}
