//! Synthetic datasets with a planted low-rank tag × question interaction.
//!
//! Game tags are i.i.d. Bernoulli, questionnaire answers are uniform over
//! the five Likert levels, and the like probability of player `i` for game
//! `j` is a logistic squashing of `x_tags(j)ᵀ A* x_questions(i)` (after
//! standardizing the scores) plus an intercept chosen so the realized like
//! fraction hits the requested density. Each cell is then flipped with
//! probability `noise`.

use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, GameFeatureMatrix, GameLikeMatrix, PlayerFeatureMatrix};
use crate::error::{Error, Result};

/// Probability that a game carries any given tag.
pub const TAG_PROBABILITY: f64 = 0.1;
/// Slope applied to the standardized planted scores before squashing.
pub const SCORE_SHARPNESS: f64 = 10.0;
const DENSITY_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub s: usize,
    pub density: f64,
    pub interaction_rank: usize,
    pub noise: f64,
    pub rng_seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            m: 500,
            r: 40,
            s: 20,
            density: 0.05,
            interaction_rank: 4,
            noise: 0.05,
            rng_seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [("n", self.n), ("m", self.m), ("r", self.r), ("s", self.s)];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if self.interaction_rank == 0 {
            return Err(Error::Config("interaction_rank must be at least 1".into()));
        }
        if !(self.density > 0.0 && self.density < 1.0) {
            return Err(Error::Config(format!("density {} is not in (0,1)", self.density)));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return Err(Error::Config(format!("noise {} is not in [0,0.5)", self.noise)));
        }
        Ok(())
    }

    /// Overrides fields from `key=value` items separated by commas or
    /// newlines. Blank lines and `#` comments are ignored.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for item in text.split([',', '\n']) {
            let item = item.trim();
            if item.is_empty() || item.starts_with('#') {
                continue;
            }
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, found `{item}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || Error::Config(format!("bad value `{value}` for `{key}`"));
            match key {
                "n" => self.n = value.parse().map_err(|_| bad())?,
                "m" => self.m = value.parse().map_err(|_| bad())?,
                "r" => self.r = value.parse().map_err(|_| bad())?,
                "s" => self.s = value.parse().map_err(|_| bad())?,
                "density" => self.density = value.parse().map_err(|_| bad())?,
                "rank" | "interaction_rank" => self.interaction_rank = value.parse().map_err(|_| bad())?,
                "noise" => self.noise = value.parse().map_err(|_| bad())?,
                "seed" | "rng_seed" => self.rng_seed = value.parse().map_err(|_| bad())?,
                other => {
                    return Err(Error::Unknown {
                        what: "synthetic config key",
                        name: other.to_owned(),
                    })
                }
            }
        }
        self.validate()
    }
}

impl FromStr for SyntheticConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut config = Self::default();
        config.apply_overrides(s)?;
        Ok(config)
    }
}

/// The generating parameters behind a synthetic dataset.
#[derive(Debug, Clone)]
pub struct PlantedTruth {
    /// `A*`, r × s.
    pub interactions: DMatrix<f64>,
    pub intercept: f64,
    /// Like probability per cell before noise, n × m.
    pub probabilities: DMatrix<f64>,
    /// Uniform draw per cell; a cell is liked before noise iff its draw is
    /// below its probability.
    pub draws: DMatrix<f64>,
    pub flipped: usize,
}

fn padded_ids(prefix: &str, count: usize) -> Vec<String> {
    let width = count.saturating_sub(1).to_string().len();
    (0..count).map(|i| format!("{prefix}{i:0width$}")).collect()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Dataset> {
    generate_synthetic_with_truth(config).map(|(dataset, _)| dataset)
}

pub fn generate_synthetic_with_truth(config: &SyntheticConfig) -> Result<(Dataset, PlantedTruth)> {
    config.validate()?;
    let SyntheticConfig { n, m, r, s, .. } = *config;
    let rank = config.interaction_rank;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let tag_values: Vec<u8> = (0..m * r)
        .map(|_| rng.random_bool(TAG_PROBABILITY) as u8)
        .collect();
    let answer_values: Vec<i8> = (0..n * s).map(|_| rng.random_range(-2i8..=2)).collect();

    let left = DMatrix::<f64>::from_fn(r, rank, |_, _| rng.sample(StandardNormal));
    let right = DMatrix::<f64>::from_fn(s, rank, |_, _| rng.sample(StandardNormal));
    let interactions = (&left * right.transpose()) / (rank as f64).sqrt();

    let tags = GameFeatureMatrix::new(padded_ids("g", m), padded_ids("t", r), tag_values)?;
    let questions = PlayerFeatureMatrix::new(padded_ids("p", n), padded_ids("q", s), answer_values)?;

    // scores[i, j] = x_tags(j)ᵀ A* x_questions(i)
    let scores = questions.to_dense() * interactions.transpose() * tags.to_dense().transpose();
    let count = (n * m) as f64;
    let mean = scores.sum() / count;
    let std = (scores.map(|v| (v - mean).powi(2)).sum() / count).sqrt();
    let standardized = if std > 0.0 {
        scores.map(|v| (v - mean) / std)
    } else {
        DMatrix::zeros(n, m)
    };

    let draws = DMatrix::<f64>::from_fn(n, m, |_, _| rng.random::<f64>());

    // A cell is liked iff draw < logistic(sharpness·z + b), i.e. iff
    // logit(draw) - sharpness·z < b. The like count is monotone in b, so the
    // intercept hitting a target count sits between two order statistics.
    let mut thresholds: Vec<f64> = draws
        .iter()
        .zip(standardized.iter())
        .map(|(&u, &z)| (u / (1.0 - u)).ln() - SCORE_SHARPNESS * z)
        .collect();
    thresholds.sort_by(f64::total_cmp);
    let target = ((config.density * count).round() as usize).clamp(1, n * m);
    let intercept = if target == n * m {
        thresholds[target - 1] + 1.0
    } else {
        let (lo, hi) = (thresholds[target - 1], thresholds[target]);
        if hi.is_finite() && lo.is_finite() {
            0.5 * (lo + hi)
        } else {
            lo.clamp(-1e300, 1e300)
        }
    };

    let probabilities = standardized.map(|z| logistic(SCORE_SHARPNESS * z + intercept));
    let mut values: Vec<u8> = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            values.push((draws[(i, j)] < probabilities[(i, j)]) as u8);
        }
    }
    let achieved = values.iter().map(|&v| v as f64).sum::<f64>() / count;
    if (achieved / config.density - 1.0).abs() > DENSITY_TOLERANCE {
        return Err(Error::Calibration {
            achieved,
            target: config.density,
        });
    }

    let mut flipped = 0;
    for v in values.iter_mut() {
        if rng.random::<f64>() < config.noise {
            *v ^= 1;
            flipped += 1;
        }
    }

    let likes = GameLikeMatrix::new(padded_ids("p", n), padded_ids("g", m), values)?;
    let dataset = Dataset::new(likes, tags, questions)?;
    let truth = PlantedTruth {
        interactions,
        intercept,
        probabilities,
        draws,
        flipped,
    };
    Ok((dataset, truth))
}
