#![allow(dead_code)]

use std::collections::BTreeSet;

use coldrec::data::{GameFeatureMatrix, GameLikeMatrix, PlayerFeatureMatrix};
use coldrec::split::{check_no_leakage, four_way_split, Setting, SplitConfig};
use coldrec::Dataset;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap();
        m.swap_rows(col, pivot);
        x.swap_rows(col, pivot);
        let d = m[(col, col)];
        assert!(d.abs() > 1e-300, "singular system");
        for row in 0..n {
            if row != col {
                let f = m[(row, col)] / d;
                if f != 0.0 {
                    for k in col..n {
                        m[(row, k)] -= f * m[(col, k)];
                    }
                    for k in 0..x.ncols() {
                        x[(row, k)] -= f * x[(col, k)];
                    }
                }
            }
        }
    }
    for row in 0..n {
        let d = m[(row, row)];
        for k in 0..x.ncols() {
            x[(row, k)] /= d;
        }
    }
    x
}

/// Ridge coefficients `(XᵀX + λI)⁻¹ Xᵀ y` computed one target at a time.
pub fn ridge_oracle(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let p = x.ncols();
    let mut gram = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            gram[(a, b)] = (0..x.nrows()).map(|i| x[(i, a)] * x[(i, b)]).sum::<f64>();
        }
        gram[(a, a)] += lambda;
    }
    let mut out = DMatrix::zeros(p, y.ncols());
    for t in 0..y.ncols() {
        let rhs = DMatrix::from_fn(p, 1, |a, _| (0..x.nrows()).map(|i| x[(i, a)] * y[(i, t)]).sum::<f64>());
        out.set_column(t, &gauss_solve(&gram, &rhs).column(0));
    }
    out
}

/// Interaction matrix (tags × questions) from the explicitly materialized
/// pair design whose row for (player i, game j) is `x_q(i) ⊗ x_t(j)`
/// arranged as column `a·s + b` = `x_t(j)[a] · x_q(i)[b]`.
pub fn kron_oracle(r: &DMatrix<f64>, xq: &DMatrix<f64>, xt: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let (n, m) = r.shape();
    let (tags, questions) = (xt.ncols(), xq.ncols());
    let design = DMatrix::from_fn(n * m, tags * questions, |row, col| {
        let (i, j) = (row / m, row % m);
        let (a, b) = (col / questions, col % questions);
        xt[(j, a)] * xq[(i, b)]
    });
    let targets = DMatrix::from_fn(n * m, 1, |row, _| r[(row / m, row % m)]);
    let coef = ridge_oracle(&design, &targets, lambda);
    DMatrix::from_fn(tags, questions, |a, b| coef[(a * questions + b, 0)])
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn ids(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i:06}")).collect()
}

pub fn random_binary(rng: &mut ChaCha8Rng, rows: usize, cols: usize, p: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| if rng.random_bool(p) { 1.0 } else { 0.0 })
}

pub fn random_likert(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-2i32..=2) as f64)
}

pub fn likes_from_bits(players: usize, games: usize, bits: &[bool]) -> GameLikeMatrix {
    let values = bits.iter().map(|&b| b as u8).collect();
    GameLikeMatrix::new(ids("p", players), ids("g", games), values).unwrap()
}

/// A dataset with random likes, tags and answers.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> Dataset {
    let bits: Vec<bool> = (0..n * m).map(|_| rng.random_bool(density)).collect();
    let likes = likes_from_bits(n, m, &bits);
    let tag_values = (0..m * 3).map(|_| rng.random_bool(0.4) as u8).collect();
    let tags = GameFeatureMatrix::new(ids("g", m), ids("t", 3), tag_values).unwrap();
    let answers = (0..n * 2).map(|_| rng.random_range(-2i8..=2)).collect();
    let questions = PlayerFeatureMatrix::new(ids("p", n), ids("q", 2), answers).unwrap();
    Dataset::new(likes, tags, questions).unwrap()
}

fn like_pairs(likes: &GameLikeMatrix) -> Vec<(String, String)> {
    likes
        .pairs()
        .map(|(i, j)| (likes.player_ids()[i].clone(), likes.game_ids()[j].clone()))
        .collect()
}

/// The same dataset built from shuffled like rows and a reversed player list.
pub fn shuffled_copy(data: &Dataset, seed: u64) -> Dataset {
    let mut pairs = like_pairs(&data.likes);
    pairs.shuffle(&mut rng(seed));
    let players: BTreeSet<String> = data.likes.player_ids().iter().rev().cloned().collect();
    let likes =
        GameLikeMatrix::from_pairs_with_axes(players.into_iter().collect(), data.likes.game_ids().to_vec(), &pairs)
            .unwrap();
    Dataset::new(likes, data.tags.clone(), data.questions.clone()).unwrap()
}

/// Checks disjointness, axis placement, union completeness, seed counts and
/// determinism of one split. `Ok(false)` when the split is refused (too few
/// eligible players).
pub fn check_split(data: &Dataset, config: &SplitConfig) -> Result<bool, String> {
    let Ok(bundle) = four_way_split(data, config) else {
        return Ok(false);
    };
    check_no_leakage(&bundle).map_err(|e| e.to_string())?;

    let train_players: BTreeSet<&String> = bundle.train_player_ids.iter().collect();
    let train_games: BTreeSet<&String> = bundle.train_game_ids.iter().collect();
    let mut seen = like_pairs(&bundle.train_likes);
    for setting in Setting::ALL {
        for (p, g) in bundle.validation(setting) {
            if train_players.contains(p) == setting.new_players() || train_games.contains(g) == setting.new_games() {
                return Err(format!("({p}, {g}) is on the wrong axes for {setting}"));
            }
            seen.push((p.clone(), g.clone()));
        }
    }
    seen.sort();
    let total = seen.len();
    seen.dedup();
    if seen.len() != total {
        return Err(format!("{} like(s) placed twice", total - seen.len()));
    }
    let mut all = like_pairs(&data.likes);
    all.sort();
    if seen != all {
        return Err("training and validation likes do not reassemble the dataset".into());
    }

    for id in &bundle.setting1_player_ids {
        let row = bundle.train_likes.player_index(id).ok_or("setting-1 player missing from training")?;
        let seeds = bundle.train_likes.liked_games(row).len();
        if seeds != config.seed_likes_per_player {
            return Err(format!("{id} keeps {seeds} seed likes"));
        }
    }
    if four_way_split(data, config).ok().as_ref() != Some(&bundle) {
        return Err("split is not deterministic".into());
    }
    if four_way_split(&shuffled_copy(data, config.rng_seed), config).ok().as_ref() != Some(&bundle) {
        return Err("split depends on input row order".into());
    }
    Ok(true)
}
