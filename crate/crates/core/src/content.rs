//! Content models: per-player ridge on game tags, per-game ridge on
//! questionnaire answers, and the bilinear tag × question interaction
//! model fitted with the Kronecker vec-trick.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{axis_index, GameFeatureMatrix, GameLikeMatrix, PlayerFeatureMatrix};
use crate::error::{Error, Result};
use crate::linalg::{ridge_solve, sym_eig};

fn positive_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("lambda {lambda} must be positive")))
    }
}

/// Re-expresses `values` (rows × eval columns named `eval_names`) over the
/// `trained` column order. Unknown eval columns are dropped; trained columns
/// missing from the evaluation data are zero.
pub(crate) fn align_columns(
    values: &DMatrix<f64>,
    eval_names: &[String],
    trained: &[String],
    what: &str,
) -> Result<DMatrix<f64>> {
    let mapping: Vec<Option<usize>> = trained.iter().map(|name| axis_index(eval_names, name)).collect();
    let overlap = mapping.iter().filter(|m| m.is_some()).count();
    if overlap == 0 {
        return Err(Error::Alignment(format!("no overlapping {what}s with the trained model")));
    }
    if overlap < eval_names.len() {
        log::warn!(
            "dropping {} {what}(s) unseen during training",
            eval_names.len() - overlap
        );
    }
    Ok(DMatrix::from_fn(values.nrows(), trained.len(), |i, j| {
        mapping[j].map_or(0.0, |src| values[(i, src)])
    }))
}

/// Player × tag response matrix `T`; predictions are `T X_tagsᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagsModel {
    pub player_ids: Vec<String>,
    pub tag_names: Vec<String>,
    #[serde(with = "crate::persist::dense_matrix")]
    pub t: DMatrix<f64>,
    pub lambda: f64,
}

impl TagsModel {
    pub fn fit(likes: &GameLikeMatrix, tags: &GameFeatureMatrix, lambda: f64) -> Result<Self> {
        if likes.game_ids() != tags.game_ids() {
            return Err(Error::Dimension(
                "tag matrix rows are not aligned with the like matrix games".into(),
            ));
        }
        Self::fit_targets(
            &likes.to_dense(),
            &tags.to_dense(),
            lambda,
            likes.player_ids().to_vec(),
            tags.tag_names().to_vec(),
        )
    }

    /// Fits against arbitrary real targets (players × games) and game
    /// features (games × features).
    pub fn fit_targets(
        targets: &DMatrix<f64>,
        features: &DMatrix<f64>,
        lambda: f64,
        player_ids: Vec<String>,
        tag_names: Vec<String>,
    ) -> Result<Self> {
        positive_lambda(lambda)?;
        if targets.ncols() != features.nrows() {
            return Err(Error::Dimension(format!(
                "{} games in targets, {} in features",
                targets.ncols(),
                features.nrows()
            )));
        }
        // One multi-target ridge: design X_tags, targets Rᵀ.
        let t = ridge_solve(features, &targets.transpose(), lambda)?.transpose();
        Ok(Self {
            player_ids,
            tag_names,
            t,
            lambda,
        })
    }

    /// Scores for every training player against the evaluation games.
    pub fn predict(&self, eval: &GameFeatureMatrix) -> Result<DMatrix<f64>> {
        let features = align_columns(&eval.to_dense(), eval.tag_names(), &self.tag_names, "tag")?;
        Ok(self.predict_dense(&features))
    }

    pub fn predict_dense(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        &self.t * features.transpose()
    }
}

/// Game × question response matrix `Q`; predictions are `X_questions Qᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionsModel {
    pub game_ids: Vec<String>,
    pub question_ids: Vec<String>,
    #[serde(with = "crate::persist::dense_matrix")]
    pub q: DMatrix<f64>,
    pub lambda: f64,
}

impl QuestionsModel {
    pub fn fit(likes: &GameLikeMatrix, questions: &PlayerFeatureMatrix, lambda: f64) -> Result<Self> {
        if likes.player_ids() != questions.player_ids() {
            return Err(Error::Dimension(
                "question matrix rows are not aligned with the like matrix players".into(),
            ));
        }
        Self::fit_targets(
            &likes.to_dense(),
            &questions.to_dense(),
            lambda,
            likes.game_ids().to_vec(),
            questions.question_ids().to_vec(),
        )
    }

    pub fn fit_targets(
        targets: &DMatrix<f64>,
        features: &DMatrix<f64>,
        lambda: f64,
        game_ids: Vec<String>,
        question_ids: Vec<String>,
    ) -> Result<Self> {
        positive_lambda(lambda)?;
        if targets.nrows() != features.nrows() {
            return Err(Error::Dimension(format!(
                "{} players in targets, {} in features",
                targets.nrows(),
                features.nrows()
            )));
        }
        let q = ridge_solve(features, targets, lambda)?.transpose();
        Ok(Self {
            game_ids,
            question_ids,
            q,
            lambda,
        })
    }

    /// Scores for the evaluation players against every training game.
    pub fn predict(&self, eval: &PlayerFeatureMatrix) -> Result<DMatrix<f64>> {
        let features = align_columns(&eval.to_dense(), eval.question_ids(), &self.question_ids, "question")?;
        Ok(self.predict_dense(&features))
    }

    pub fn predict_dense(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        features * self.q.transpose()
    }
}

/// Tag × question interaction strengths `A` with
/// `score(player i, game j) = x_tags(j)ᵀ A x_questions(i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionModel {
    pub tag_names: Vec<String>,
    pub question_ids: Vec<String>,
    #[serde(with = "crate::persist::dense_matrix")]
    pub a: DMatrix<f64>,
    pub lambda: f64,
}

impl InteractionModel {
    pub fn fit(
        likes: &GameLikeMatrix,
        questions: &PlayerFeatureMatrix,
        tags: &GameFeatureMatrix,
        lambda: f64,
    ) -> Result<Self> {
        if likes.player_ids() != questions.player_ids() || likes.game_ids() != tags.game_ids() {
            return Err(Error::Dimension(
                "feature matrices are not aligned with the like matrix".into(),
            ));
        }
        Self::fit_targets(
            &likes.to_dense(),
            &questions.to_dense(),
            &tags.to_dense(),
            lambda,
            tags.tag_names().to_vec(),
            questions.question_ids().to_vec(),
        )
    }

    /// Ridge regression over the pair features `x_questions(i) ⊗ x_tags(j)`
    /// without forming the (n·m) × (r·s) design. With eigendecompositions
    /// `X_tᵀX_t = V_t Λ_t V_tᵀ` and `X_qᵀX_q = V_q Λ_q V_qᵀ`, the normal
    /// equations `X_tᵀX_t A X_qᵀX_q + λA = X_tᵀ Rᵀ X_q` diagonalize to an
    /// elementwise division in the rotated basis.
    pub fn fit_targets(
        targets: &DMatrix<f64>,
        player_features: &DMatrix<f64>,
        game_features: &DMatrix<f64>,
        lambda: f64,
        tag_names: Vec<String>,
        question_ids: Vec<String>,
    ) -> Result<Self> {
        positive_lambda(lambda)?;
        let (n, m) = targets.shape();
        if player_features.nrows() != n || game_features.nrows() != m {
            return Err(Error::Dimension(format!(
                "targets {n}x{m}, player features with {} rows, game features with {} rows",
                player_features.nrows(),
                game_features.nrows()
            )));
        }
        let mut tag_gram = game_features.tr_mul(game_features);
        tag_gram.fill_lower_triangle_with_upper_triangle();
        let mut question_gram = player_features.tr_mul(player_features);
        question_gram.fill_lower_triangle_with_upper_triangle();
        let tag_eig = sym_eig(&tag_gram)?;
        let question_eig = sym_eig(&question_gram)?;

        // C = X_tᵀ Rᵀ X_q, r × s, built as X_tᵀ (Rᵀ X_q) to stay O(m·s).
        let cross = game_features.tr_mul(&targets.tr_mul(player_features));
        let mut rotated = tag_eig.vectors.tr_mul(&cross) * &question_eig.vectors;
        for b in 0..rotated.ncols() {
            for a in 0..rotated.nrows() {
                rotated[(a, b)] /= tag_eig.values[a] * question_eig.values[b] + lambda;
            }
        }
        let a = &tag_eig.vectors * rotated * question_eig.vectors.transpose();
        Ok(Self {
            tag_names,
            question_ids,
            a,
            lambda,
        })
    }

    /// `x_tagsᵀ A x_questions` for one (player, game) pair.
    pub fn predict_pair(&self, questions_row: &[f64], tags_row: &[f64]) -> Result<f64> {
        if questions_row.len() != self.a.ncols() || tags_row.len() != self.a.nrows() {
            return Err(Error::Dimension(format!(
                "feature rows of length ({}, {}) for a {}x{} interaction matrix",
                tags_row.len(),
                questions_row.len(),
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        let projected = &self.a * DVector::from_column_slice(questions_row);
        Ok(projected.dot(&DVector::from_column_slice(tags_row)))
    }

    /// Evaluation players × evaluation games, aligned by feature names.
    pub fn predict(&self, players: &PlayerFeatureMatrix, games: &GameFeatureMatrix) -> Result<DMatrix<f64>> {
        let xq = align_columns(&players.to_dense(), players.question_ids(), &self.question_ids, "question")?;
        let xt = align_columns(&games.to_dense(), games.tag_names(), &self.tag_names, "tag")?;
        Ok(self.predict_dense(&xq, &xt))
    }

    pub fn predict_dense(&self, player_features: &DMatrix<f64>, game_features: &DMatrix<f64>) -> DMatrix<f64> {
        player_features * self.a.transpose() * game_features.transpose()
    }

    /// CSV with tag names as row labels and question IDs as column labels.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        write!(out, "tag").map_err(io)?;
        for q in &self.question_ids {
            write!(out, ",{q}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
        for (i, tag) in self.tag_names.iter().enumerate() {
            write!(out, "{tag}").map_err(io)?;
            for j in 0..self.a.ncols() {
                write!(out, ",{}", self.a[(i, j)]).map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

/// Column popularity `μ` and Bernoulli deviation `√(μ(1−μ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityStats {
    pub mu: Vec<f64>,
    pub sigma_dev: Vec<f64>,
}

/// Standardizes each like column to deviations from its popularity.
/// Columns liked by nobody or by everybody become all zero.
pub fn popularity_normalize(likes: &GameLikeMatrix) -> (DMatrix<f64>, PopularityStats) {
    let mut values = likes.to_dense();
    let n = values.nrows().max(1) as f64;
    let mut mu = Vec::with_capacity(values.ncols());
    let mut sigma_dev = Vec::with_capacity(values.ncols());
    for mut col in values.column_iter_mut() {
        let mean = col.sum() / n;
        let dev = (mean * (1.0 - mean)).max(0.0).sqrt();
        if dev > 0.0 {
            col.apply(|v| *v = (*v - mean) / dev);
        } else {
            col.fill(0.0);
        }
        mu.push(mean);
        sigma_dev.push(dev);
    }
    (values, PopularityStats { mu, sigma_dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ids(prefix: &str, count: usize) -> Vec<String> {
        (0..count).map(|i| format!("{prefix}{i:02}")).collect()
    }

    fn binary(rows: usize, cols: usize, p: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_bool(p) as u8 as f64)
    }

    fn solve_dense(a: DMatrix<f64>, b: DVector<f64>) -> DVector<f64> {
        a.lu().solve(&b).unwrap()
    }

    #[test]
    fn tags_identity_design_halves_likes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = binary(4, 5, 0.4, &mut rng);
        let model = TagsModel::fit_targets(&r, &DMatrix::identity(5, 5), 1.0, ids("p", 4), ids("t", 5)).unwrap();
        assert!((&model.t - &r / 2.0).amax() < 1e-15);
    }

    #[test]
    fn tags_zero_like_player_has_zero_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut r = binary(3, 6, 0.5, &mut rng);
        r.row_mut(1).fill(0.0);
        let x = binary(6, 3, 0.5, &mut rng);
        let model = TagsModel::fit_targets(&r, &x, 0.3, ids("p", 3), ids("t", 3)).unwrap();
        assert_eq!(model.t.row(1).amax(), 0.0);
    }

    #[test]
    fn tags_match_per_row_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = binary(12, 4, 0.4, &mut rng);
        let r = binary(6, 12, 0.3, &mut rng);
        let lambda = 0.5;
        let model = TagsModel::fit_targets(&r, &x, lambda, ids("p", 6), ids("t", 4)).unwrap();
        for i in 0..6 {
            let lhs = x.transpose() * &x + DMatrix::identity(4, 4) * lambda;
            let rhs = x.transpose() * r.row(i).transpose();
            let oracle = solve_dense(lhs, rhs);
            assert!((model.t.row(i).transpose() - oracle).amax() < 1e-10);
        }
    }

    #[test]
    fn tags_predict_on_new_games() {
        let likes = GameLikeMatrix::from_pairs(&[("a", "g1"), ("a", "g2"), ("b", "g3")]);
        let tags = GameFeatureMatrix::from_pairs(&[("g1", "puzzle"), ("g2", "puzzle"), ("g3", "racing")]);
        let model = TagsModel::fit(&likes, &tags, 0.5).unwrap();

        let fresh = GameFeatureMatrix::new(
            vec!["h1".into(), "h2".into(), "h3".into()],
            vec!["puzzle".into(), "racing".into(), "strange".into()],
            vec![0, 0, 1, 1, 0, 0, 0, 1, 0],
        )
        .unwrap();
        let scores = model.predict(&fresh).unwrap();
        // h1 only has an unseen tag
        assert_eq!(scores.column(0).amax(), 0.0);
        // h2 carries the same tags as g1
        let seen = model.predict(&tags).unwrap();
        assert_eq!(scores.column(1), seen.column(0));
        assert!(scores[(0, 1)] > scores[(0, 2)]);

        let disjoint = GameFeatureMatrix::from_pairs(&[("h", "strange")]);
        assert!(matches!(model.predict(&disjoint), Err(Error::Alignment(_))));
    }

    #[test]
    fn questions_identity_and_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = binary(5, 3, 0.5, &mut rng);
        let model = QuestionsModel::fit_targets(&r, &DMatrix::identity(5, 5), 1.0, ids("g", 3), ids("q", 5)).unwrap();
        assert!((&model.q - r.transpose() / 2.0).amax() < 1e-15);

        let x = DMatrix::from_fn(10, 3, |_, _| rng.random_range(-2i32..=2) as f64);
        let mut r = binary(10, 7, 0.3, &mut rng);
        r.column_mut(4).fill(0.0);
        let lambda = 2.0;
        let model = QuestionsModel::fit_targets(&r, &x, lambda, ids("g", 7), ids("q", 3)).unwrap();
        assert_eq!(model.q.row(4).amax(), 0.0);
        for j in 0..7 {
            let lhs = x.transpose() * &x + DMatrix::identity(3, 3) * lambda;
            let oracle = solve_dense(lhs, x.transpose() * r.column(j));
            assert!((model.q.row(j).transpose() - oracle).amax() < 1e-10);
        }
    }

    #[test]
    fn questions_predict_neutral_and_duplicate_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(8, 3, |_, _| rng.random_range(-2i32..=2) as f64);
        let r = binary(8, 4, 0.4, &mut rng);
        let model = QuestionsModel::fit_targets(&r, &x, 1.0, ids("g", 4), ids("q", 3)).unwrap();
        let eval = DMatrix::from_fn(2, 3, |i, j| if i == 0 { 0.0 } else { x[(5, j)] });
        let scores = model.predict_dense(&eval);
        assert_eq!(scores.row(0).amax(), 0.0);
        assert_eq!(scores.row(1), model.predict_dense(&x).row(5));
    }

    #[test]
    fn transpose_duality_between_tags_and_questions() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = binary(9, 7, 0.4, &mut rng);
        let x = binary(7, 3, 0.5, &mut rng);
        let tags = TagsModel::fit_targets(&r, &x, 0.8, ids("p", 9), ids("t", 3)).unwrap();
        let questions = QuestionsModel::fit_targets(&r.transpose(), &x, 0.8, ids("p", 9), ids("t", 3)).unwrap();
        assert!((tags.t - questions.q).amax() < 1e-12);
    }

    #[test]
    fn kron_identity_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = binary(4, 3, 0.5, &mut rng);
        let model = InteractionModel::fit_targets(
            &r,
            &DMatrix::identity(4, 4),
            &DMatrix::identity(3, 3),
            1.0,
            ids("t", 3),
            ids("q", 4),
        )
        .unwrap();
        assert!((&model.a - r.transpose() / 2.0).amax() < 1e-14);
    }

    #[test]
    fn kron_pair_prediction() {
        let model = InteractionModel {
            tag_names: vec!["logic-free".into(), "puzzle".into()],
            question_ids: vec!["logic".into(), "speed".into()],
            a: DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
            lambda: 1.0,
        };
        assert_eq!(model.predict_pair(&[2.0, -1.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(model.predict_pair(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(model.predict_pair(&[2.0, 2.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(model.predict_pair(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn kron_prediction_matrix_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let model = InteractionModel {
            tag_names: ids("t", 3),
            question_ids: ids("q", 2),
            a: a.clone(),
            lambda: 1.0,
        };
        let xq = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-2i32..=2) as f64);
        let xt = binary(4, 3, 0.5, &mut rng);
        let scores = model.predict_dense(&xq, &xt);
        for i in 0..5 {
            for j in 0..4 {
                let mut oracle = 0.0;
                for t in 0..3 {
                    for q in 0..2 {
                        oracle += xt[(j, t)] * a[(t, q)] * xq[(i, q)];
                    }
                }
                assert!((scores[(i, j)] - oracle).abs() < 1e-12);
                let pair = model
                    .predict_pair(xq.row(i).transpose().as_slice(), xt.row(j).transpose().as_slice())
                    .unwrap();
                assert!((pair - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kron_is_permutation_equivariant_in_tags() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = binary(8, 6, 0.4, &mut rng);
        let xq = DMatrix::from_fn(8, 2, |_, _| rng.random_range(-2i32..=2) as f64);
        let xt = binary(6, 3, 0.5, &mut rng);
        let perm = [2usize, 0, 1];
        let xt_perm = DMatrix::from_fn(6, 3, |j, t| xt[(j, perm[t])]);
        let base = InteractionModel::fit_targets(&r, &xq, &xt, 0.7, ids("t", 3), ids("q", 2)).unwrap();
        let permuted = InteractionModel::fit_targets(&r, &xq, &xt_perm, 0.7, ids("t", 3), ids("q", 2)).unwrap();
        for t in 0..3 {
            for q in 0..2 {
                assert!((permuted.a[(t, q)] - base.a[(perm[t], q)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn huge_lambda_shrinks_every_content_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let r = binary(7, 6, 0.4, &mut rng);
        let xq = DMatrix::from_fn(7, 3, |_, _| rng.random_range(-2i32..=2) as f64);
        let xt = binary(6, 4, 0.5, &mut rng);
        let lambda = 1e10;
        let t = TagsModel::fit_targets(&r, &xt, lambda, ids("p", 7), ids("t", 4)).unwrap();
        let q = QuestionsModel::fit_targets(&r, &xq, lambda, ids("g", 6), ids("q", 3)).unwrap();
        let a = InteractionModel::fit_targets(&r, &xq, &xt, lambda, ids("t", 4), ids("q", 3)).unwrap();
        let scale = 2.0 * 7.0 * 6.0;
        for coeffs in [t.t, q.q, a.a] {
            assert!(coeffs.amax() <= 1e-6 * scale);
        }
        assert!(TagsModel::fit_targets(&r, &xt, 0.0, ids("p", 7), ids("t", 4)).is_err());
        assert!(InteractionModel::fit_targets(&r, &xq, &xt, -1.0, ids("t", 4), ids("q", 3)).is_err());
    }

    #[test]
    fn popularity_normalization() {
        let likes = GameLikeMatrix::new(
            ids("p", 4),
            ids("g", 3),
            vec![1, 1, 0, 1, 1, 0, 0, 1, 1, 0, 1, 0],
        )
        .unwrap();
        let (normalized, stats) = popularity_normalize(&likes);
        assert_eq!(normalized.column(0).as_slice(), [1.0, 1.0, -1.0, -1.0]);
        assert_eq!(normalized.column(1).amax(), 0.0);
        assert_eq!(stats.sigma_dev[1], 0.0);
        let col = normalized.column(2);
        assert!(col.mean().abs() < 1e-12);
        assert!((col.norm_squared() / 4.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interaction_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let model = InteractionModel {
            tag_names: vec!["puzzle".into(), "racing".into()],
            question_ids: vec!["q1".into(), "q2".into()],
            a: DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.0, 2.0]),
            lambda: 1.0,
        };
        model.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "tag,q1,q2\npuzzle,1,-0.5\nracing,0,2\n");
    }
}
