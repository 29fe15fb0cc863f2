//! Collaborative-filtering models: conditional-Gaussian (MVN), item-item
//! kNN and ALS-fitted matrix factorization.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::GameLikeMatrix;
use crate::error::{Error, Result};
use crate::linalg::{correlation_from_cov, correlation_of, sample_moments, solve_regularized_gram, Moments};

/// Treats every like row as a draw from `N(μ, Σ)` and scores unseen games
/// by the conditional mean given that the liked games equal one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvnModel {
    pub game_ids: Vec<String>,
    pub moments: Moments,
    /// `moments` hold the correlation matrix and a zero mean.
    pub use_correlation: bool,
    /// Added to the diagonal of the conditioned block.
    pub jitter: f64,
}

impl MvnModel {
    pub fn fit(likes: &GameLikeMatrix, use_correlation: bool) -> Result<Self> {
        if likes.n() < 2 {
            return Err(Error::Config("MVN needs at least two players".into()));
        }
        let mut moments = sample_moments(likes);
        if use_correlation {
            moments.sigma = correlation_from_cov(&moments);
            moments.mu.fill(0.0);
        }
        let jitter = default_jitter(&moments.sigma);
        Self::from_moments(likes.game_ids().to_vec(), moments, use_correlation, jitter)
    }

    pub fn from_moments(
        game_ids: Vec<String>,
        moments: Moments,
        use_correlation: bool,
        jitter: f64,
    ) -> Result<Self> {
        let m = moments.mu.len();
        if moments.sigma.shape() != (m, m) || game_ids.len() != m {
            return Err(Error::Dimension(format!(
                "{} games, mean of length {m}, covariance {:?}",
                game_ids.len(),
                moments.sigma.shape()
            )));
        }
        if !(jitter > 0.0) {
            return Err(Error::Config(format!("jitter {jitter} must be positive")));
        }
        Ok(Self {
            game_ids,
            moments,
            use_correlation,
            jitter,
        })
    }

    pub fn with_jitter(mut self, jitter: f64) -> Result<Self> {
        if !(jitter > 0.0) {
            return Err(Error::Config(format!("jitter {jitter} must be positive")));
        }
        self.jitter = jitter;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.moments.mu.len()
    }

    /// `μ + Σ_{:,I} (Σ_{I,I} + jitter·I)⁻¹ (1 − μ_I)` over all games. Entries
    /// for the liked games themselves are returned too; rankers exclude them.
    pub fn predict(&self, liked: &[usize]) -> Result<DVector<f64>> {
        let mut liked = liked.to_vec();
        liked.sort_unstable();
        liked.dedup();
        if let Some(&bad) = liked.iter().find(|&&j| j >= self.m()) {
            return Err(Error::Dimension(format!("game index {bad} out of range {}", self.m())));
        }
        let Moments { mu, sigma } = &self.moments;
        if liked.is_empty() {
            return Ok(mu.clone());
        }
        let k = liked.len();
        let block = DMatrix::from_fn(k, k, |a, b| {
            sigma[(liked[a], liked[b])] + if a == b { self.jitter } else { 0.0 }
        });
        let gap = DVector::from_fn(k, |a, _| 1.0 - mu[liked[a]]);
        let weights = block
            .cholesky()
            .ok_or_else(|| Error::Numerical("conditioned covariance block is not positive definite".into()))?
            .solve(&gap);
        let mut scores = mu.clone();
        for (a, &i) in liked.iter().enumerate() {
            scores.axpy(weights[a], &sigma.column(i), 1.0);
        }
        Ok(scores)
    }

    /// Correlation between games, whatever the stored variant.
    pub fn correlation(&self) -> DMatrix<f64> {
        if self.use_correlation {
            self.moments.sigma.clone()
        } else {
            correlation_from_cov(&self.moments)
        }
    }
}

fn default_jitter(sigma: &DMatrix<f64>) -> f64 {
    let max_diag = sigma.diagonal().max();
    (1e-6 * max_diag).max(1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    Cosine,
    Phi,
}

impl std::str::FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cos" | "cosine" => Ok(Self::Cosine),
            "phi" | "pearson" => Ok(Self::Phi),
            other => Err(Error::Unknown {
                what: "similarity kind",
                name: other.to_owned(),
            }),
        }
    }
}

impl std::fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Cosine => "cos",
            Self::Phi => "phi",
        })
    }
}

/// Item-item neighbourhood model scored without the usual normalizing
/// denominator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    pub game_ids: Vec<String>,
    pub kind: SimilarityKind,
    /// Neighbourhood size, 1..=m.
    pub k: usize,
    #[serde(with = "crate::persist::dense_matrix")]
    pub similarity: DMatrix<f64>,
    #[serde(skip)]
    neighbors: OnceLock<Vec<Vec<usize>>>,
}

impl KnnModel {
    /// Pairwise column similarities with the full neighbourhood `k = m`.
    pub fn fit(likes: &GameLikeMatrix, kind: SimilarityKind) -> Self {
        let r = likes.to_dense();
        let similarity = match kind {
            // cosine is the correlation formula applied to the raw Gram matrix
            SimilarityKind::Cosine => correlation_of(&r.tr_mul(&r)),
            SimilarityKind::Phi => correlation_from_cov(&crate::linalg::moments_of(&r)),
        };
        Self {
            game_ids: likes.game_ids().to_vec(),
            kind,
            k: likes.m(),
            similarity,
            neighbors: OnceLock::new(),
        }
    }

    pub fn with_neighbors(mut self, k: usize) -> Result<Self> {
        let m = self.similarity.nrows();
        if k == 0 || k > m {
            return Err(Error::Config(format!("neighbourhood size {k} outside 1..={m}")));
        }
        self.k = k;
        self.neighbors = OnceLock::new();
        Ok(self)
    }

    /// The `k` games most similar to each game; ties go to the lower index.
    fn neighbors(&self) -> &[Vec<usize>] {
        self.neighbors.get_or_init(|| {
            let m = self.similarity.nrows();
            (0..m)
                .map(|j| {
                    let mut order: Vec<usize> = (0..m).collect();
                    order.sort_by(|&a, &b| {
                        self.similarity[(j, b)]
                            .total_cmp(&self.similarity[(j, a)])
                            .then(a.cmp(&b))
                    });
                    order.truncate(self.k);
                    order
                })
                .collect()
        })
    }

    /// `score_j = Σ_{s ∈ top-k(j)} S_{j,s} · liked_s`.
    pub fn predict(&self, liked_row: &[f64]) -> Result<DVector<f64>> {
        let m = self.similarity.nrows();
        if liked_row.len() != m {
            return Err(Error::Dimension(format!(
                "like row of length {} for {m} games",
                liked_row.len()
            )));
        }
        if self.k == m {
            return Ok(&self.similarity * DVector::from_column_slice(liked_row));
        }
        let neighbors = self.neighbors();
        Ok(DVector::from_fn(m, |j, _| {
            neighbors[j]
                .iter()
                .map(|&s| self.similarity[(j, s)] * liked_row[s])
                .sum()
        }))
    }
}

impl PartialEq for KnnModel {
    fn eq(&self, other: &Self) -> bool {
        self.game_ids == other.game_ids
            && self.kind == other.kind
            && self.k == other.k
            && self.similarity == other.similarity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlsOptions {
    pub max_iters: usize,
    /// Stop once a full iteration lowers the objective by less than this
    /// fraction.
    pub rel_tol: f64,
    pub rng_seed: u64,
    pub init_scale: f64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rel_tol: 1e-4,
            rng_seed: 0,
            init_scale: 0.1,
        }
    }
}

/// Regularized factorization `R ≈ P Gᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdModel {
    pub player_ids: Vec<String>,
    pub game_ids: Vec<String>,
    #[serde(with = "crate::persist::dense_matrix")]
    pub p: DMatrix<f64>,
    #[serde(with = "crate::persist::dense_matrix")]
    pub g: DMatrix<f64>,
    pub lambda: f64,
    pub k: usize,
    /// Objective after initialization and after every half-step.
    pub objective_trace: Vec<f64>,
}

/// `‖R − PGᵀ‖²_F + λ‖P‖²_F + λ‖G‖²_F`.
pub fn als_objective(r: &DMatrix<f64>, p: &DMatrix<f64>, g: &DMatrix<f64>, lambda: f64) -> f64 {
    (r - p * g.transpose()).norm_squared() + lambda * (p.norm_squared() + g.norm_squared())
}

impl SvdModel {
    /// Alternates exact row-wise ridge updates of `P` (with `G` fixed) and
    /// of `G` (with `P` fixed). `lambda = 0` gives PureSVD.
    pub fn fit_als(likes: &GameLikeMatrix, k: usize, lambda: f64, opts: &AlsOptions) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("latent dimension must be at least 1".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!("lambda {lambda} must be >= 0")));
        }
        if opts.max_iters == 0 || !(opts.rel_tol >= 0.0) {
            return Err(Error::Config("ALS needs max_iters >= 1 and rel_tol >= 0".into()));
        }
        let r = likes.to_dense();
        let (n, m) = r.shape();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
        let mut gaussian = |rows, cols| {
            DMatrix::<f64>::from_fn(rows, cols, |_, _| opts.init_scale * rng.sample::<f64, _>(StandardNormal))
        };
        let mut p = gaussian(n, k);
        let mut g = gaussian(m, k);

        let singular = |e: Error| match e {
            Error::Numerical(_) => Error::Numerical(format!(
                "ALS factor Gram matrix is singular at lambda = {lambda}; use lambda > 0"
            )),
            other => other,
        };

        let mut trace = vec![als_objective(&r, &p, &g, lambda)];
        for _ in 0..opts.max_iters {
            let before = *trace.last().unwrap();
            // P_i = (GᵀG + λI)⁻¹ Gᵀ R_iᵀ for every row at once
            p = solve_regularized_gram(g.tr_mul(&g), g.tr_mul(&r.transpose()), lambda)
                .map_err(singular)?
                .transpose();
            trace.push(als_objective(&r, &p, &g, lambda));
            g = solve_regularized_gram(p.tr_mul(&p), p.tr_mul(&r), lambda)
                .map_err(singular)?
                .transpose();
            let after = als_objective(&r, &p, &g, lambda);
            trace.push(after);
            if !after.is_finite() {
                return Err(Error::Numerical("ALS objective diverged".into()));
            }
            if before - after < opts.rel_tol * before.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }

        Ok(Self {
            player_ids: likes.player_ids().to_vec(),
            game_ids: likes.game_ids().to_vec(),
            p,
            g,
            lambda,
            k,
            objective_trace: trace,
        })
    }

    pub fn predict(&self, player: usize, game: usize) -> Result<f64> {
        if player >= self.p.nrows() || game >= self.g.nrows() {
            return Err(Error::Dimension(format!(
                "({player},{game}) outside the {}x{} training axes",
                self.p.nrows(),
                self.g.nrows()
            )));
        }
        Ok(self.p.row(player).dot(&self.g.row(game)))
    }

    pub fn player_scores(&self, player: usize) -> Result<DVector<f64>> {
        if player >= self.p.nrows() {
            return Err(Error::Dimension(format!("player index {player} out of range")));
        }
        Ok(&self.g * self.p.row(player).transpose())
    }

    pub fn score_matrix(&self) -> DMatrix<f64> {
        &self.p * self.g.transpose()
    }
}
