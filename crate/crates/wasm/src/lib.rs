//! Browser playground: generate a planted dataset, sweep the interaction
//! model's ridge penalty, compare fitted and planted interaction matrices,
//! and query MVN conditional scores.

use coldrec::cf::MvnModel;
use coldrec::content::InteractionModel;
use coldrec::data::generate_synthetic_with_truth;
use coldrec::harness::{evaluate_model, evaluate_random, fit_model, BenchmarkConfig, EvalContext, Hyper, ModelSpec};
use coldrec::persist::SavedModel;
use coldrec::split::{four_way_split, Setting, SplitBundle, SplitConfig};
use coldrec::{Dataset, SyntheticConfig};
use nalgebra::DMatrix;
use wasm_bindgen::prelude::*;

fn js_error(e: coldrec::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Playground {
    dataset: Dataset,
    bundle: SplitBundle,
    planted: DMatrix<f64>,
    config: BenchmarkConfig,
    mvn: MvnModel,
}

#[wasm_bindgen]
impl Playground {
    /// Generates a dataset and splits it with the default fractions.
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        m: usize,
        r: usize,
        s: usize,
        density: f64,
        rank: usize,
        noise: f64,
        seed: u64,
    ) -> Result<Playground, JsError> {
        let synthetic = SyntheticConfig {
            n,
            m,
            r,
            s,
            density,
            interaction_rank: rank,
            noise,
            rng_seed: seed,
        };
        let (dataset, truth) = generate_synthetic_with_truth(&synthetic).map_err(js_error)?;
        let split = SplitConfig {
            rng_seed: seed,
            ..SplitConfig::default()
        };
        let bundle = four_way_split(&dataset, &split).map_err(js_error)?;
        let mvn = MvnModel::fit(&bundle.train_likes, false).map_err(js_error)?;
        Ok(Playground {
            dataset,
            bundle,
            planted: truth.interactions,
            config: BenchmarkConfig {
                rng_seed: seed,
                ..BenchmarkConfig::default()
            },
            mvn,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn like_count(&self) -> usize {
        self.dataset.likes.like_count()
    }

    #[wasm_bindgen(getter)]
    pub fn tag_count(&self) -> usize {
        self.planted.nrows()
    }

    #[wasm_bindgen(getter)]
    pub fn question_count(&self) -> usize {
        self.planted.ncols()
    }

    /// nDCG of the random baseline on new players and new games.
    pub fn random_ndcg(&self) -> Result<f64, JsError> {
        let ctx = EvalContext::new(&self.dataset, &self.bundle).map_err(js_error)?;
        let report = evaluate_random(&ctx, Setting::NewNew, self.config.rng_seed, self.config.precision_k)
            .map_err(js_error)?;
        Ok(report.ndcg_at_m)
    }

    /// nDCG on new players and new games for each ridge penalty.
    pub fn lambda_sweep(&self, lambdas: Vec<f64>) -> Result<Vec<f64>, JsError> {
        let ctx = EvalContext::new(&self.dataset, &self.bundle).map_err(js_error)?;
        lambdas
            .into_iter()
            .map(|lambda| {
                let model = self.interactions(&ctx, lambda)?;
                let report = evaluate_model(&SavedModel::Interactions(model), &ctx, Setting::NewNew, self.config.precision_k)
                    .map_err(js_error)?;
                Ok(report.ndcg_at_m)
            })
            .collect()
    }

    /// Fitted interaction matrix, tags × questions, row-major.
    pub fn fitted_interactions(&self, lambda: f64) -> Result<Vec<f64>, JsError> {
        let ctx = EvalContext::new(&self.dataset, &self.bundle).map_err(js_error)?;
        Ok(row_major(&self.interactions(&ctx, lambda)?.a))
    }

    /// Planted interaction matrix, tags × questions, row-major.
    pub fn planted_interactions(&self) -> Vec<f64> {
        row_major(&self.planted)
    }

    /// Training game IDs, in the order `mvn_scores` uses.
    pub fn game_ids(&self) -> Vec<String> {
        self.mvn.game_ids.clone()
    }

    /// Conditional mean of every training game given the liked ones.
    pub fn mvn_scores(&self, liked: Vec<usize>) -> Result<Vec<f64>, JsError> {
        let scores = self.mvn.predict(&liked).map_err(js_error)?;
        Ok(scores.as_slice().to_vec())
    }
}

impl Playground {
    fn interactions(&self, ctx: &EvalContext<'_>, lambda: f64) -> Result<InteractionModel, JsError> {
        let spec = ModelSpec::TagsXQuestions {
            lambda_grid: vec![lambda],
        };
        let hyper = Hyper {
            k: None,
            lambda: Some(lambda),
        };
        match fit_model(&spec, hyper, ctx, &self.config).map_err(js_error)? {
            Some(SavedModel::Interactions(model)) => Ok(model),
            _ => Err(JsError::new("interaction fit returned another model")),
        }
    }
}

fn row_major(matrix: &DMatrix<f64>) -> Vec<f64> {
    matrix.transpose().as_slice().to_vec()
}
