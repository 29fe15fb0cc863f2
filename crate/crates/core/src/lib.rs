//! Game recommendation with collaborative and content-based models,
//! evaluated under four cold-start settings.
//!
//! Collaborative models ([`cf`]) need the player's and the game's like
//! history. Content models ([`content`]) replace either side with features:
//! game tags, questionnaire answers, or both through a bilinear interaction
//! matrix. [`split`] builds the four evaluation settings, [`metrics`] ranks
//! and scores, and [`harness`] runs the whole benchmark.

pub mod cf;
pub mod content;
pub mod data;
pub mod error;
pub mod harness;
pub mod interpret;
pub mod linalg;
pub mod metrics;
pub mod persist;
pub mod split;

pub use cf::{AlsOptions, KnnModel, MvnModel, SimilarityKind, SvdModel};
pub use content::{popularity_normalize, InteractionModel, PopularityStats, QuestionsModel, TagsModel};
pub use data::{Dataset, GameFeatureMatrix, GameLikeMatrix, PlayerFeatureMatrix, SyntheticConfig};
pub use error::{Error, ErrorClass, Result};
pub use harness::{run_benchmark, BenchmarkConfig, BenchmarkResult, ModelSpec};
pub use metrics::{MetricReport, RankedList};
pub use persist::SavedModel;
pub use split::{four_way_split, Setting, SplitBundle, SplitConfig};
