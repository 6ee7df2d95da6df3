//! Implicit-feedback recommender toolkit.
//!
//! The pipeline runs in five stages, each usable on its own:
//!
//! 1. [`data`] — load interaction logs and post texts from delimited files,
//!    or generate a deterministic synthetic dataset with planted topics.
//! 2. [`profile`] — turn events into weighted per-(user, post) feedback
//!    scores and assemble a sparse rating matrix per feedback category.
//! 3. [`text`] / [`similarity`] — build TF-IDF content profiles and a
//!    sparse symmetric cosine-similarity matrix over posts.
//! 4. [`factor`] — train latent-factor models by full-batch gradient
//!    descent, either plain or with the similarity matrix as an extra
//!    regularizer on the item factors.
//! 5. [`eval`] — split ratings per user, compute RMSE/MAE and top-k
//!    precision/recall/F1, and run the 4-profile x 2-model experiment grid.
//!
//! All numeric code is generic over the scalar type via [`num::Real`]
//! (`f32` or `f64`); the `*64` aliases below are what the CLI and most
//! callers want.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod factor;
pub mod num;
pub mod profile;
pub mod similarity;
pub mod text;

pub use error::Error;
pub use num::Real;

/// Default scalar type used by the command-line tools.
pub type Scalar = f64;

pub type RatingMatrix64 = profile::RatingMatrix<f64>;
pub type NormalizationSpec64 = profile::NormalizationSpec<f64>;
pub type SimilarityMatrix64 = similarity::SimilarityMatrix<f64>;
pub type TfidfProfile64 = text::TfidfProfile<f64>;
pub type Hyperparams64 = factor::Hyperparams<f64>;
pub type FactorModel64 = factor::FactorModel<f64>;
pub type TrainingReport64 = factor::TrainingReport<f64>;
pub type MetricReport64 = eval::MetricReport<f64>;
pub type RelevanceRule64 = eval::RelevanceRule<f64>;

pub type RatingMatrix32 = profile::RatingMatrix<f32>;
pub type SimilarityMatrix32 = similarity::SimilarityMatrix<f32>;
pub type FactorModel32 = factor::FactorModel<f32>;
