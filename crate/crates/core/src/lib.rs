//! Psychometric analysis of item-response data from multiple respondent
//! populations.
//!
//! The crate ingests premise/hypothesis test items and per-respondent labels,
//! scores them into 0/1/missing response matrices, and computes:
//!
//! - classical test statistics (item difficulty, inter-item and item-total
//!   correlations) in [`ctt`];
//! - correlation-distance k-medoids clusterings with silhouette-selected
//!   cluster counts in [`cluster`];
//! - Rasch (one-parameter logistic) item difficulties fitted by marginal
//!   maximum likelihood EM over Gauss–Hermite quadrature in [`irt`];
//! - a shared correlation/significance kernel (Pearson, Spearman, Matthews,
//!   t-approximation and permutation p-values) in [`stats`];
//! - cross-population comparison reports and per-architecture correlation
//!   deltas in [`report`];
//! - a staged respondent-screening protocol (duplicate identities, score and
//!   attention-check thresholds, justification heuristics) in [`screen`];
//! - seeded synthetic populations and worker pools for end-to-end validation
//!   in [`simul`].
//!
//! Numeric kernels are generic over the floating-point type through
//! [`scalar::Scalar`]; the `*64` aliases at the crate root fix `f64` for
//! ordinary use. All randomized routines take explicit seeds and produce
//! identical results for any thread count.

pub mod cluster;
pub mod corpus;
pub mod ctt;
pub mod error;
pub mod irt;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod screen;
pub mod simul;
pub mod stats;

pub use corpus::{
    ItemRecord, Label, PopulationSlice, RespondentRecord, ResponseMatrix, Selector,
};
pub use error::{Error, Result};
pub use scalar::Scalar;

/// [`stats::CorrelationResult`] over `f64`.
pub type CorrelationResult64 = stats::CorrelationResult<f64>;
/// [`ctt::DifficultyVector`] over `f64`.
pub type DifficultyVector64 = ctt::DifficultyVector<f64>;
/// [`cluster::DistanceMatrix`] over `f64`.
pub type DistanceMatrix64 = cluster::DistanceMatrix<f64>;
/// [`cluster::ClusterResult`] over `f64`.
pub type ClusterResult64 = cluster::ClusterResult<f64>;
/// [`irt::ItemParams`] over `f64`.
pub type ItemParams64 = irt::ItemParams<f64>;
/// [`irt::RaschFit`] over `f64`.
pub type RaschFit64 = irt::RaschFit<f64>;
/// [`irt::AbilityEstimate`] over `f64`.
pub type AbilityEstimate64 = irt::AbilityEstimate<f64>;
