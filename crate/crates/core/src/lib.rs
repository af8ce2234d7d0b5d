//! Covariate balancing weights for continuous treatments.
//!
//! The central estimator is entropy balancing for continuous treatments
//! (EBCT): weights as close as possible to a set of base weights, in
//! Kullback-Leibler divergence, subject to zero weighted correlation between
//! the treatment and every covariate. Around it sit a normal-model inverse
//! probability weighting baseline, balance diagnostics, weighted least squares
//! dose-response estimation with a bootstrap, and the Monte-Carlo harness used
//! to compare methods on simulated data.

pub mod data;
pub mod diagnostics;
pub mod drf;
pub mod error;
pub mod ipw;
mod linalg;
pub mod rng;
pub mod simulation;
pub mod solver;
pub mod weighting;
pub mod weights;

pub use data::{build_constraint_matrix, standardize, Dataset, StandardizedSample};
pub use diagnostics::{balance_report, max_weight_share, weighted_pearson, BalanceReport};
pub use drf::{bootstrap_se, estimate_drf, fit_wls, DrfFit};
pub use error::{EbctError, Result};
pub use ipw::{fit_gps, gps_density, ipw_weights, GpsModel};
pub use solver::{
    solve, truncate_and_rebalance, ConvergenceReport, SolverOptions, TruncationOutcome,
};
pub use weighting::{Weighter, WeightingMethod};
pub use weights::{BalancingWeights, MethodTag};
