//! Wasserstein-optimal nearest-neighbor reweighting under covariate shift.
//!
//! A training sample `X'_1..X'_m` drawn from one law is reweighted so that
//! the weighted training measure is as close as possible, in Wasserstein
//! distance, to an evaluation sample `X_1..X_n` drawn from another. The
//! optimal weights count how often each training point is the nearest
//! neighbor of an evaluation point; averaging over the `k` nearest neighbors
//! trades transport accuracy for noise reduction.
//!
//! Modules, bottom-up:
//!
//! - [`sample`]: points, samples, norms, discrete measures
//! - [`knn`]: exact k-NN search (brute force and k-d tree, identical ties)
//! - [`weights`]: the k-NN weight vector and weighted measures
//! - [`ot`]: closed-form and exact-LP Wasserstein costs
//! - [`estimators`]: quantity-of-interest estimators and k-NN regression
//! - [`random`]: seeded streams and sampling laws
//! - [`theory`]: asymptotic constants and assumption checks
//! - [`experiments`]: scenarios and the Monte Carlo harness
//! - [`cli`]: the batch command-line front end and CSV I/O

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod knn;
pub mod ot;
pub mod random;
pub mod sample;
pub mod stats;
pub mod theory;
pub mod weights;

pub use error::{Error, Result};
pub use knn::{build_index, knn_query, neighbor_table, KdIndex, Neighbor, NeighborTable};
pub use ot::{exact_wq, wq_1nn, wq_knn_bound, TransportPlan};
pub use sample::{distance, validate_measure, DiscreteMeasure, LabeledSample, NormSpec, Point, Sample};
pub use weights::{knn_weights, weighted_measure, WeightVector};
