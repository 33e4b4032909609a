//! Sparse linear classifiers and quantile regression with L1, ridge and
//! sorted-L1 (Slope) penalties.
//!
//! Nonsmooth losses are Nesterov-smoothed so that an accelerated proximal
//! gradient method applies; the sorted-L1 prox is computed exactly with a
//! stack of averaged blocks. The [`datagen`] and [`experiments`] modules
//! provide a reproducible simulation harness on two-class Gaussian data.

pub mod datagen;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod losses;
pub mod prox;
pub mod smoothing;
pub mod solver;

pub use error::{Error, Result};
pub use losses::{empirical_risk, loss_subgradient, loss_value, Dataset, LossFamily, LossModel};
pub use prox::{apply_prox, l2_shrink, prox_sorted_l1, slope_norm, soft_threshold, RegWeights};
pub use smoothing::{dual_w, lipschitz_constant, smoothed_gradient, smoothed_risk, SmoothedLoss};
pub use solver::{eta_max, fit, fit_path, slope_weights_default, FitResult, PathResult, SolverConfig};
