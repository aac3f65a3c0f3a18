//! Bootstrap inference for means of arrays with dependence along several
//! clustering dimensions.
//!
//! The resampling scheme combines two ideas. Cluster effects are resampled by
//! drawing whole rows and columns (and further dimensions) with replacement,
//! after shrinking them by a data-driven ratio `lambda`. The residual
//! interaction is resampled with products of per-dimension two-point wild
//! weights, at the same row and column indices as the effect draws. The
//! procedure adapts between the non-degenerate case, where the mean is
//! asymptotically normal at rate `sqrt(N)`, and the degenerate case, where the
//! limit may be a non-Gaussian product of independent normals.
//!
//! ```
//! use multiway_bootstrap::prelude::*;
//!
//! let panel = PanelArray::from_fn(20, 20, |i, t| ((i * 7 + t * 3) % 11) as f64).unwrap();
//! let cfg = BootstrapConfig::default().with_replicates(199).with_seed(1);
//! let boot = bootstrap_two_way(&panel, &cfg).unwrap();
//! let ci = confidence_interval(&boot, Method::Piv, 0.05).unwrap();
//! assert!(ci.lower <= boot.mean && boot.mean <= ci.upper);
//! ```

pub mod cli;
pub mod engine;
pub mod error;
pub mod inference;
pub mod model;
pub mod numeric;
pub mod projections;
pub mod rng;
pub mod simulation;
pub mod variance;
pub mod wild_weights;

pub mod prelude {
    pub use crate::engine::{
        bootstrap_dyadic, bootstrap_masked, bootstrap_multivariate, bootstrap_multiway, bootstrap_two_way,
        bootstrap_unbalanced, bootstrap_zestimator, MultivariateResult, ZEstimatorResult, ZProblem,
    };
    pub use crate::error::{Error, Result};
    pub use crate::inference::{confidence_interval, run_test, Interval, Method, Sidedness, TestResult, TestSpec};
    pub use crate::model::{
        BootstrapConfig, BootstrapResult, DenominatorFactor, DyadicArray, KappaRule, LambdaMode, MaskedPanel,
        MultiwayArray, PanelArray, ScaleRule, UnbalancedPanel, Validate, WeightScheme,
    };
    pub use crate::projections::{
        decompose_dyadic, decompose_masked, decompose_multiway, decompose_two_way, decompose_unbalanced, Decomposition,
    };
    pub use crate::variance::{lambda_hat, studentization_scale, variance_components, VarianceComponents};
    pub use crate::wild_weights::{corrected_moments, solve_two_point, TwoPointWeights};
}
