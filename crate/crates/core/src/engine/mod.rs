//! Resampling engine: pigeonhole draws of cluster effects combined with wild
//! draws of the residual interaction.
//!
//! Replicate `b` draws from its own stream keyed by `(seed, b)` in a pinned
//! order: index maps for each dimension, then weight vectors for each
//! dimension, then any per-cell extras. Output is therefore identical for any
//! number of worker threads.

mod balanced;
mod masked;
mod unbalanced;
mod zestimator;

pub use balanced::{
    bootstrap_dyadic, bootstrap_multivariate, bootstrap_multiway, bootstrap_two_way, MultivariateResult,
};
pub use balanced::replicate_sample_two_way;
pub use masked::{bootstrap_masked, bootstrap_masked_dense};
pub use unbalanced::bootstrap_unbalanced;
pub use zestimator::{bootstrap_zestimator, ZEstimatorResult, ZProblem};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BootstrapConfig, BootstrapResult, ResultMeta, WeightScheme};
use crate::rng;
use crate::wild_weights::TwoPointWeights;

/// Random draws of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatePlan {
    pub replicate: usize,
    /// `maps[d][i]` is the source level for level `i` of dimension `d`.
    pub maps: Vec<Vec<usize>>,
    /// `weights[d][i]` is the wild weight attached to level `i` of dimension `d`.
    pub weights: Vec<Vec<f64>>,
}

/// Draws the plan of replicate `b` and returns the stream positioned for
/// per-cell extras. With `shared_map` a single node map serves every
/// dimension.
pub fn draw_plan(
    sizes: &[usize],
    shared_map: bool,
    laws: &[TwoPointWeights],
    seed: u64,
    b: usize,
) -> (ReplicatePlan, ChaCha8Rng) {
    let mut r = rng::stream(seed, rng::BOOTSTRAP, b as u64);
    let maps = if shared_map {
        let map: Vec<usize> = (0..sizes[0]).map(|_| r.random_range(0..sizes[0])).collect();
        vec![map; sizes.len()]
    } else {
        sizes.iter().map(|&n| (0..n).map(|_| r.random_range(0..n)).collect()).collect()
    };
    let weights = sizes.iter().zip(laws).map(|(&n, law)| crate::wild_weights::sample_weights(law, n, &mut r)).collect();
    (ReplicatePlan { replicate: b, maps, weights }, r)
}

pub(crate) fn laws_for(scheme: WeightScheme, sizes: &[usize]) -> Vec<TwoPointWeights> {
    sizes.iter().map(|&n| TwoPointWeights::for_dimension(scheme, n)).collect()
}

/// Maps `f` over replicate indices on the configured pool, in index order.
pub(crate) fn run_replicates<T: Send>(cfg: &BootstrapConfig, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    let b = cfg.replicates;
    match cfg.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("thread pool")
            .install(|| (0..b).into_par_iter().map(&f).collect()),
        None => (0..b).into_par_iter().map(f).collect(),
    }
}

pub(crate) fn check_config(cfg: &BootstrapConfig) -> Result<()> {
    cfg.check()
}

/// `sqrt(n) (mean* - mean) / scale*`, with the 0/0 case mapped to 0.
pub(crate) fn studentized(diff: f64, scale: f64, effective_n: f64) -> f64 {
    if scale > 0.0 {
        diff * effective_n.sqrt() / scale
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

pub(crate) struct Observed {
    pub mean: f64,
    pub scale: f64,
    pub gaussian_scale: f64,
    pub effective_n: f64,
    pub lambda: f64,
    pub tau: Option<f64>,
}

pub(crate) fn assemble(obs: Observed, draws: Vec<(f64, f64)>, cfg: &BootstrapConfig) -> BootstrapResult {
    let replicate_means: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let (replicate_t, replicate_scales) = if cfg.studentize {
        (
            draws.iter().map(|&(m, s)| studentized(m - obs.mean, s, obs.effective_n)).collect(),
            draws.iter().map(|d| d.1).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    BootstrapResult {
        mean: obs.mean,
        scale: obs.scale,
        gaussian_scale: obs.gaussian_scale,
        effective_n: obs.effective_n,
        lambda: obs.lambda,
        tau: obs.tau,
        replicate_means,
        replicate_t,
        replicate_scales,
        meta: ResultMeta {
            replicates: cfg.replicates,
            seed: cfg.seed,
            weight_scheme: cfg.weight_scheme,
            lambda_mode: cfg.lambda_mode,
        },
    }
}

pub(crate) fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidConfig(msg.into()))
    }
}
