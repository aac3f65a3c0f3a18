use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::dgp::DgpSpec;
use super::presets::Design;
use super::report::{Estimate, McReport, MethodSummary};
use crate::engine::{bootstrap_masked, bootstrap_two_way, bootstrap_unbalanced, studentized};
use crate::error::{Error, Result};
use crate::inference::{confidence_interval, quantile_sorted, run_test, Method, Sidedness, TestSpec};
use crate::model::{BootstrapConfig, BootstrapResult};
use crate::rng;

/// Settings of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    pub sims: usize,
    pub alpha: f64,
    pub methods: Vec<Method>,
    /// Nominal percentiles at which c.d.f. errors are recorded; may be empty.
    pub grid: Vec<f64>,
    /// Bootstrap settings. `seed` is the master seed of the run and
    /// `threads` sizes the pool the simulations run on.
    pub boot: BootstrapConfig,
}

impl McConfig {
    pub fn new(sims: usize, boot: BootstrapConfig) -> Self {
        McConfig { sims, alpha: 0.05, methods: Method::ALL.to_vec(), grid: Vec::new(), boot }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = grid;
        self
    }

    fn check(&self) -> Result<()> {
        if self.sims < 1 {
            return Err(Error::InvalidConfig("at least one simulation is required".into()));
        }
        if self.grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidConfig("percentile grid must lie in (0, 1)".into()));
        }
        TestSpec::two_sided(0.0, Method::Gau, self.alpha).check()?;
        self.boot.check()
    }
}

/// Evenly spaced percentiles `1/(k+1), ..., k/(k+1)`.
pub fn percent_grid(k: usize) -> Vec<f64> {
    (1..=k).map(|j| j as f64 / (k + 1) as f64).collect()
}

/// Runs `f(s)` for every simulation index on the configured pool, in order.
fn for_each_sim<T: Send>(sims: usize, threads: Option<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("thread pool")
            .install(|| (0..sims).into_par_iter().map(&f).collect()),
        None => (0..sims).into_par_iter().map(f).collect(),
    }
}

/// Bootstrap settings of simulation `s`: its own seed, ambient pool.
fn sim_config(boot: &BootstrapConfig, s: usize) -> BootstrapConfig {
    let mut cfg = boot.clone();
    cfg.seed = rng::derive_seed(boot.seed, rng::SIM_SEED, s as u64);
    cfg.threads = None;
    cfg
}

struct SimOutcome {
    an: f64,
    bs: f64,
    /// Per method: rejections (two, left, right) and grid hits.
    methods: Vec<([bool; 3], Vec<bool>)>,
}

/// Statistic and matching quantile of its bootstrap law at `p`, on the
/// scale used by `method`.
fn cdf_hits(boot: &BootstrapResult, method: Method, grid: &[f64]) -> Vec<bool> {
    if grid.is_empty() {
        return Vec::new();
    }
    let t = |scale: f64| studentized(boot.mean, scale, boot.effective_n);
    let (stat, draws): (f64, Option<Vec<f64>>) = match method {
        Method::Gau => (t(boot.gaussian_scale), None),
        Method::Bs => (boot.mean, Some(boot.replicate_means.iter().map(|m| m - boot.mean).collect())),
        Method::Piv => (t(boot.scale), Some(boot.replicate_t.clone())),
        Method::Sym => (t(boot.scale).abs(), Some(boot.replicate_t.iter().map(|x| x.abs()).collect())),
    };
    match draws {
        None => {
            let z = Normal::standard();
            grid.iter().map(|&p| stat <= z.inverse_cdf(p)).collect()
        }
        Some(mut d) => {
            d.sort_by(f64::total_cmp);
            grid.iter().map(|&p| stat <= quantile_sorted(&d, p)).collect()
        }
    }
}

fn simulate_one(dgp: &DgpSpec, mc: &McConfig, s: usize, truth_var: f64) -> Result<SimOutcome> {
    let mut data_rng = rng::stream(mc.boot.seed, rng::DATA, s as u64);
    let panel = dgp.generate(&mut data_rng);
    let boot = bootstrap_two_way(&panel, &sim_config(&mc.boot, s))?;
    let mut methods = Vec::with_capacity(mc.methods.len());
    for &m in &mc.methods {
        let mut rej = [false; 3];
        for (k, side) in [Sidedness::Two, Sidedness::Left, Sidedness::Right].into_iter().enumerate() {
            if m == Method::Sym && side != Sidedness::Two {
                continue;
            }
            rej[k] = run_test(&boot, &TestSpec { null: 0.0, method: m, sidedness: side, alpha: mc.alpha })?.reject;
        }
        methods.push((rej, cdf_hits(&boot, m, &mc.grid)));
    }
    Ok(SimOutcome {
        an: boot.gaussian_scale.powi(2) / (boot.effective_n * truth_var),
        bs: boot.bootstrap_variance() / truth_var,
        methods,
    })
}

fn proportion(hits: impl Iterator<Item = bool>, n: usize) -> Estimate {
    let p = hits.filter(|&h| h).count() as f64 / n as f64;
    Estimate { value: p, se: (p * (1.0 - p) / n as f64).sqrt() }
}

/// Mean and its standard error.
pub fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Estimate { value: m, se: (v / n).sqrt() }
}

/// Simulates `mc.sims` panels from `design`, runs the two-way bootstrap on
/// each and tabulates rejection rates of the true null `E[y] = 0`, the mean
/// ratios of the plug-in and bootstrap variance estimates to the true
/// variance of the mean, and c.d.f. errors on `mc.grid`.
pub fn run_monte_carlo(design: &Design, mc: &McConfig) -> Result<McReport> {
    mc.check()?;
    let dgp = &design.dgp;
    dgp.check()?;
    let mut boot = mc.boot.clone();
    boot.lambda_mode = design.lambda_mode;
    boot.kappa_rule = design.kappa_rule;
    let mc = McConfig { boot, ..mc.clone() };
    let truth = dgp.mean_variance();
    if !(truth > 0.0) {
        return Err(Error::DegenerateDesign("the simulated mean has zero variance".into()));
    }
    let outcomes: Vec<SimOutcome> =
        for_each_sim(mc.sims, mc.boot.threads, |s| simulate_one(dgp, &mc, s, truth)).into_iter().collect::<Result<_>>()?;

    let s = mc.sims;
    let methods = mc
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let rate = |side: usize| proportion(outcomes.iter().map(|o| o.methods[k].0[side]), s);
            let cdf_error = (0..mc.grid.len())
                .map(|g| {
                    let freq = outcomes.iter().filter(|o| o.methods[k].1[g]).count() as f64 / s as f64;
                    (freq - mc.grid[g]).abs()
                })
                .collect();
            MethodSummary {
                method,
                two_sided: rate(0),
                left: (method != Method::Sym).then(|| rate(1)),
                right: (method != Method::Sym).then(|| rate(2)),
                cdf_error,
            }
        })
        .collect();
    Ok(McReport {
        design: design.name.clone(),
        dgp: dgp.clone(),
        n: dgp.n,
        t: dgp.t,
        sims: s,
        replicates: mc.boot.replicates,
        seed: mc.boot.seed,
        alpha: mc.alpha,
        lambda_mode: mc.boot.lambda_mode,
        kappa_rule: mc.boot.kappa_rule,
        an_ratio: mean_estimate(&outcomes.iter().map(|o| o.an).collect::<Vec<_>>()),
        bs_ratio: mean_estimate(&outcomes.iter().map(|o| o.bs).collect::<Vec<_>>()),
        methods,
        grid: mc.grid.clone(),
    })
}

/// Absolute c.d.f. error of one procedure on a percentile grid.
pub fn cdf_error_curve(design: &Design, method: Method, grid: &[f64], mc: &McConfig) -> Result<Vec<f64>> {
    let mc = McConfig { methods: vec![method], grid: grid.to_vec(), ..mc.clone() };
    Ok(run_monte_carlo(design, &mc)?.methods.remove(0).cdf_error)
}

/// `|frequency of stat <= quantile - p|` per grid point, given one statistic
/// and one row of estimated quantiles per simulation.
pub fn cdf_error_from_quantiles(stats: &[f64], quantiles: &[Vec<f64>], grid: &[f64]) -> Vec<f64> {
    let s = stats.len() as f64;
    grid.iter()
        .enumerate()
        .map(|(g, &p)| {
            let hits = stats.iter().zip(quantiles).filter(|(x, q)| **x <= q[g]).count() as f64;
            (hits / s - p).abs()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub sims: usize,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Sample moments of `sqrt(NT) mean` over `sims` panels from `dgp`.
pub fn degeneracy_diagnostic(dgp: &DgpSpec, sims: usize, seed: u64, threads: Option<usize>) -> Result<DegeneracyReport> {
    dgp.check()?;
    if sims < 2 {
        return Err(Error::InvalidConfig("at least two simulations are required".into()));
    }
    let root = ((dgp.n * dgp.t) as f64).sqrt();
    let xs = for_each_sim(sims, threads, |s| {
        let p = dgp.generate(&mut rng::stream(seed, rng::DATA, s as u64));
        root * crate::numeric::mean(p.values())
    });
    let (skewness, excess_kurtosis, variance) = shape(&xs);
    Ok(DegeneracyReport { sims, variance, skewness, excess_kurtosis })
}

/// Sample skewness, excess kurtosis and variance from central moments.
pub fn shape(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let c = |k: i32| xs.iter().map(|x| (x - m).powi(k)).sum::<f64>() / n;
    let (m2, m3, m4) = (c(2), c(3), c(4));
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0, m2)
}

/// Sampling scheme of a coverage study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Layout {
    Balanced,
    /// Each cell observed independently with probability `keep`.
    Masked { keep: f64 },
    /// `R_it` uniform on `1..=max_units` with unit noise variance `unit_var`.
    Unbalanced { max_units: usize, unit_var: f64 },
}

/// Share of simulations whose two-sided interval covers the true mean 0.
pub fn coverage(dgp: &DgpSpec, layout: Layout, method: Method, mc: &McConfig) -> Result<Estimate> {
    mc.check()?;
    dgp.check()?;
    let hits: Vec<bool> = for_each_sim(mc.sims, mc.boot.threads, |s| {
        let mut r = rng::stream(mc.boot.seed, rng::DATA, s as u64);
        let cfg = sim_config(&mc.boot, s);
        let boot = match layout {
            Layout::Balanced => bootstrap_two_way(&dgp.generate(&mut r), &cfg),
            Layout::Masked { keep } => bootstrap_masked(&dgp.generate_masked(keep, &mut r), &cfg),
            Layout::Unbalanced { max_units, unit_var } => {
                bootstrap_unbalanced(&dgp.generate_unbalanced(max_units, unit_var, &mut r), &cfg)
            }
        }?;
        Ok(confidence_interval(&boot, method, mc.alpha)?.contains(0.0))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(proportion(hits.into_iter(), mc.sims))
}
