//! Tests and confidence intervals for the mean from bootstrap output.
//!
//! Four procedures are available:
//!
//! * `Gau`: plug-in normal inference with the selection scale estimator;
//! * `Bs`: quantiles of the replicate deviations `mean*_b - mean`;
//! * `Piv`: quantiles of the studentized replicates `t*_b`;
//! * `Sym`: quantiles of `|t*_b|`, two-sided only.
//!
//! Bootstrap p-values use `(1 + #{draws at least as extreme}) / (B + 1)`, a
//! test rejects exactly when its p-value is below the level, and intervals
//! are the sets of null values a test does not reject. Interval endpoints are
//! therefore order statistics of the replicate draws.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::engine::studentized;
use crate::error::{Error, Result};
use crate::model::BootstrapResult;

/// Fewest replicates accepted by the quantile-based procedures.
pub const MIN_REPLICATES: usize = 39;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gau,
    Bs,
    Piv,
    Sym,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Gau, Method::Bs, Method::Piv, Method::Sym];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gau => "gau",
            Method::Bs => "bs",
            Method::Piv => "piv",
            Method::Sym => "sym",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// Direction of the alternative. `Left` rejects for small values of the
/// statistic, that is when the mean falls below the null value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sidedness {
    Two,
    Left,
    Right,
}

impl FromStr for Sidedness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "two" => Ok(Sidedness::Two),
            "left" => Ok(Sidedness::Left),
            "right" => Ok(Sidedness::Right),
            _ => Err(Error::InvalidConfig(format!("unknown sidedness '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub null: f64,
    pub method: Method,
    pub sidedness: Sidedness,
    pub alpha: f64,
}

impl TestSpec {
    pub fn new(null: f64, method: Method, sidedness: Sidedness, alpha: f64) -> Result<Self> {
        let spec = TestSpec { null, method, sidedness, alpha };
        spec.check()?;
        Ok(spec)
    }

    pub fn two_sided(null: f64, method: Method, alpha: f64) -> Self {
        TestSpec { null, method, sidedness: Sidedness::Two, alpha }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("level {} is outside (0, 1)", self.alpha)));
        }
        if !self.null.is_finite() {
            return Err(Error::InvalidConfig("null value must be finite".into()));
        }
        if self.method == Method::Sym && self.sidedness != Sidedness::Two {
            return Err(Error::InvalidConfig("the symmetric procedure is two-sided only".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    /// `z` for `Gau`, `mean - null` for `Bs`, `t` for `Piv`, `|t|` for `Sym`.
    pub statistic: f64,
    /// Acceptance region `[lower, upper]` on the scale of the statistic.
    pub critical: (f64, f64),
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Type-7 sample quantile (linear interpolation between order statistics)
/// of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    let (a, b) = (sorted[lo], sorted[hi]);
    if frac == 0.0 || a == b {
        return a;
    }
    // An infinite end point absorbs the interpolation.
    match (a == f64::NEG_INFINITY, b == f64::INFINITY) {
        (true, true) => return if frac < 0.5 { a } else { b },
        (true, false) => return a,
        (false, true) => return b,
        _ => {}
    }
    a + frac * (b - a)
}

/// Type-7 sample quantile of unsorted data.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    quantile_sorted(&sorted(values), p)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn tail_p(count: usize, b: usize) -> f64 {
    (1 + count) as f64 / (b + 1) as f64
}

fn two_sided_p(left: f64, right: f64) -> f64 {
    (2.0 * left.min(right)).min(1.0)
}

/// Smallest exceedance count whose p-value is not below `alpha`.
fn min_count(b: usize, alpha: f64, p: impl Fn(f64) -> f64) -> usize {
    (0..=b).find(|&k| p(tail_p(k, b)) >= alpha).unwrap_or(b + 1)
}

fn require_replicates(boot: &BootstrapResult) -> Result<()> {
    let b = boot.replicates();
    if b < MIN_REPLICATES {
        return Err(Error::TooFewReplicates { got: b, need: MIN_REPLICATES });
    }
    Ok(())
}

fn require_studentized(boot: &BootstrapResult, method: Method) -> Result<()> {
    if !boot.is_studentized() {
        return Err(Error::InvalidConfig(format!(
            "method '{}' needs studentized replicates",
            method.name()
        )));
    }
    Ok(())
}

/// Reference draws on the scale of the statistic, sorted ascending.
fn reference(boot: &BootstrapResult, method: Method) -> Result<Vec<f64>> {
    require_replicates(boot)?;
    match method {
        Method::Gau => unreachable!(),
        Method::Bs => Ok(sorted(&boot.replicate_means.iter().map(|m| m - boot.mean).collect::<Vec<_>>())),
        Method::Piv => {
            require_studentized(boot, method)?;
            Ok(sorted(&boot.replicate_t))
        }
        Method::Sym => {
            require_studentized(boot, method)?;
            Ok(sorted(&boot.replicate_t.iter().map(|t| t.abs()).collect::<Vec<_>>()))
        }
    }
}

fn statistic(boot: &BootstrapResult, method: Method, null: f64) -> f64 {
    let diff = boot.mean - null;
    match method {
        Method::Gau => studentized(diff, boot.gaussian_scale, boot.effective_n),
        Method::Bs => diff,
        Method::Piv => studentized(diff, boot.scale, boot.effective_n),
        Method::Sym => studentized(diff, boot.scale, boot.effective_n).abs(),
    }
}

fn count(draws: &[f64], pred: impl Fn(f64) -> bool) -> usize {
    draws.iter().filter(|&&x| pred(x)).count()
}

/// Order statistics bounding the acceptance region of a bootstrap test.
fn bootstrap_acceptance(draws: &[f64], side: Sidedness, symmetric: bool, alpha: f64) -> (f64, f64) {
    let b = draws.len();
    let lower_bound = |k: usize| if k == 0 { f64::NEG_INFINITY } else if k > b { f64::INFINITY } else { draws[k - 1] };
    let upper_bound = |k: usize| if k == 0 { f64::INFINITY } else if k > b { f64::NEG_INFINITY } else { draws[b - k] };
    if symmetric {
        return (0.0, upper_bound(min_count(b, alpha, |p| p)));
    }
    match side {
        Sidedness::Two => {
            let k = min_count(b, alpha, |p| two_sided_p(p, 1.0));
            (lower_bound(k), upper_bound(k))
        }
        Sidedness::Left => (lower_bound(min_count(b, alpha, |p| p)), f64::INFINITY),
        Sidedness::Right => (f64::NEG_INFINITY, upper_bound(min_count(b, alpha, |p| p))),
    }
}

fn gaussian_p(z: f64, side: Sidedness) -> f64 {
    let r = std::f64::consts::SQRT_2;
    match side {
        Sidedness::Two => erfc(z.abs() / r),
        Sidedness::Left => 0.5 * erfc(-z / r),
        Sidedness::Right => 0.5 * erfc(z / r),
    }
}

fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

fn gaussian_acceptance(side: Sidedness, alpha: f64) -> (f64, f64) {
    match side {
        Sidedness::Two => {
            let z = normal_quantile(1.0 - alpha / 2.0);
            (-z, z)
        }
        Sidedness::Left => (normal_quantile(alpha), f64::INFINITY),
        Sidedness::Right => (f64::NEG_INFINITY, normal_quantile(1.0 - alpha)),
    }
}

/// Tests `E[mean] = spec.null` with the procedure in `spec`.
pub fn run_test(boot: &BootstrapResult, spec: &TestSpec) -> Result<TestResult> {
    spec.check()?;
    let stat = statistic(boot, spec.method, spec.null);
    let (p_value, critical) = match spec.method {
        Method::Gau => (gaussian_p(stat, spec.sidedness), gaussian_acceptance(spec.sidedness, spec.alpha)),
        m => {
            let draws = reference(boot, m)?;
            let b = draws.len();
            let p = if m == Method::Sym {
                tail_p(count(&draws, |x| x >= stat), b)
            } else {
                let left = tail_p(count(&draws, |x| x <= stat), b);
                let right = tail_p(count(&draws, |x| x >= stat), b);
                match spec.sidedness {
                    Sidedness::Two => two_sided_p(left, right),
                    Sidedness::Left => left,
                    Sidedness::Right => right,
                }
            };
            (p, bootstrap_acceptance(&draws, spec.sidedness, m == Method::Sym, spec.alpha))
        }
    };
    Ok(TestResult { statistic: stat, critical, p_value, reject: p_value < spec.alpha })
}

/// Two-sided interval at level `1 - alpha`.
pub fn confidence_interval(boot: &BootstrapResult, method: Method, alpha: f64) -> Result<Interval> {
    confidence_interval_sided(boot, method, Sidedness::Two, alpha)
}

/// The set of null values the corresponding test does not reject.
/// One-sided intervals are unbounded on one side.
pub fn confidence_interval_sided(
    boot: &BootstrapResult,
    method: Method,
    sidedness: Sidedness,
    alpha: f64,
) -> Result<Interval> {
    TestSpec { null: boot.mean, method, sidedness, alpha }.check()?;
    let (lo, hi) = match method {
        Method::Gau => gaussian_acceptance(sidedness, alpha),
        m => bootstrap_acceptance(&reference(boot, m)?, sidedness, m == Method::Sym, alpha),
    };
    // statistic = mean - null for `Bs`, (mean - null) sqrt(n) / scale otherwise.
    let unit = match method {
        Method::Bs => 1.0,
        Method::Gau => boot.gaussian_scale / boot.effective_n.sqrt(),
        Method::Piv | Method::Sym => boot.scale / boot.effective_n.sqrt(),
    };
    if unit == 0.0 {
        let contains = if method == Method::Sym { hi >= 0.0 } else { lo <= 0.0 && 0.0 <= hi };
        return Ok(if contains {
            Interval { lower: boot.mean, upper: boot.mean }
        } else {
            Interval { lower: f64::NAN, upper: f64::NAN }
        });
    }
    let (lo, hi) = if method == Method::Sym { (-hi, hi) } else { (lo, hi) };
    let scaled = |x: f64| if x.is_infinite() { x } else { x * unit };
    Ok(Interval { lower: boot.mean - scaled(hi), upper: boot.mean - scaled(lo) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LambdaMode, ResultMeta, WeightScheme};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn fake(mean: f64, scale: f64, n: f64, b: usize, seed: u64) -> BootstrapResult {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<f64> = (0..b).map(|_| rng.sample::<f64, _>(StandardNormal) + 0.3).collect();
        let replicate_scales: Vec<f64> = (0..b).map(|_| scale * (0.8 + 0.4 * rng.random::<f64>())).collect();
        let replicate_means = t.iter().zip(&replicate_scales).map(|(t, s)| mean + t * s / n.sqrt()).collect();
        BootstrapResult {
            mean,
            scale,
            gaussian_scale: scale * 1.1,
            effective_n: n,
            lambda: 1.0,
            tau: None,
            replicate_means,
            replicate_t: t,
            replicate_scales,
            meta: ResultMeta {
                replicates: b,
                seed,
                weight_scheme: WeightScheme::MomentCorrected,
                lambda_mode: LambdaMode::Hat,
            },
        }
    }

    #[test]
    fn gaussian_two_sided_cutoff() {
        let boot = fake(0.0, 1.0, 1.0, 50, 1);
        let at = |m: f64| run_test(&fake(m, 1.0, 1.0, 50, 1), &TestSpec::two_sided(0.0, Method::Gau, 0.05));
        assert!(!at(1.1 * 1.9599).unwrap().reject);
        assert!(at(1.1 * 1.9601).unwrap().reject);
        let r = run_test(&boot, &TestSpec::two_sided(0.0, Method::Gau, 0.05)).unwrap();
        assert!((r.critical.1 - 1.959963984540054).abs() < 1e-9);
    }

    #[test]
    fn degenerate_replicates() {
        let mut boot = fake(2.0, 0.0, 100.0, 99, 2);
        boot.replicate_means = vec![2.0; 99];
        boot.replicate_t = vec![0.0; 99];
        boot.gaussian_scale = 0.0;
        let r = run_test(&boot, &TestSpec::two_sided(2.0, Method::Bs, 0.05)).unwrap();
        assert!(!r.reject);
        for m in Method::ALL {
            let ci = confidence_interval(&boot, m, 0.05).unwrap();
            assert_eq!((ci.lower, ci.upper), (2.0, 2.0), "{m:?}");
        }
    }

    #[test]
    fn too_few_replicates() {
        let boot = fake(0.0, 1.0, 10.0, 38, 3);
        let err = run_test(&boot, &TestSpec::two_sided(0.0, Method::Piv, 0.05)).unwrap_err();
        assert_eq!(err, Error::TooFewReplicates { got: 38, need: 39 });
        assert!(run_test(&boot, &TestSpec::two_sided(0.0, Method::Gau, 0.05)).is_ok());
    }

    #[test]
    fn symmetric_one_sided_is_rejected() {
        assert!(TestSpec::new(0.0, Method::Sym, Sidedness::Left, 0.05).is_err());
        assert!(TestSpec::new(0.0, Method::Bs, Sidedness::Two, 1.0).is_err());
    }

    #[test]
    fn piv_interval_contains_mean_when_quantiles_straddle_zero() {
        let boot = fake(1.0, 2.0, 400.0, 199, 4);
        let ci = confidence_interval(&boot, Method::Piv, 0.1).unwrap();
        assert!(ci.contains(1.0));
    }

    #[test]
    fn type7_quantile() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 1.0), 5.0);
        assert_eq!(quantile(&x, 0.5), 3.0);
        assert!((quantile(&x, 0.3) - 1.4).abs() < 1e-15);
        let tails = [f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0, f64::INFINITY];
        assert_eq!(quantile(&tails, 0.1), f64::NEG_INFINITY);
        assert_eq!(quantile(&tails, 0.5), f64::NEG_INFINITY);
    }

    fn check_duality(boot: &BootstrapResult, method: Method, side: Sidedness, alpha: f64, grid: &[f64]) {
        let ci = confidence_interval_sided(boot, method, side, alpha).unwrap();
        for &mu in grid {
            let r = run_test(boot, &TestSpec { null: mu, method, sidedness: side, alpha }).unwrap();
            assert_eq!(ci.contains(mu), !r.reject, "{method:?} {side:?} mu={mu} ci={ci:?} p={}", r.p_value);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn interval_test_duality(seed in 0u64..1000, alpha in 0.01f64..0.3, b in 39usize..300) {
            let boot = fake(0.5, 1.5, 64.0, b, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 77);
            let grid: Vec<f64> = (0..200).map(|_| 0.5 + rng.random_range(-1.5..1.5)).collect();
            for m in Method::ALL {
                check_duality(&boot, m, Sidedness::Two, alpha, &grid);
                if m != Method::Sym {
                    check_duality(&boot, m, Sidedness::Left, alpha, &grid);
                    check_duality(&boot, m, Sidedness::Right, alpha, &grid);
                }
            }
        }

        #[test]
        fn symmetric_p_value_is_monotone(seed in 0u64..1000, a in 0.0f64..2.0, d in 0.0f64..2.0) {
            let boot = fake(0.0, 1.0, 16.0, 99, seed);
            for m in [Method::Sym, Method::Gau] {
                let p = |x: f64| run_test(&boot, &TestSpec::two_sided(x, m, 0.05)).unwrap().p_value;
                prop_assert!(p(a + d) <= p(a));
                prop_assert!(p(-a - d) <= p(-a));
            }
        }

        #[test]
        fn reject_iff_p_below_level(seed in 0u64..1000, mu in -2.0f64..2.0, alpha in 0.01f64..0.5) {
            let boot = fake(0.0, 1.0, 25.0, 59, seed);
            for m in Method::ALL {
                let r = run_test(&boot, &TestSpec::two_sided(mu, m, alpha)).unwrap();
                prop_assert_eq!(r.reject, r.p_value < alpha);
                prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
            }
        }
    }
}
