//! Variance components, shrinkage ratios, and the studentization and
//! selection scales built on them.

use crate::error::{Error, Result};
use crate::model::{DenominatorFactor, KappaRule, LambdaMode, MaskedPanel, ScaleRule, UnbalancedPanel};
use crate::numeric::pairwise_by;
use crate::projections::{residual_sum_of_squares, Decomposition};

/// Estimated variance of one family of cluster effects.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectVariance {
    /// Sample variance of the estimated effects (divisor `levels - 1`).
    pub raw: f64,
    /// `raw` minus the residual noise it carries; may be negative.
    pub corrected: f64,
    /// Number of levels the effect is indexed by.
    pub levels: usize,
    /// Cells averaged into one level's effect (`T` for row effects).
    pub cells_per_level: f64,
    /// How many per-dimension effects share this variance (`D` for the node
    /// effect of a `D`-adic array, otherwise 1).
    pub noise_multiplicity: f64,
    /// Coefficient of `corrected` in the variance of the mean.
    pub mean_weight: f64,
}

/// Cell-level and within-cell residual variances of an unbalanced panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WithinCell {
    pub sigma_v2: f64,
    pub sigma_e2: f64,
    pub r_bar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceComponents {
    pub effects: Vec<EffectVariance>,
    /// Residual variance, always `>= 0`.
    pub sigma_w2: f64,
    /// Number of cells (or units) the mean averages over.
    pub effective_n: f64,
    /// Residual contribution to the variance of the mean.
    pub residual_mean_variance: f64,
    pub within: Option<WithinCell>,
}

impl VarianceComponents {
    /// Balanced two-way components from already-estimated variances.
    pub fn two_way(sigma_a2: f64, sigma_g2: f64, sigma_w2: f64, n: usize, t: usize) -> Self {
        let nt = (n * t) as f64;
        let effect = |v: f64, levels: usize, per: usize| EffectVariance {
            raw: v + sigma_w2 / per as f64,
            corrected: v,
            levels,
            cells_per_level: per as f64,
            noise_multiplicity: 1.0,
            mean_weight: 1.0 / levels as f64,
        };
        VarianceComponents {
            effects: vec![effect(sigma_a2, n, t), effect(sigma_g2, t, n)],
            sigma_w2,
            effective_n: nt,
            residual_mean_variance: sigma_w2 / nt,
            within: None,
        }
    }

    pub fn sigma_a2(&self) -> f64 {
        self.effects[0].corrected
    }

    pub fn sigma_g2(&self) -> f64 {
        self.effects.get(1).map_or(0.0, |e| e.corrected)
    }

    /// Plug-in variance of the mean, floored at zero.
    pub fn mean_variance(&self) -> f64 {
        let effects: f64 = self.effects.iter().map(|e| e.mean_weight * e.corrected).sum();
        (effects + self.residual_mean_variance).max(0.0)
    }

    /// Plug-in variance of the mean with each effect variance floored at zero.
    pub fn floored_mean_variance(&self) -> f64 {
        let effects: f64 = self.effects.iter().map(|e| e.mean_weight * e.corrected.max(0.0)).sum();
        (effects + self.residual_mean_variance).max(0.0)
    }

    fn scale_with(&self, effects_on: bool) -> f64 {
        let effects: f64 = if effects_on {
            self.effects.iter().map(|e| e.mean_weight * e.corrected).sum()
        } else {
            0.0
        };
        (self.effective_n * (effects + self.residual_mean_variance)).max(0.0)
    }
}

fn effect_variance(effects: &[f64], cells_per_level: f64, noise: f64, multiplicity: f64) -> EffectVariance {
    let levels = effects.len();
    let raw = pairwise_by(levels, |i| effects[i] * effects[i]) / (levels - 1) as f64;
    EffectVariance {
        raw,
        corrected: raw - noise,
        levels,
        cells_per_level,
        noise_multiplicity: multiplicity,
        mean_weight: 1.0 / levels as f64,
    }
}

/// Residual degrees of freedom `n_cells - 1 - sum_d (n_d - 1)` after removing
/// the grand mean and `dims` families of main effects.
fn residual_df(n_cells: usize, sizes_sum: usize, dims: usize) -> Result<f64> {
    if n_cells <= sizes_sum {
        return Err(Error::DegenerateDesign(format!(
            "{n_cells} cells do not exceed the {sizes_sum} effect levels; use larger dimensions"
        )));
    }
    Ok((n_cells + dims - 1 - sizes_sum) as f64)
}

/// Components of a dense `D`-way decomposition.
pub fn variance_components(dec: &Decomposition) -> Result<VarianceComponents> {
    let inner = dec.sizes[dec.sizes.len() - 1];
    let ss = residual_sum_of_squares(&dec.residuals, inner);
    components_from_parts(&dec.sizes, &dec.effects, ss)
}

pub(crate) fn components_from_parts(sizes: &[usize], effects: &[Vec<f64>], residual_ss: f64) -> Result<VarianceComponents> {
    let n_cells: usize = sizes.iter().product();
    let df = residual_df(n_cells, sizes.iter().sum(), sizes.len())?;
    let sigma_w2 = residual_ss / df;
    let effects = effects
        .iter()
        .zip(sizes)
        .map(|(e, &n)| {
            let per = (n_cells / n) as f64;
            effect_variance(e, per, sigma_w2 / per, 1.0)
        })
        .collect();
    Ok(VarianceComponents {
        effects,
        sigma_w2,
        effective_n: n_cells as f64,
        residual_mean_variance: sigma_w2 / n_cells as f64,
        within: None,
    })
}

/// Components of a `D`-adic decomposition: one node effect `h_i = sum_d a_{d,i}`.
/// For `D = 1` the residual is identically zero and `sigma_w2 = 0`.
pub fn variance_components_dyadic(dec: &Decomposition) -> Result<VarianceComponents> {
    let inner = dec.sizes[dec.sizes.len() - 1];
    let ss = residual_sum_of_squares(&dec.residuals, inner);
    dyadic_from_parts(&dec.sizes, &dec.effects, ss)
}

pub(crate) fn dyadic_from_parts(sizes: &[usize], effects: &[Vec<f64>], residual_ss: f64) -> Result<VarianceComponents> {
    let order = sizes.len();
    let n = sizes[0];
    let n_cells: usize = sizes.iter().product();
    let sigma_w2 = if order == 1 { 0.0 } else { residual_ss / residual_df(n_cells, n * order, order)? };
    let node: Vec<f64> = (0..n).map(|i| effects.iter().map(|e| e[i]).sum()).collect();
    let per = (n_cells / n) as f64;
    let effect = effect_variance(&node, per, order as f64 * sigma_w2 / per, order as f64);
    Ok(VarianceComponents {
        effects: vec![effect],
        sigma_w2,
        effective_n: n_cells as f64,
        residual_mean_variance: sigma_w2 / n_cells as f64,
        within: None,
    })
}

/// Components over the observed cells of a masked panel.
///
/// The residual variance uses `|W| - N - T + 1` degrees of freedom; each effect
/// variance is corrected by the average noise `sigma_w2 / T_i` (resp.
/// `sigma_w2 / N_t`) of its observed means.
pub fn variance_components_masked(dec: &Decomposition, sample: &MaskedPanel) -> Result<VarianceComponents> {
    let (n, t) = (dec.sizes[0], dec.sizes[1]);
    let w = sample.n_observed();
    let df = residual_df(w, n + t, 2)?;
    let flat = sample.observed_flat();
    let sigma_w2 = pairwise_by(flat.len(), |j| dec.residuals[flat[j]] * dec.residuals[flat[j]]) / df;
    let rows = sample.row_counts();
    let cols = sample.col_counts();
    let (p_row, p_col, p_bar) = sample.rates();
    let inv_mean = |c: &[usize]| pairwise_by(c.len(), |k| 1.0 / c[k] as f64) / c.len() as f64;
    let kappa = |p: &[f64]| pairwise_by(p.len(), |k| (p[k] / p_bar).powi(2)) / p.len() as f64;
    let mut a = effect_variance(&dec.effects[0], t as f64 * p_bar, sigma_w2 * inv_mean(&rows), 1.0);
    let mut g = effect_variance(&dec.effects[1], n as f64 * p_bar, sigma_w2 * inv_mean(&cols), 1.0);
    a.mean_weight = kappa(&p_row) / n as f64;
    g.mean_weight = kappa(&p_col) / t as f64;
    Ok(VarianceComponents {
        effects: vec![a, g],
        sigma_w2,
        effective_n: w as f64,
        residual_mean_variance: sigma_w2 / w as f64,
        within: None,
    })
}

/// Components of an unbalanced panel.
///
/// `sigma_e2` pools within-cell deviations over `sum R - NT` degrees of
/// freedom (zero when every cell holds one unit); `sigma_v2` removes the
/// within-cell noise `sigma_e2 / R_it` from the cell-level residual variance;
/// `sigma_w2 = sigma_v2 + sigma_e2`.
pub fn variance_components_unbalanced(dec: &Decomposition, sample: &UnbalancedPanel) -> Result<VarianceComponents> {
    let (n, t) = (dec.sizes[0], dec.sizes[1]);
    let r = sample.cell_sizes();
    let units = sample.n_units();
    let e = dec.unit_residuals.as_deref().unwrap_or(&[]);
    let sigma_e2 = if units > n * t { pairwise_by(e.len(), |k| e[k] * e[k]) / (units - n * t) as f64 } else { 0.0 };
    let df = residual_df(n * t, n + t, 2)?;
    let s_v = residual_sum_of_squares(&dec.residuals, t) / df;
    let inv_r = pairwise_by(r.len(), |k| 1.0 / r[k] as f64) / r.len() as f64;
    let sigma_v2 = s_v - sigma_e2 * inv_r;
    let sigma_w2 = (sigma_v2 + sigma_e2).max(0.0);

    let (r_row, r_col, r_bar) = sample.rates();
    let total = units as f64;
    let sum_sq: f64 = pairwise_by(r.len(), |k| (r[k] * r[k]) as f64);
    // Noise variance of an effect averaged over cells with sizes `rs`.
    let noise = |rs: &mut dyn Iterator<Item = usize>| {
        let (s, s2) = rs.fold((0.0, 0.0), |(s, s2), x| (s + x as f64, s2 + (x * x) as f64));
        sigma_v2 * s2 / (s * s) + sigma_e2 / s
    };
    let noise_a = pairwise_by(n, |i| noise(&mut (0..t).map(|s| r[i * t + s]))) / n as f64;
    let noise_g = pairwise_by(t, |s| noise(&mut (0..n).map(|i| r[i * t + s]))) / t as f64;
    let kappa = |x: &[f64]| pairwise_by(x.len(), |k| (x[k] / r_bar).powi(2)) / x.len() as f64;
    let mut a = effect_variance(&dec.effects[0], t as f64 * r_bar, noise_a, 1.0);
    let mut g = effect_variance(&dec.effects[1], n as f64 * r_bar, noise_g, 1.0);
    a.mean_weight = kappa(&r_row) / n as f64;
    g.mean_weight = kappa(&r_col) / t as f64;
    Ok(VarianceComponents {
        effects: vec![a, g],
        sigma_w2,
        effective_n: total,
        residual_mean_variance: sigma_v2 * sum_sq / (total * total) + sigma_e2 / total,
        within: Some(WithinCell { sigma_v2, sigma_e2, r_bar }),
    })
}

fn ratio(num: f64, den: f64) -> f64 {
    if den <= 0.0 || num <= 0.0 {
        0.0
    } else {
        (num / den).min(1.0)
    }
}

/// Plug-in shrinkage ratio for balanced arrays, normalized so that the
/// two-way case reads `max(0, T s_a + N s_g) / (T s_a + N s_g + f s_w)`.
pub fn lambda_hat(vc: &VarianceComponents, factor: DenominatorFactor) -> f64 {
    let signal: f64 = vc.effects.iter().map(|e| e.corrected / e.levels as f64).sum();
    let multiplicity: f64 = vc.effects.iter().map(|e| e.noise_multiplicity).sum();
    let noise = factor.value() * multiplicity / 2.0 * vc.sigma_w2 / vc.effective_n;
    ratio(signal.max(0.0), signal.max(0.0) + noise)
}

impl KappaRule {
    /// Threshold on each effect variance.
    pub fn thresholds(self, vc: &VarianceComponents) -> Vec<f64> {
        vc.effects
            .iter()
            .map(|e| match self {
                KappaRule::Log => e.cells_per_level.ln() / e.cells_per_level,
                KappaRule::SqrtHalfLog => {
                    let n = e.levels as f64;
                    0.5 * n.ln() / n.sqrt()
                }
            })
            .collect()
    }

    /// `kappa_d` such that the threshold equals `kappa_d / cells_per_level`.
    pub fn kappas(self, vc: &VarianceComponents) -> Vec<f64> {
        self.thresholds(vc).iter().zip(&vc.effects).map(|(t, e)| t * e.cells_per_level).collect()
    }
}

/// Whether some effect variance reaches its threshold; `strict` selects `>`
/// over `>=`.
pub fn any_effect_fires(vc: &VarianceComponents, thresholds: &[f64], strict: bool) -> bool {
    vc.effects
        .iter()
        .zip(thresholds)
        .any(|(e, &k)| if strict { e.corrected > k } else { e.corrected >= k })
}

/// `lambda_hat` when an effect variance reaches its threshold, else 0.
pub fn lambda_tilde(vc: &VarianceComponents, thresholds: &[f64], factor: DenominatorFactor) -> f64 {
    if any_effect_fires(vc, thresholds, false) {
        lambda_hat(vc, factor)
    } else {
        0.0
    }
}

/// `lambda_hat` when an effect variance reaches its threshold, else
/// `sum kappa / (sum kappa + sigma_w2)`.
pub fn lambda_bar(vc: &VarianceComponents, kappas: &[f64], factor: DenominatorFactor) -> f64 {
    let thresholds: Vec<f64> = kappas.iter().zip(&vc.effects).map(|(k, e)| k / e.cells_per_level).collect();
    if any_effect_fires(vc, &thresholds, false) {
        lambda_hat(vc, factor)
    } else {
        let k: f64 = kappas.iter().sum();
        ratio(k, k + vc.sigma_w2)
    }
}

/// `lambda_hat` after zeroing every effect variance at or below its threshold.
pub fn lambda_thresholded(vc: &VarianceComponents, thresholds: &[f64], factor: DenominatorFactor) -> f64 {
    lambda_hat(&zero_below(vc, thresholds), factor)
}

fn zero_below(vc: &VarianceComponents, thresholds: &[f64]) -> VarianceComponents {
    let mut kept = vc.clone();
    for (e, &k) in kept.effects.iter_mut().zip(thresholds) {
        if e.corrected <= k {
            e.corrected = 0.0;
        }
    }
    kept
}

/// Shrinkage ratio for a balanced array under `mode`.
pub fn select_lambda(vc: &VarianceComponents, mode: LambdaMode, rule: KappaRule, factor: DenominatorFactor) -> f64 {
    select_lambda_with(vc, mode, rule, |v| lambda_hat(v, factor))
}

/// Applies `mode` on top of an arbitrary plug-in ratio `base`.
pub fn select_lambda_with(
    vc: &VarianceComponents,
    mode: LambdaMode,
    rule: KappaRule,
    base: impl Fn(&VarianceComponents) -> f64,
) -> f64 {
    let thresholds = rule.thresholds(vc);
    match mode {
        LambdaMode::Hat => base(vc),
        LambdaMode::Tilde => {
            if any_effect_fires(vc, &thresholds, false) {
                base(vc)
            } else {
                0.0
            }
        }
        LambdaMode::Conservative => {
            if any_effect_fires(vc, &thresholds, false) {
                base(vc)
            } else {
                let k: f64 = rule.kappas(vc).iter().sum();
                ratio(k, k + vc.sigma_w2)
            }
        }
        LambdaMode::Thresholded => base(&zero_below(vc, &thresholds)),
    }
}

/// Plug-in variance estimate that keeps the effect terms only when some
/// effect variance exceeds its threshold; floored at 0.
pub fn s_hat_selection(vc: &VarianceComponents, thresholds: &[f64]) -> f64 {
    vc.scale_with(any_effect_fires(vc, thresholds, true))
}

/// `sqrt(max(0, n * Var_hat(mean)))`, i.e. `sqrt(T s_a + N s_g + s_w)` for a
/// balanced two-way panel.
pub fn studentization_scale(vc: &VarianceComponents) -> f64 {
    vc.scale_with(true).sqrt()
}

/// Studentization scale under `rule`, with thresholds from `kappa`.
pub fn scale_with_rule(vc: &VarianceComponents, rule: ScaleRule, kappa: KappaRule) -> f64 {
    match rule {
        ScaleRule::Full => studentization_scale(vc),
        ScaleRule::Selection => selection_scale(vc, kappa),
        ScaleRule::Floored => analytic_scale(vc),
    }
}

/// Square root of the selection estimator with thresholds from `kappa`.
pub fn selection_scale(vc: &VarianceComponents, kappa: KappaRule) -> f64 {
    s_hat_selection(vc, &kappa.thresholds(vc)).sqrt()
}

/// `sqrt(T max(0, s_a) + N max(0, s_g) + s_w)`: the plug-in scale with each
/// effect variance floored at zero.
pub fn analytic_scale(vc: &VarianceComponents) -> f64 {
    (vc.effective_n * vc.floored_mean_variance()).sqrt()
}

/// Shrinkage ratio for a masked panel.
pub fn lambda_nonexhaustive(vc: &VarianceComponents, p_row: &[f64], p_col: &[f64], p_bar: f64) -> f64 {
    let (n, t) = (p_row.len() as f64, p_col.len() as f64);
    let kappa = |p: &[f64]| p.iter().map(|x| (x / p_bar).powi(2)).sum::<f64>() / p.len() as f64;
    let num = (t * p_bar - 1.0) * vc.sigma_a2() * kappa(p_row) + (n * p_bar - 1.0) * vc.sigma_g2() * kappa(p_col);
    ratio(num.max(0.0), num.max(0.0) + 2.0 * p_bar * vc.sigma_w2)
}

/// Shrinkage ratio for an unbalanced panel.
pub fn lambda_unbalanced(vc: &VarianceComponents, r_row: &[f64], r_col: &[f64], r_bar: f64) -> f64 {
    lambda_nonexhaustive(vc, r_row, r_col, r_bar)
}

/// Within-cell shrinkage ratio `(r - 1) s_v / ((r - 1) s_v + s_e)`.
pub fn tau_hat(sigma_v2: f64, sigma_e2: f64, r_bar: f64) -> f64 {
    let num = (r_bar - 1.0) * sigma_v2;
    ratio(num, num + sigma_e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PanelArray;
    use crate::projections::{decompose_masked, decompose_two_way};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const F1: DenominatorFactor = DenominatorFactor::One;

    fn log_thresholds(n: usize, t: usize) -> Vec<f64> {
        vec![(t as f64).ln() / t as f64, (n as f64).ln() / n as f64]
    }

    #[test]
    fn constant_array_has_zero_components() {
        let p = PanelArray::new(4, 5, vec![1.5; 20]).unwrap();
        let vc = variance_components(&decompose_two_way(&p)).unwrap();
        assert_eq!(vc.sigma_a2(), 0.0);
        assert_eq!(vc.sigma_g2(), 0.0);
        assert_eq!(vc.sigma_w2, 0.0);
        assert_eq!(lambda_hat(&vc, F1), 0.0);
        assert_eq!(studentization_scale(&vc), 0.0);
    }

    #[test]
    fn two_by_two_is_degenerate() {
        let p = PanelArray::new(2, 2, vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        assert!(matches!(variance_components(&decompose_two_way(&p)), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn components_match_textbook_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (n, t) = (6, 7);
        let p = PanelArray::from_fn(n, t, |_, _| rng.random::<f64>()).unwrap();
        let vc = variance_components(&decompose_two_way(&p)).unwrap();
        let y = |i: usize, s: usize| p.get(i, s);
        let grand: f64 = (0..n).flat_map(|i| (0..t).map(move |s| (i, s))).map(|(i, s)| y(i, s)).sum::<f64>() / 42.0;
        let row = |i: usize| (0..t).map(|s| y(i, s)).sum::<f64>() / t as f64;
        let col = |s: usize| (0..n).map(|i| y(i, s)).sum::<f64>() / n as f64;
        let mut ssw = 0.0;
        for i in 0..n {
            for s in 0..t {
                ssw += (y(i, s) - row(i) - col(s) + grand).powi(2);
            }
        }
        let sw = ssw / ((n - 1) * (t - 1)) as f64;
        let sa = (0..n).map(|i| (row(i) - grand).powi(2)).sum::<f64>() / (n - 1) as f64 - sw / t as f64;
        let sg = (0..t).map(|s| (col(s) - grand).powi(2)).sum::<f64>() / (t - 1) as f64 - sw / n as f64;
        assert!((vc.sigma_w2 - sw).abs() < 1e-12);
        assert!((vc.sigma_a2() - sa).abs() < 1e-12);
        assert!((vc.sigma_g2() - sg).abs() < 1e-12);
    }

    #[test]
    fn lambda_hat_examples() {
        assert_eq!(lambda_hat(&VarianceComponents::two_way(0.0, 0.0, 1.0, 10, 10), F1), 0.0);
        let l = lambda_hat(&VarianceComponents::two_way(1.0, 1.0, 1.0, 10, 10), F1);
        assert!((l - 20.0 / 21.0).abs() < 1e-15);
        assert_eq!(lambda_hat(&VarianceComponents::two_way(0.0, 0.0, 0.0, 10, 10), F1), 0.0);
        let l2 = lambda_hat(&VarianceComponents::two_way(1.0, 1.0, 1.0, 10, 10), DenominatorFactor::Two);
        assert!((l2 - 20.0 / 22.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_tilde_examples() {
        let th = log_thresholds(100, 100);
        let vc = VarianceComponents::two_way(1.0, 0.0, 1.0, 100, 100);
        assert_eq!(lambda_tilde(&vc, &th, F1), lambda_hat(&vc, F1));
        assert_eq!(lambda_tilde(&VarianceComponents::two_way(0.0, 0.0, 1.0, 100, 100), &th, F1), 0.0);
        assert_eq!(lambda_tilde(&VarianceComponents::two_way(0.04, 0.04, 1.0, 100, 100), &th, F1), 0.0);
    }

    #[test]
    fn lambda_bar_examples() {
        let vc = VarianceComponents::two_way(0.0, 0.0, 1.0, 100, 100);
        assert!((lambda_bar(&vc, &[3.0, 3.0], F1) - 6.0 / 7.0).abs() < 1e-15);
        let fires = VarianceComponents::two_way(1.0, 0.0, 1.0, 100, 100);
        assert_eq!(lambda_bar(&fires, &[3.0, 3.0], F1), lambda_hat(&fires, F1));
    }

    #[test]
    fn selection_and_studentization_examples() {
        let vc = VarianceComponents::two_way(1.0, 1.0, 1.0, 10, 10);
        let th = log_thresholds(10, 10);
        assert!((s_hat_selection(&vc, &th) - 21.0).abs() < 1e-12);
        assert!((studentization_scale(&vc) - 21f64.sqrt()).abs() < 1e-12);
        let weak = VarianceComponents::two_way(0.001, 0.0, 2.0, 10, 10);
        assert_eq!(s_hat_selection(&weak, &th), 2.0);
        assert_eq!(studentization_scale(&VarianceComponents::two_way(0.0, 0.0, 0.0, 10, 10)), 0.0);
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau_hat(1.0, 1.0, 1.0), 0.0);
        assert_eq!(tau_hat(2.0, 0.0, 2.0), 1.0);
        assert!((tau_hat(1.0, 2.0, 3.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn full_mask_lambda_specializes() {
        let vc = VarianceComponents::two_way(0.7, 0.3, 1.1, 8, 9);
        let l = lambda_nonexhaustive(&vc, &[1.0; 8], &[1.0; 9], 1.0);
        let num = 8.0 * 0.7 + 7.0 * 0.3;
        assert!((l - num / (num + 2.2)).abs() < 1e-15);
        assert_eq!(lambda_nonexhaustive(&VarianceComponents::two_way(0.0, 0.0, 1.0, 8, 9), &[1.0; 8], &[1.0; 9], 1.0), 0.0);
    }

    #[test]
    fn nonexhaustive_lambda_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let mut obs = Vec::new();
            for i in 0..6 {
                for t in 0..6 {
                    if i == t || rng.random::<f64>() < 0.6 {
                        obs.push((i, t));
                    }
                }
            }
            let p = PanelArray::from_fn(6, 6, |_, _| rng.random::<f64>()).unwrap();
            let m = MaskedPanel::new(p, obs.clone()).unwrap();
            let (sa, sg, sw) = (rng.random::<f64>() - 0.2, rng.random::<f64>() - 0.2, rng.random::<f64>());
            let vc = VarianceComponents::two_way(sa, sg, sw, 6, 6);
            let (pr, pc, pb) = m.rates();
            let got = lambda_nonexhaustive(&vc, &pr, &pc, pb);
            let mut ka = 0.0;
            let mut kg = 0.0;
            for i in 0..6 {
                let ti = obs.iter().filter(|o| o.0 == i).count() as f64;
                ka += (ti / 6.0 / pb) * (ti / 6.0 / pb) / 6.0;
                let ni = obs.iter().filter(|o| o.1 == i).count() as f64;
                kg += (ni / 6.0 / pb) * (ni / 6.0 / pb) / 6.0;
            }
            let num = ((6.0 * pb - 1.0) * sa * ka + (6.0 * pb - 1.0) * sg * kg).max(0.0);
            let want = if num + 2.0 * pb * sw <= 0.0 || num == 0.0 { 0.0 } else { num / (num + 2.0 * pb * sw) };
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn masked_full_matches_balanced_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = PanelArray::from_fn(7, 8, |_, _| rng.random::<f64>()).unwrap();
        let obs = (0..7).flat_map(|i| (0..8).map(move |t| (i, t))).collect();
        let m = MaskedPanel::new(p.clone(), obs).unwrap();
        let a = variance_components(&decompose_two_way(&p)).unwrap();
        let b = variance_components_masked(&decompose_masked(&m), &m).unwrap();
        assert!((a.sigma_w2 - b.sigma_w2).abs() < 1e-13);
        assert!((a.sigma_a2() - b.sigma_a2()).abs() < 1e-13);
        assert!((a.sigma_g2() - b.sigma_g2()).abs() < 1e-13);
        assert!((studentization_scale(&a) - studentization_scale(&b)).abs() < 1e-12);
    }

    #[test]
    fn iid_normal_scale_band() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let p = PanelArray::from_fn(100, 100, |_, _| StandardNormal.sample(&mut rng)).unwrap();
        let vc = variance_components(&decompose_two_way(&p)).unwrap();
        let r = studentization_scale(&vc) / vc.sigma_w2.sqrt();
        assert!((0.8..=1.3).contains(&r), "{r}");
    }

    fn components() -> impl Strategy<Value = (f64, f64, f64, usize, usize)> {
        (-2.0..5.0f64, -2.0..5.0f64, 0.0..5.0f64, 3usize..200, 3usize..200)
    }

    proptest! {
        #[test]
        fn ratios_in_unit_interval((sa, sg, sw, n, t) in components(), r in 1.0..10.0f64) {
            let vc = VarianceComponents::two_way(sa, sg, sw, n, t);
            let th = KappaRule::Log.thresholds(&vc);
            let kap = KappaRule::Log.kappas(&vc);
            for f in [DenominatorFactor::One, DenominatorFactor::Two] {
                let (h, tl, b) = (lambda_hat(&vc, f), lambda_tilde(&vc, &th, f), lambda_bar(&vc, &kap, f));
                for v in [h, tl, b, lambda_thresholded(&vc, &th, f)] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                prop_assert!(tl <= h && tl <= b);
            }
            prop_assert!((0.0..=1.0).contains(&tau_hat(sa, sw, r)));
            prop_assert!(s_hat_selection(&vc, &th) >= 0.0);
        }

        #[test]
        fn scale_equivariance(seed in any::<u64>(), s in 0.1..10.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = PanelArray::from_fn(6, 5, |_, _| rng.random::<f64>()).unwrap();
            let q = PanelArray::new(6, 5, p.values().iter().map(|y| y * s).collect()).unwrap();
            let a = variance_components(&decompose_two_way(&p)).unwrap();
            let b = variance_components(&decompose_two_way(&q)).unwrap();
            let rel = |x: f64, y: f64| (x * s * s - y).abs() <= 1e-12 * (1.0 + y.abs());
            prop_assert!(rel(a.sigma_w2, b.sigma_w2) && rel(a.sigma_a2(), b.sigma_a2()) && rel(a.sigma_g2(), b.sigma_g2()));
            prop_assert!((lambda_hat(&a, F1) - lambda_hat(&b, F1)).abs() <= 1e-12);
        }
    }
}
