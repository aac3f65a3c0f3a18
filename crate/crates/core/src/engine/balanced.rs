use serde::Serialize;

use super::{assemble, check_config, draw_plan, laws_for, require, run_replicates, Observed, ReplicatePlan};
use crate::error::Result;
use crate::model::{increment_index, BootstrapConfig, BootstrapResult, DyadicArray, MultiwayArray, PanelArray};
use crate::numeric::pairwise_sum;
use crate::projections::{decompose_array, dense_effects, dense_residual_ss, Decomposition};
use crate::variance::{
    components_from_parts, dyadic_from_parts, select_lambda, scale_with_rule, selection_scale,
    variance_components, variance_components_dyadic, VarianceComponents,
};

/// Bootstrap of an `M`-variate panel with index maps and weights shared
/// across components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultivariateResult {
    pub components: Vec<BootstrapResult>,
}

impl MultivariateResult {
    pub fn n_vars(&self) -> usize {
        self.components.len()
    }

    /// Replicate `b` of the mean vector.
    pub fn replicate_mean(&self, b: usize) -> Vec<f64> {
        self.components.iter().map(|c| c.replicate_means[b]).collect()
    }

    /// Bootstrap covariance matrix of the mean vector (divisor `B - 1`).
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let centered: Vec<Vec<f64>> = self
            .components
            .iter()
            .map(|c| {
                let m = c.replicate_means.iter().sum::<f64>() / c.replicates() as f64;
                c.replicate_means.iter().map(|x| x - m).collect()
            })
            .collect();
        let b = self.components[0].replicates() as f64;
        centered
            .iter()
            .map(|x| centered.iter().map(|y| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() / (b - 1.0)).collect())
            .collect()
    }
}

struct Fit {
    dec: Decomposition,
    vc: VarianceComponents,
    lambda: f64,
}

fn fit(values: &[f64], sizes: &[usize], dyadic: bool, cfg: &BootstrapConfig) -> Result<Fit> {
    let dec = decompose_array(values, sizes);
    let vc = if dyadic { variance_components_dyadic(&dec)? } else { variance_components(&dec)? };
    let lambda = select_lambda(&vc, cfg.lambda_mode, cfg.kappa_rule, cfg.denominator_factor);
    Ok(Fit { dec, vc, lambda })
}

/// Writes the bootstrap array of `plan` into `out`.
fn fill(out: &mut [f64], sizes: &[usize], dec: &Decomposition, root_lambda: f64, plan: &ReplicatePlan) {
    let last = sizes.len() - 1;
    let inner = sizes[last];
    let drawn: Vec<Vec<f64>> =
        plan.maps.iter().zip(&dec.effects).map(|(map, eff)| map.iter().map(|&k| eff[k]).collect()).collect();
    let mut strides = vec![1usize; sizes.len()];
    for d in (0..last).rev() {
        strides[d] = strides[d + 1] * sizes[d + 1];
    }
    let (last_map, last_w, last_a) = (&plan.maps[last], &plan.weights[last], &drawn[last]);
    let mut idx = vec![0usize; last];
    for row in out.chunks_mut(inner) {
        let mut a = 0.0;
        let mut w = 1.0;
        let mut src = 0;
        for d in 0..last {
            a += drawn[d][idx[d]];
            w *= plan.weights[d][idx[d]];
            src += plan.maps[d][idx[d]] * strides[d];
        }
        let resid = &dec.residuals[src..];
        for t in 0..inner {
            row[t] = dec.grand_mean + root_lambda * (a + last_a[t]) + (w * last_w[t]) * resid[last_map[t]];
        }
        increment_index(&mut idx, &sizes[..last]);
    }
}

/// Mean and, when requested, studentization scale of a bootstrap array.
fn replicate_stats(buf: &[f64], sizes: &[usize], dyadic: bool, cfg: &BootstrapConfig) -> (f64, f64) {
    if !cfg.studentize {
        return (pairwise_sum(buf) / buf.len() as f64, 0.0);
    }
    let (grand, effects) = dense_effects(buf, sizes);
    let ss = dense_residual_ss(buf, sizes, grand, &effects);
    let vc = if dyadic { dyadic_from_parts(sizes, &effects, ss) } else { components_from_parts(sizes, &effects, ss) };
    (grand, vc.map_or(0.0, |vc| scale_with_rule(&vc, cfg.scale_rule, cfg.kappa_rule)))
}

pub(crate) fn run_dense(
    components: &[&[f64]],
    sizes: &[usize],
    dyadic: bool,
    cfg: &BootstrapConfig,
) -> Result<Vec<BootstrapResult>> {
    check_config(cfg)?;
    let fits = components.iter().map(|v| fit(v, sizes, dyadic, cfg)).collect::<Result<Vec<_>>>()?;
    let laws = laws_for(cfg.weight_scheme, sizes);
    let n_cells: usize = sizes.iter().product();
    let draws = run_replicates(cfg, |b| {
        let (plan, _) = draw_plan(sizes, dyadic, &laws, cfg.seed, b);
        let mut buf = vec![0.0; n_cells];
        fits.iter()
            .map(|f| {
                fill(&mut buf, sizes, &f.dec, f.lambda.sqrt(), &plan);
                replicate_stats(&buf, sizes, dyadic, cfg)
            })
            .collect::<Vec<_>>()
    });
    Ok(fits
        .iter()
        .enumerate()
        .map(|(m, f)| {
            let obs = Observed {
                mean: f.dec.grand_mean,
                scale: scale_with_rule(&f.vc, cfg.scale_rule, cfg.kappa_rule),
                gaussian_scale: selection_scale(&f.vc, cfg.kappa_rule),
                effective_n: f.vc.effective_n,
                lambda: f.lambda,
                tau: None,
            };
            assemble(obs, draws.iter().map(|d| d[m]).collect(), cfg)
        })
        .collect())
}

/// Two-way bootstrap of a univariate panel.
pub fn bootstrap_two_way(sample: &PanelArray, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    require(sample.n_vars() == 1, "multivariate panel: use bootstrap_multivariate")?;
    let sizes = [sample.n_rows(), sample.n_cols()];
    Ok(run_dense(&[sample.component(0)], &sizes, false, cfg)?.remove(0))
}

/// Bootstrap of an array clustered in `D >= 2` dimensions, with independent
/// index maps and weights per dimension.
pub fn bootstrap_multiway(sample: &MultiwayArray, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    Ok(run_dense(&[sample.values()], sample.sizes(), false, cfg)?.remove(0))
}

/// Bootstrap of a `D`-adic array: one node map shared by every dimension,
/// `D` independent weight vectors.
pub fn bootstrap_dyadic(sample: &DyadicArray, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    Ok(run_dense(&[sample.values()], &sample.sizes(), true, cfg)?.remove(0))
}

/// Component-by-component bootstrap of an `M`-variate panel with shared
/// randomness and a shrinkage ratio per component.
pub fn bootstrap_multivariate(sample: &PanelArray, cfg: &BootstrapConfig) -> Result<MultivariateResult> {
    let sizes = [sample.n_rows(), sample.n_cols()];
    let comps: Vec<&[f64]> = (0..sample.n_vars()).map(|m| sample.component(m)).collect();
    Ok(MultivariateResult { components: run_dense(&comps, &sizes, false, cfg)? })
}

/// The plan and bootstrap panel of replicate `b`, as used by
/// [`bootstrap_two_way`].
pub fn replicate_sample_two_way(sample: &PanelArray, cfg: &BootstrapConfig, b: usize) -> Result<(ReplicatePlan, PanelArray)> {
    let sizes = [sample.n_rows(), sample.n_cols()];
    let f = fit(sample.component(0), &sizes, false, cfg)?;
    let (plan, _) = draw_plan(&sizes, false, &laws_for(cfg.weight_scheme, &sizes), cfg.seed, b);
    let mut buf = vec![0.0; sample.n_cells()];
    fill(&mut buf, &sizes, &f.dec, f.lambda.sqrt(), &plan);
    Ok((plan, PanelArray::new(sizes[0], sizes[1], buf)?))
}
