use super::{assemble, check_config, draw_plan, laws_for, run_replicates, Observed, ReplicatePlan};
use crate::error::Result;
use crate::model::{BootstrapConfig, BootstrapResult, MaskedPanel};
use crate::numeric::pairwise_by;
use crate::projections::{decompose_masked, decompose_masked_values, Decomposition};
use crate::rng::hash_words;
use crate::variance::{
    lambda_nonexhaustive, select_lambda_with, scale_with_rule, selection_scale, variance_components_masked,
};

struct MaskedFit<'a> {
    sample: &'a MaskedPanel,
    dec: Decomposition,
    flat: Vec<usize>,
    root_lambda: f64,
    seed: u64,
}

impl MaskedFit<'_> {
    /// Residual at source cell `(k, s)`. When the source cell is unobserved,
    /// a residual is drawn from the observed pool by a hash of the target
    /// coordinates, so the value does not depend on evaluation order.
    #[inline]
    fn residual(&self, b: usize, k: usize, s: usize, i: usize, t: usize) -> f64 {
        if self.sample.is_observed(k, s) {
            self.dec.residual(k, s)
        } else {
            let h = hash_words(&[self.seed, b as u64, i as u64, t as u64]);
            self.dec.residuals[self.flat[(h % self.flat.len() as u64) as usize]]
        }
    }

    #[inline]
    fn value(&self, plan: &ReplicatePlan, i: usize, t: usize) -> f64 {
        let (k, s) = (plan.maps[0][i], plan.maps[1][t]);
        let d = &self.dec;
        d.grand_mean
            + self.root_lambda * (d.row_effects()[k] + d.col_effects()[s])
            + (plan.weights[0][i] * plan.weights[1][t]) * self.residual(plan.replicate, k, s, i, t)
    }
}

fn run(sample: &MaskedPanel, cfg: &BootstrapConfig, dense: bool) -> Result<BootstrapResult> {
    check_config(cfg)?;
    let (n, t) = (sample.base().n_rows(), sample.base().n_cols());
    let dec = decompose_masked(sample);
    let vc = variance_components_masked(&dec, sample)?;
    let (p_row, p_col, p_bar) = sample.rates();
    let lambda =
        select_lambda_with(&vc, cfg.lambda_mode, cfg.kappa_rule, |v| lambda_nonexhaustive(v, &p_row, &p_col, p_bar));
    let fit = MaskedFit { sample, flat: sample.observed_flat(), dec, root_lambda: lambda.sqrt(), seed: cfg.seed };
    let laws = laws_for(cfg.weight_scheme, &[n, t]);
    let w = fit.flat.len();

    let draws = run_replicates(cfg, |b| {
        let (plan, _) = draw_plan(&[n, t], false, &laws, cfg.seed, b);
        let mut buf = vec![0.0; n * t];
        if dense {
            for i in 0..n {
                for s in 0..t {
                    buf[i * t + s] = fit.value(&plan, i, s);
                }
            }
        } else {
            for &k in &fit.flat {
                buf[k] = fit.value(&plan, k / t, k % t);
            }
        }
        let mean = pairwise_by(w, |j| buf[fit.flat[j]]) / w as f64;
        let scale = if cfg.studentize {
            let d = decompose_masked_values(&buf, sample);
            variance_components_masked(&d, sample).map_or(0.0, |vc| scale_with_rule(&vc, cfg.scale_rule, cfg.kappa_rule))
        } else {
            0.0
        };
        (mean, scale)
    });

    let obs = Observed {
        mean: fit.dec.grand_mean,
        scale: scale_with_rule(&vc, cfg.scale_rule, cfg.kappa_rule),
        gaussian_scale: selection_scale(&vc, cfg.kappa_rule),
        effective_n: vc.effective_n,
        lambda,
        tau: None,
    };
    Ok(assemble(obs, draws, cfg))
}

/// Bootstrap of the mean over the observed cells of a masked panel.
///
/// Only observed cells of each bootstrap panel are generated; see
/// [`bootstrap_masked_dense`] for the full-panel construction, which returns
/// identical output.
pub fn bootstrap_masked(sample: &MaskedPanel, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    run(sample, cfg, false)
}

/// As [`bootstrap_masked`], materializing every cell of each bootstrap panel
/// before applying the mask.
pub fn bootstrap_masked_dense(sample: &MaskedPanel, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    run(sample, cfg, true)
}
