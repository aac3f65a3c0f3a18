use rand::Rng;

use super::{assemble, check_config, draw_plan, laws_for, run_replicates, Observed};
use crate::error::Result;
use crate::model::{BootstrapConfig, BootstrapResult, UnbalancedPanel};
use crate::numeric::{mean, pairwise_sum};
use crate::projections::{decompose_unbalanced, decompose_unbalanced_values};
use crate::variance::{
    lambda_unbalanced, select_lambda_with, scale_with_rule, selection_scale, tau_hat,
    variance_components_unbalanced,
};
use crate::wild_weights::TwoPointWeights;

/// Bootstrap of the pooled unit mean of a panel with `R_it` units per cell.
///
/// Each bootstrap cell keeps its original size. Its units combine the
/// shrunken resampled effects, the resampled cell interaction scaled by
/// `sqrt(tau)`, and a resampled unit deviation with its own wild weight, all
/// multiplied by the row and column weights. When every cell holds a single
/// unit the within-cell variance is not identified and `tau` is set to 1, so
/// the interaction carries the full residual.
pub fn bootstrap_unbalanced(sample: &UnbalancedPanel, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    check_config(cfg)?;
    let (n, t) = (sample.n_rows(), sample.n_cols());
    let dec = decompose_unbalanced(sample);
    let vc = variance_components_unbalanced(&dec, sample)?;
    let (r_row, r_col, r_bar) = sample.rates();
    let lambda =
        select_lambda_with(&vc, cfg.lambda_mode, cfg.kappa_rule, |v| lambda_unbalanced(v, &r_row, &r_col, r_bar));
    let within = vc.within.expect("unbalanced components carry within-cell variances");
    let tau = if sample.n_units() == n * t { 1.0 } else { tau_hat(within.sigma_v2, within.sigma_e2, r_bar) };

    let center = |x: &[f64]| {
        let c = mean(x);
        x.iter().map(|v| v - c).collect::<Vec<f64>>()
    };
    let a = center(dec.row_effects());
    let g = center(dec.col_effects());
    let e = dec.unit_residuals.as_deref().expect("unit residuals");
    let off = sample.offsets();
    let sizes = sample.cell_sizes();
    let laws = laws_for(cfg.weight_scheme, &[n, t]);
    let unit_law = TwoPointWeights::for_dimension(cfg.weight_scheme, n * t);
    let (root_lambda, root_tau) = (lambda.sqrt(), tau.sqrt());
    let units = sample.n_units();

    let draws = run_replicates(cfg, |b| {
        let (plan, mut rng) = draw_plan(&[n, t], false, &laws, cfg.seed, b);
        let mut buf = vec![0.0; units];
        for i in 0..n {
            let k = plan.maps[0][i];
            for s in 0..t {
                let q = plan.maps[1][s];
                let src = k * t + q;
                let base = dec.grand_mean + root_lambda * (a[k] + g[q]);
                let ww = plan.weights[0][i] * plan.weights[1][s];
                let v = root_tau * dec.residuals[src];
                let cell = i * t + s;
                for u in off[cell]..off[cell + 1] {
                    let pick = rng.random_range(0..sizes[src]);
                    let omega = unit_law.draw(&mut rng);
                    buf[u] = base + ww * (v + omega * e[off[src] + pick]);
                }
            }
        }
        let m = pairwise_sum(&buf) / units as f64;
        let scale = if cfg.studentize {
            let d = decompose_unbalanced_values(&buf, sample);
            variance_components_unbalanced(&d, sample).map_or(0.0, |vc| scale_with_rule(&vc, cfg.scale_rule, cfg.kappa_rule))
        } else {
            0.0
        };
        (m, scale)
    });

    let obs = Observed {
        mean: dec.grand_mean,
        scale: scale_with_rule(&vc, cfg.scale_rule, cfg.kappa_rule),
        gaussian_scale: selection_scale(&vc, cfg.kappa_rule),
        effective_n: vc.effective_n,
        lambda,
        tau: Some(tau),
    };
    Ok(assemble(obs, draws, cfg))
}
