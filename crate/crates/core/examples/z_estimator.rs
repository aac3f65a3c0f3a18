//! Z-estimation: a panel regression slope solved from moment conditions,
//! with bootstrap standard errors from the resampled moment array.

use multiway_bootstrap::prelude::*;
use multiway_bootstrap::rng;
use multiway_bootstrap::simulation::DgpSpec;

fn main() -> Result<()> {
    let (n, t) = (40, 30);
    let x = DgpSpec::additive(1.0, 1.0, 1.0, n, t).generate(&mut rng::stream(7, rng::DATA, 0));
    let u = DgpSpec::additive(0.5, 0.5, 1.0, n, t).generate(&mut rng::stream(7, rng::DATA, 1));
    let y = PanelArray::from_fn(n, t, |i, s| 1.0 + 2.0 * x.get(i, s) + u.get(i, s))?;
    let panel = PanelArray::stack(&[y.clone(), x.clone()])?;

    // Least squares: E[(y - b0 - b1 x) (1, x)] = 0.
    let cells = (n * t) as f64;
    let (mx, my) = (x.values().iter().sum::<f64>() / cells, y.values().iter().sum::<f64>() / cells);
    let sxy: f64 = x.values().iter().zip(y.values()).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.values().iter().map(|a| (a - mx).powi(2)).sum();
    let b1 = sxy / sxx;
    let theta = vec![my - b1 * mx, b1];

    let g = |v: &[f64], th: &[f64]| {
        let e = v[0] - th[0] - th[1] * v[1];
        vec![e, e * v[1]]
    };
    let problem = ZProblem::new(&g, theta);
    let res = bootstrap_zestimator(&panel, &problem, &BootstrapConfig::default().with_replicates(999).with_seed(7))?;

    for (j, name) in ["intercept", "slope"].iter().enumerate() {
        let mut draws = res.draws(j);
        draws.sort_by(f64::total_cmp);
        let q = |p: f64| multiway_bootstrap::inference::quantile_sorted(&draws, p);
        println!(
            "{name:>9}: {:.4} (bootstrap se {:.4}), percentile 95% [{:.4}, {:.4}]",
            res.theta_hat[j],
            res.std_dev(j),
            q(0.025),
            q(0.975)
        );
    }
    Ok(())
}
