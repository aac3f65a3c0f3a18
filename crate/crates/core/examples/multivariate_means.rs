//! Joint bootstrap of several outcomes on one panel and a ratio of means.

use multiway_bootstrap::prelude::*;
use multiway_bootstrap::rng;
use multiway_bootstrap::simulation::DgpSpec;

fn main() -> Result<()> {
    let (n, t) = (30, 25);
    let sales = DgpSpec::additive(1.0, 1.0, 1.0, n, t).generate(&mut rng::stream(6, rng::DATA, 0));
    let noise = DgpSpec::additive(0.2, 0.2, 0.5, n, t).generate(&mut rng::stream(6, rng::DATA, 1));
    // Costs share the firm and year structure of sales.
    let costs = PanelArray::from_fn(n, t, |i, s| 5.0 + 0.6 * sales.get(i, s) + noise.get(i, s))?;
    let sales = PanelArray::from_fn(n, t, |i, s| 10.0 + sales.get(i, s))?;
    let panel = PanelArray::stack(&[sales, costs])?;

    let boot = bootstrap_multivariate(&panel, &BootstrapConfig::default().with_replicates(999).with_seed(6))?;
    let cov = boot.covariance();
    let corr = cov[0][1] / (cov[0][0] * cov[1][1]).sqrt();
    println!("bootstrap correlation of the two means: {corr:.3}");

    let ratio = boot.components[1].mean / boot.components[0].mean;
    println!("observed cost/sales ratio {ratio:.4}");
    let ratios: Vec<f64> = (0..999).map(|b| boot.replicate_mean(b)).map(|m| m[1] / m[0]).collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| multiway_bootstrap::inference::quantile_sorted(&sorted, p);
    println!("cost/sales ratio: 95% percentile interval [{:.4}, {:.4}]", q(0.025), q(0.975));
    Ok(())
}
