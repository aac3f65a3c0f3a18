//! Several units per cell: students within school-by-year cells.

use multiway_bootstrap::prelude::*;
use multiway_bootstrap::projections::decompose_unbalanced;
use multiway_bootstrap::variance::variance_components_unbalanced;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<()> {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let (n, t) = (30, 12);
    let school: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
    let year: Vec<f64> = (0..t).map(|_| 0.5 * r.sample::<f64, _>(StandardNormal)).collect();
    let mut cells = Vec::with_capacity(n * t);
    for a in &school {
        for g in &year {
            let v = 0.5 * r.sample::<f64, _>(StandardNormal);
            let size = r.random_range(1..=8);
            cells.push((0..size).map(|_| 50.0 + a + g + v + r.sample::<f64, _>(StandardNormal)).collect());
        }
    }
    let panel = UnbalancedPanel::new(n, t, cells)?;

    let vc = variance_components_unbalanced(&decompose_unbalanced(&panel), &panel)?;
    let within = vc.within.expect("unbalanced components");
    println!(
        "{} students; cell variance {:.3}, within-cell variance {:.3}, mean cell size {:.2}",
        panel.n_units(),
        within.sigma_v2,
        within.sigma_e2,
        within.r_bar
    );

    let boot = bootstrap_unbalanced(&panel, &BootstrapConfig::default().with_replicates(999).with_seed(9))?;
    println!("mean {:.4}, lambda {:.3}, tau {:.3}", boot.mean, boot.lambda, boot.tau.unwrap_or(1.0));
    for m in Method::ALL {
        let ci = confidence_interval(&boot, m, 0.05)?;
        println!("{:>4}: [{:.4}, {:.4}]", m.name(), ci.lower, ci.upper);
    }
    Ok(())
}
