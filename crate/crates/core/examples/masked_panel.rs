//! A panel with missing cells, e.g. worker-firm pairs that are only
//! partly observed.

use multiway_bootstrap::prelude::*;
use multiway_bootstrap::rng;
use multiway_bootstrap::simulation::{coverage, DgpSpec, Layout, McConfig};

fn main() -> Result<()> {
    let dgp = DgpSpec::additive(1.0, 1.0, 1.0, 40, 40);
    let panel = dgp.generate_masked(0.6, &mut rng::stream(8, rng::DATA, 0));
    let (p_row, _, p_bar) = panel.rates();
    let least = p_row.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("{} of {} cells observed (rate {p_bar:.2}, sparsest row {least:.2})", panel.n_observed(), 40 * 40);

    let cfg = BootstrapConfig::default().with_replicates(999).with_seed(8);
    let boot = bootstrap_masked(&panel, &cfg)?;
    let ci = confidence_interval(&boot, Method::Piv, 0.05)?;
    println!("mean {:.4}, lambda {:.3}, PIV [{:.4}, {:.4}]", boot.mean, boot.lambda, ci.lower, ci.upper);

    // Coverage of the true mean 0 over repeated samples.
    let mc = McConfig::new(200, BootstrapConfig::default().with_replicates(199).with_seed(8));
    let cov = coverage(&dgp, Layout::Masked { keep: 0.6 }, Method::Piv, &mc)?;
    println!("PIV coverage over 200 samples: {:.3} (se {:.3})", cov.value, cov.se);
    Ok(())
}
