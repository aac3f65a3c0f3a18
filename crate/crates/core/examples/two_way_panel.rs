//! Mean of a two-way clustered panel: intervals and tests for all four procedures.

use multiway_bootstrap::prelude::*;
use multiway_bootstrap::rng;
use multiway_bootstrap::simulation::DgpSpec;

fn main() -> Result<()> {
    // Firms by years with a skewed firm effect and a year effect.
    let panel = DgpSpec::additive(1.0, 0.5, 1.0, 40, 30).generate(&mut rng::stream(11, rng::DATA, 0));

    let dec = decompose_two_way(&panel);
    let vc = variance_components(&dec)?;
    println!(
        "mean {:.4}; sigma_a2 {:.3}, sigma_g2 {:.3}, sigma_w2 {:.3}",
        dec.grand_mean,
        vc.sigma_a2(),
        vc.sigma_g2(),
        vc.sigma_w2
    );

    let cfg = BootstrapConfig::default().with_replicates(999).with_seed(11);
    let boot = bootstrap_two_way(&panel, &cfg)?;
    println!("lambda {:.3}, scale {:.3}, bootstrap sd {:.4}", boot.lambda, boot.scale, boot.bootstrap_variance().sqrt());

    for m in Method::ALL {
        let ci = confidence_interval(&boot, m, 0.05)?;
        let test = run_test(&boot, &TestSpec::two_sided(0.0, m, 0.05))?;
        println!(
            "{:>4}: [{:+.4}, {:+.4}]  H0: mean = 0  p = {:.3}{}",
            m.name(),
            ci.lower,
            ci.upper,
            test.p_value,
            if test.reject { "  rejected" } else { "" }
        );
    }
    Ok(())
}
