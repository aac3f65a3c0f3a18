//! Three-way clustering: exporter by importer by year.

use multiway_bootstrap::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<()> {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let sizes = [25, 20, 12];
    let effects: Vec<Vec<f64>> = sizes.iter().map(|&n| (0..n).map(|_| r.sample(StandardNormal)).collect()).collect();
    let array = MultiwayArray::from_fn(sizes.to_vec(), |k| {
        let e: f64 = (0..3).map(|d| effects[d][k[d]]).sum();
        2.0 + e + r.sample::<f64, _>(StandardNormal)
    })?;

    let dec = decompose_multiway(&array);
    let vc = variance_components(&dec)?;
    for (d, e) in vc.effects.iter().enumerate() {
        println!("dimension {d}: {} levels, effect variance {:.3}", e.levels, e.corrected);
    }
    println!("residual variance {:.3}", vc.sigma_w2);

    let boot = bootstrap_multiway(&array, &BootstrapConfig::default().with_replicates(999).with_seed(3))?;
    let ci = confidence_interval(&boot, Method::Piv, 0.05)?;
    println!("mean {:.4}, lambda {:.3}, 95% PIV interval [{:.4}, {:.4}]", boot.mean, boot.lambda, ci.lower, ci.upper);
    Ok(())
}
