//! Dyadic data: the mean of a pairwise outcome over one set of nodes.
//!
//! Each ordered pair `(i, j)` carries `Y_ij = h_i + h_j + e_ij`; the node
//! effect enters through both positions, so rows and columns share labels.

use multiway_bootstrap::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<()> {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let n = 60;
    let h: Vec<f64> = (0..n).map(|_| 0.7 * r.sample::<f64, _>(StandardNormal)).collect();
    let dyads = DyadicArray::from_fn(n, 2, |k| h[k[0]] + h[k[1]] + r.sample::<f64, _>(StandardNormal))?;

    let cfg = BootstrapConfig::default().with_replicates(999).with_seed(5);
    let boot = bootstrap_dyadic(&dyads, &cfg)?;
    println!("pairs: mean {:.4}, lambda {:.3}", boot.mean, boot.lambda);
    for m in [Method::Gau, Method::Piv] {
        let ci = confidence_interval(&boot, m, 0.05)?;
        println!("{:>4}: [{:.4}, {:.4}]", m.name(), ci.lower, ci.upper);
    }

    // Triads: a third-order array over the same 30 nodes.
    let m = 30;
    let triads = DyadicArray::from_fn(m, 3, |k| h[k[0]] + h[k[1]] + h[k[2]] + r.sample::<f64, _>(StandardNormal))?;
    let boot = bootstrap_dyadic(&triads, &cfg)?;
    let ci = confidence_interval(&boot, Method::Piv, 0.05)?;
    println!("triads: mean {:.4}, PIV [{:.4}, {:.4}]", boot.mean, ci.lower, ci.upper);
    Ok(())
}
