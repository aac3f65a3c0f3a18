//! The degenerate case: with mean-zero factors the cell outcome is a product
//! `a_i g_t`, and the scaled mean converges to a product of two normals
//! rather than a normal. Its excess kurtosis is 6.

use multiway_bootstrap::prelude::*;
use multiway_bootstrap::simulation::{degeneracy_diagnostic, DgpSpec};

fn main() -> Result<()> {
    println!("{:>8} {:>10} {:>10}", "noise", "skewness", "kurtosis");
    for noise in [0.0, 0.5, 2.0, 10.0] {
        let dgp = DgpSpec::nonseparable([1.0, 1.0, noise], 0.0, 60, 60);
        let rep = degeneracy_diagnostic(&dgp, 4000, 12, None)?;
        println!("{noise:>8.1} {:>10.3} {:>10.3}", rep.skewness, rep.excess_kurtosis);
    }
    // A non-zero factor mean restores the normal limit.
    let dgp = DgpSpec::nonseparable([1.0, 1.0, 0.0], 1.0, 60, 60);
    let rep = degeneracy_diagnostic(&dgp, 4000, 12, None)?;
    println!("mean 1: skewness {:.3}, excess kurtosis {:.3}", rep.skewness, rep.excess_kurtosis);
    Ok(())
}
