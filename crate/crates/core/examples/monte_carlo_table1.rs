//! Rejection rates of the four procedures on a Table 1 style design.
//!
//! Usage: `cargo run --release --example monte_carlo_table1 -- [design] [n] [sims] [reps]`

use multiway_bootstrap::prelude::*;
use multiway_bootstrap::simulation::{percent_grid, preset, run_monte_carlo, Design, McConfig};

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("table1-design1", String::as_str);
    let n: usize = args.get(1).map_or(20, |s| s.parse().expect("n"));
    let sims: usize = args.get(2).map_or(200, |s| s.parse().expect("sims"));
    let reps: usize = args.get(3).map_or(199, |s| s.parse().expect("reps"));

    let base = preset(name)?;
    let design = Design { dgp: base.dgp.clone().with_size(n, n), ..base };
    let boot = BootstrapConfig::default().with_replicates(reps).with_seed(2024);
    let mc = McConfig::new(sims, boot).with_grid(percent_grid(9));
    let report = run_monte_carlo(&design, &mc)?;

    println!("{} ({}), N = T = {n}, S = {sims}, B = {reps}", design.name, design.description);
    println!("AN ratio {:.3} (se {:.3}), BS ratio {:.3}", report.an_ratio.value, report.an_ratio.se, report.bs_ratio.value);
    for m in &report.methods {
        let side = |e: Option<multiway_bootstrap::simulation::Estimate>| e.map_or("  -  ".into(), |e| format!("{:.3}", e.value));
        println!(
            "{:>4}: two-sided {:.3} (se {:.3})  left {}  right {}",
            m.method.name(),
            m.two_sided.value,
            m.two_sided.se,
            side(m.left),
            side(m.right)
        );
    }
    Ok(())
}
