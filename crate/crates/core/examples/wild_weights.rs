//! Two-point wild weights: Mammen's law and the small-sample corrected laws.

use multiway_bootstrap::prelude::*;
use multiway_bootstrap::rng;
use multiway_bootstrap::wild_weights::sample_weights;

fn main() -> Result<()> {
    let m = TwoPointWeights::mammen();
    println!("Mammen: w1 = {:.6} w.p. {:.6}, w2 = {:.6}", m.w1, m.p_star, m.w2);

    for n in [3u64, 5, 10, 50, 1000] {
        let (c2, c3) = corrected_moments(n)?;
        let w = solve_two_point(c2, c3)?;
        println!("n = {n:>4}: c2 = {c2:.4}, c3 = {c3:.4} -> w1 = {:.4} w.p. {:.4}, w2 = {:.4}", w.w1, w.p_star, w.w2);
    }

    let w = solve_two_point(2.0, -1.0)?;
    let draws = sample_weights(&w, 200_000, &mut rng::stream(1, rng::BOOTSTRAP, 0));
    let k = draws.len() as f64;
    let moment = |p: i32| draws.iter().map(|x| x.powi(p)).sum::<f64>() / k;
    let (e1, e2, e3) = w.moments();
    println!("c2 = 2, c3 = -1: exact ({e1:.3}, {e2:.3}, {e3:.3}), sampled ({:.3}, {:.3}, {:.3})", moment(1), moment(2), moment(3));
    Ok(())
}
