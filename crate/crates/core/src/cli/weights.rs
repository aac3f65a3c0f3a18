use clap::Args;
use serde::Serialize;

use super::{CliError, CliResult};
use crate::wild_weights::{corrected_moments, solve_two_point, TwoPointWeights};

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct WeightsArgs {
    /// Target second moment.
    c2: Option<f64>,
    /// Target third moment.
    c3: Option<f64>,
    /// Use the bias-corrected moments for a dimension with this many levels.
    #[arg(long, conflicts_with_all = ["c2", "c3"])]
    corrected: Option<u64>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct Printed {
    #[serde(flatten)]
    weights: TwoPointWeights,
    mean: f64,
    second: f64,
    third: f64,
}

pub fn run(args: &WeightsArgs) -> CliResult<()> {
    let (c2, c3) = match (args.corrected, args.c2, args.c3) {
        (Some(n), _, _) => corrected_moments(n)?,
        (None, Some(c2), Some(c3)) => (c2, c3),
        _ => return Err(CliError::Usage("give C2 and C3, or --corrected N".into())),
    };
    let w = solve_two_point(c2, c3)?;
    let (m1, m2, m3) = w.moments();
    if args.json {
        let out = Printed { weights: w, mean: m1, second: m2, third: m3 };
        println!("{}", serde_json::to_string_pretty(&out).expect("weights serialize"));
    } else {
        println!("c2 = {c2}, c3 = {c3}");
        println!("p*  = {:.15}", w.p_star);
        println!("w1  = {:.15}", w.w1);
        println!("w2  = {:.15}", w.w2);
        println!("check: E w = {m1:.3e}, E w^2 = {m2:.15}, E w^3 = {m3:.15}");
    }
    Ok(())
}
