use std::path::Path;

use clap::Args;

use super::manifest::{unix_now, RunManifest};
use super::{load_config, output_config, read_file, to_json, write_out, BootFlags, CliError, CliResult};
use crate::model::{BootstrapConfig, KappaRule, LambdaMode};
use crate::simulation::{percent_grid, preset, reports_to_csv, run_monte_carlo, Design, McConfig};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Preset name (e.g. table1-design1) or a TOML file with `[dgp]`,
    /// `[simulation]` and `[bootstrap]` tables. `list` prints the presets.
    design: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    /// Several square sizes N = T, comma separated; one report row each.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Simulated samples per size.
    #[arg(long)]
    sims: Option<usize>,
    /// Number of interior percentiles for the c.d.f. error curves.
    #[arg(long)]
    grid: Option<usize>,
    /// Nominal level of the tests.
    #[arg(long)]
    level: Option<f64>,
    #[command(flatten)]
    boot: BootFlags,
}

fn is_file(arg: &str) -> bool {
    arg.ends_with(".toml") || Path::new(arg).is_file()
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    if args.design == "list" {
        for d in crate::simulation::presets() {
            println!("{:<20} {}", d.name, d.description);
        }
        return Ok(());
    }
    let started = unix_now();
    let (file, input) = if is_file(&args.design) {
        let path = Path::new(&args.design);
        (load_config(Some(path))?, Some(read_file(path)?))
    } else {
        (load_config(args.boot.config.as_deref())?, None)
    };
    let sim = &file.simulation;
    let mut design = if !is_file(&args.design) {
        preset(&args.design)?
    } else {
        match (&sim.design, &file.dgp) {
            (Some(name), Some(dgp)) => {
                let base = preset(name)?;
                Design { name: format!("{name}-custom"), dgp: dgp.clone(), ..base }
            }
            (Some(name), None) => preset(name)?,
            (None, Some(dgp)) => Design {
                name: Path::new(&args.design).file_stem().map_or("custom".into(), |s| s.to_string_lossy().into_owned()),
                description: "user configuration".into(),
                dgp: dgp.clone(),
                lambda_mode: LambdaMode::Hat,
                kappa_rule: KappaRule::Log,
            },
            (None, None) => return Err(CliError::Usage("config needs [dgp] or simulation.design".into())),
        }
    };
    // A preset's shrinkage settings apply unless the file or flags set them.
    let mut boot_file = file.bootstrap.clone();
    if boot_file.is_none() {
        let mut b = BootstrapConfig::default();
        b.lambda_mode = design.lambda_mode;
        b.kappa_rule = design.kappa_rule;
        boot_file = Some(b);
    }
    let resolved = super::FileConfig { bootstrap: boot_file, ..Default::default() };
    let cfg = args.boot.resolve(&resolved)?;
    design.lambda_mode = cfg.lambda_mode;
    design.kappa_rule = cfg.kappa_rule;

    let base = design.dgp.clone();
    let sizes: Vec<(usize, usize)> = if !args.sizes.is_empty() {
        args.sizes.iter().map(|&s| (s, s)).collect()
    } else if let (None, None, Some(list)) = (args.n, args.t, &sim.sizes) {
        list.iter().map(|&s| (s, s)).collect()
    } else {
        let n = args.n.or(sim.n).unwrap_or(base.n);
        let t = args.t.or(sim.t).or(args.n).unwrap_or(base.t);
        vec![(n, t)]
    };
    let sims = args.sims.or(sim.sims).unwrap_or(1000);
    let grid = percent_grid(args.grid.or(sim.grid).unwrap_or(0));
    let level = args.level.or(sim.level).unwrap_or(0.05);

    let mut reports = Vec::new();
    for &(n, t) in &sizes {
        let d = Design { dgp: base.clone().with_size(n, t), ..design.clone() };
        let mut mc = McConfig::new(sims, cfg.clone()).with_grid(grid.clone());
        mc.alpha = level;
        let r = run_monte_carlo(&d, &mc)?;
        eprintln!(
            "{} {n}x{t}: {}",
            d.name,
            r.methods.iter().map(|m| format!("{} {:.3}", m.method.name(), m.two_sided.value)).collect::<Vec<_>>().join(", ")
        );
        reports.push(r);
    }

    let config = serde_json::json!({
        "design": design,
        "sizes": sizes,
        "sims": sims,
        "grid": grid,
        "level": level,
        "bootstrap": output_config(&cfg),
    });
    let out = &args.boot.out;
    let mut manifest = RunManifest::new("simulate", &config, cfg.seed, input.as_deref(), started);
    let csv = reports_to_csv(&reports)?;
    print!("{csv}");
    manifest.outputs.push(write_out(out, "report.csv", csv.as_bytes())?);
    manifest.outputs.push(write_out(out, "report.json", &to_json(&reports))?);
    manifest.finished_unix = unix_now();
    write_out(out, "manifest.json", &to_json(&manifest))?;
    Ok(())
}
