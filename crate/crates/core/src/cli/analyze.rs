use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use super::io::{read_long_csv, Labeler, LongTable};
use super::manifest::{unix_now, RunManifest};
use super::{load_config, output_config, read_file, to_json, write_out, BootFlags, CliError, CliResult};
use crate::engine::{
    bootstrap_dyadic, bootstrap_masked, bootstrap_multivariate, bootstrap_multiway, bootstrap_two_way,
    bootstrap_unbalanced,
};
use crate::inference::{confidence_interval_sided, run_test, Interval, Method, Sidedness, TestResult, TestSpec};
use crate::model::{
    BootstrapConfig, BootstrapResult, DyadicArray, MaskedPanel, MultiwayArray, PanelArray, UnbalancedPanel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Auto,
    Balanced,
    Masked,
    Unbalanced,
    Multiway,
    Dyadic,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Long-format CSV: index columns `i,t` (or `i1..iD`) and value column `y`.
    input: PathBuf,
    /// Value columns to analyze, comma separated (default `y`).
    #[arg(long, value_delimiter = ',')]
    vars: Vec<String>,
    /// Pipeline; `auto` infers it from the data shape.
    #[arg(long, value_enum, default_value = "auto")]
    mode: Mode,
    /// Significance level of tests and intervals.
    #[arg(long)]
    level: Option<f64>,
    /// Procedures, comma separated: gau, bs, piv, sym.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Null value of the tests.
    #[arg(long)]
    null: Option<f64>,
    /// two, left or right.
    #[arg(long)]
    side: Option<String>,
    /// Also write every replicate to `replicates.csv`.
    #[arg(long)]
    replicates: bool,
    #[command(flatten)]
    boot: BootFlags,
}

#[derive(Serialize)]
struct VariableSummary {
    name: String,
    mean: f64,
    scale: f64,
    gaussian_scale: f64,
    effective_n: f64,
    lambda: f64,
    tau: Option<f64>,
    bootstrap_variance: f64,
    intervals: BTreeMap<&'static str, Interval>,
    tests: BTreeMap<&'static str, TestResult>,
}

#[derive(Serialize)]
struct Summary {
    schema: &'static str,
    mode: Mode,
    sizes: Vec<usize>,
    observations: usize,
    labels: BTreeMap<String, Vec<String>>,
    level: f64,
    null: f64,
    side: Sidedness,
    methods: Vec<Method>,
    config: serde_json::Value,
    variables: Vec<VariableSummary>,
}

struct Fitted {
    mode: Mode,
    sizes: Vec<usize>,
    labels: BTreeMap<String, Vec<String>>,
    results: Vec<(String, BootstrapResult)>,
}

fn data_error(msg: impl Into<String>) -> CliError {
    CliError::Schema { line: 0, msg: msg.into() }
}

/// Dense cell index and per-dimension labels.
fn index_cells(tab: &LongTable, shared: bool) -> (Vec<usize>, Vec<usize>, BTreeMap<String, Vec<String>>) {
    let d = tab.index_names.len();
    let mut labelers = vec![Labeler::default(); if shared { 1 } else { d }];
    let coords: Vec<Vec<usize>> = tab
        .records
        .iter()
        .map(|r| r.keys.iter().enumerate().map(|(k, key)| labelers[if shared { 0 } else { k }].id(key)).collect())
        .collect();
    let sizes: Vec<usize> = (0..d).map(|k| labelers[if shared { 0 } else { k }].len()).collect();
    let flat = coords.iter().map(|c| c.iter().zip(&sizes).fold(0, |acc, (&x, &n)| acc * n + x)).collect();
    let labels = if shared {
        BTreeMap::from([("nodes".to_string(), labelers[0].labels().to_vec())])
    } else {
        tab.index_names.iter().cloned().zip(labelers.iter().map(|l| l.labels().to_vec())).collect()
    };
    (flat, sizes, labels)
}

fn dense_values(tab: &LongTable, flat: &[usize], total: usize, var: usize) -> CliResult<Vec<f64>> {
    let mut values = vec![f64::NAN; total];
    for (rec, &k) in tab.records.iter().zip(flat) {
        if !values[k].is_nan() {
            return Err(CliError::Schema { line: rec.line, msg: "index tuple listed more than once".into() });
        }
        values[k] = rec.values[var];
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(data_error("some index tuples are missing; this pipeline needs every combination"));
    }
    Ok(values)
}

fn fit(tab: &LongTable, requested: Mode, cfg: &BootstrapConfig) -> CliResult<Fitted> {
    let d = tab.index_names.len();
    let names = tab.value_names.clone();
    let single = |r: BootstrapResult| vec![(names[0].clone(), r)];
    let multi = names.len() > 1;
    let mode = match requested {
        Mode::Auto if d > 2 => Mode::Multiway,
        Mode::Auto => {
            let (flat, sizes, _) = index_cells(tab, false);
            let mut counts = vec![0usize; sizes[0] * sizes[1]];
            for &k in &flat {
                counts[k] += 1;
            }
            if counts.iter().any(|&c| c > 1) || tab.has_unit_column {
                Mode::Unbalanced
            } else if counts.iter().all(|&c| c == 1) {
                Mode::Balanced
            } else {
                Mode::Masked
            }
        }
        m => m,
    };
    if multi && mode != Mode::Balanced {
        return Err(CliError::Usage("several --vars need a balanced two-way panel".into()));
    }
    if d != 2 && matches!(mode, Mode::Balanced | Mode::Masked | Mode::Unbalanced) {
        return Err(CliError::Usage(format!("mode {mode:?} needs index columns i,t")));
    }
    let (flat, sizes, labels) = index_cells(tab, mode == Mode::Dyadic);
    let total: usize = sizes.iter().product();
    let results = match mode {
        Mode::Auto => unreachable!(),
        Mode::Balanced => {
            let mut values = Vec::with_capacity(total * names.len());
            for m in 0..names.len() {
                values.extend(dense_values(tab, &flat, total, m)?);
            }
            let panel = PanelArray::multivariate(sizes[0], sizes[1], names.len(), values)?;
            if multi {
                let r = bootstrap_multivariate(&panel, cfg)?;
                names.iter().cloned().zip(r.components).collect()
            } else {
                single(bootstrap_two_way(&panel, cfg)?)
            }
        }
        Mode::Masked => {
            let mut obs = Vec::with_capacity(flat.len());
            let mut seen = vec![false; total];
            for (rec, &k) in tab.records.iter().zip(&flat) {
                if seen[k] {
                    return Err(CliError::Schema { line: rec.line, msg: "index pair listed more than once".into() });
                }
                seen[k] = true;
                obs.push((k / sizes[1], k % sizes[1], rec.values[0]));
            }
            single(bootstrap_masked(&MaskedPanel::from_observations(sizes[0], sizes[1], &obs)?, cfg)?)
        }
        Mode::Unbalanced => {
            let mut cells = vec![Vec::new(); total];
            for (rec, &k) in tab.records.iter().zip(&flat) {
                cells[k].push(rec.values[0]);
            }
            if cells.iter().any(Vec::is_empty) {
                return Err(data_error("an unbalanced panel needs at least one unit in every (i, t) cell"));
            }
            single(bootstrap_unbalanced(&UnbalancedPanel::new(sizes[0], sizes[1], cells)?, cfg)?)
        }
        Mode::Multiway => {
            let values = dense_values(tab, &flat, total, 0)?;
            single(bootstrap_multiway(&MultiwayArray::new(sizes.clone(), values)?, cfg)?)
        }
        Mode::Dyadic => {
            let values = dense_values(tab, &flat, total, 0)?;
            single(bootstrap_dyadic(&DyadicArray::new(sizes[0], d, values)?, cfg)?)
        }
    };
    Ok(Fitted { mode, sizes, labels, results })
}

fn csv_bytes(rows: Vec<Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn run(args: &AnalyzeArgs) -> CliResult<()> {
    let started = unix_now();
    let file = load_config(args.boot.config.as_deref())?;
    let cfg = args.boot.resolve(&file)?;
    let level = args.level.or(file.inference.level).unwrap_or(0.05);
    let null = args.null.or(file.inference.null).unwrap_or(0.0);
    let side = match &args.side {
        Some(s) => s.parse()?,
        None => file.inference.side.unwrap_or(Sidedness::Two),
    };
    let methods: Vec<Method> = if !args.method.is_empty() {
        args.method.iter().map(|m| m.parse()).collect::<Result<_, _>>()?
    } else if let Some(m) = &file.inference.methods {
        m.clone()
    } else {
        Method::ALL.into_iter().filter(|&m| side == Sidedness::Two || m != Method::Sym).collect()
    };
    for &m in &methods {
        TestSpec { null, method: m, sidedness: side, alpha: level }.check()?;
    }

    let bytes = read_file(&args.input)?;
    let tab = read_long_csv(&bytes, &args.vars)?;
    let fitted = fit(&tab, args.mode, &cfg)?;

    let mut report = vec![["variable", "method", "side", "estimate", "lower", "upper", "statistic", "p_value", "reject"]
        .map(String::from)
        .to_vec()];
    let mut variables = Vec::new();
    for (name, boot) in &fitted.results {
        let mut intervals = BTreeMap::new();
        let mut tests = BTreeMap::new();
        for &m in &methods {
            let ci = confidence_interval_sided(boot, m, side, level)?;
            let t = run_test(boot, &TestSpec { null, method: m, sidedness: side, alpha: level })?;
            report.push(vec![
                name.clone(),
                m.name().into(),
                format!("{side:?}").to_lowercase(),
                boot.mean.to_string(),
                ci.lower.to_string(),
                ci.upper.to_string(),
                t.statistic.to_string(),
                t.p_value.to_string(),
                t.reject.to_string(),
            ]);
            intervals.insert(m.name(), ci);
            tests.insert(m.name(), t);
        }
        variables.push(VariableSummary {
            name: name.clone(),
            mean: boot.mean,
            scale: boot.scale,
            gaussian_scale: boot.gaussian_scale,
            effective_n: boot.effective_n,
            lambda: boot.lambda,
            tau: boot.tau,
            bootstrap_variance: boot.bootstrap_variance(),
            intervals,
            tests,
        });
    }

    let config = serde_json::json!({
        "bootstrap": output_config(&cfg),
        "mode": args.mode,
        "vars": tab.value_names,
        "level": level,
        "null": null,
        "side": side,
        "methods": methods,
        "replicates_csv": args.replicates,
    });
    let summary = Summary {
        schema: "mwboot.summary/1",
        mode: fitted.mode,
        sizes: fitted.sizes.clone(),
        observations: tab.records.len(),
        labels: fitted.labels.clone(),
        level,
        null,
        side,
        methods: methods.clone(),
        config: config.clone(),
        variables,
    };
    let out = &args.boot.out;
    let mut manifest = RunManifest::new("analyze", &config, cfg.seed, Some(&bytes), started);
    manifest.outputs.push(write_out(out, "summary.json", &to_json(&summary))?);
    manifest.outputs.push(write_out(out, "report.csv", &csv_bytes(report)?)?);
    if args.replicates {
        let mut header = vec!["replicate".to_string()];
        for (name, _) in &fitted.results {
            header.push(format!("mean_{name}"));
            header.push(format!("t_{name}"));
        }
        let mut rows = vec![header];
        for b in 0..cfg.replicates {
            let mut row = vec![b.to_string()];
            for (_, r) in &fitted.results {
                row.push(r.replicate_means[b].to_string());
                row.push(r.replicate_t.get(b).map_or(String::new(), f64::to_string));
            }
            rows.push(row);
        }
        manifest.outputs.push(write_out(out, "replicates.csv", &csv_bytes(rows)?)?);
    }
    manifest.finished_unix = unix_now();
    write_out(out, "manifest.json", &to_json(&manifest))?;

    for v in &summary.variables {
        println!("{}: mean {:.6}, lambda {:.4}, {} cells", v.name, v.mean, v.lambda, v.effective_n);
        for (m, ci) in &v.intervals {
            let t = &v.tests[m];
            println!("  {m:>3}: [{:.6}, {:.6}]  p = {:.4}{}", ci.lower, ci.upper, t.p_value, if t.reject { "  reject" } else { "" });
        }
    }
    println!("mode {:?}; wrote {}", fitted.mode, out.display());
    Ok(())
}
