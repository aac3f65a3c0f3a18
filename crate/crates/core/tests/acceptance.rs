//! Acceptance run: one PASS/FAIL line per criterion; exits 1 on any failure
//! not recorded as a documented deviation.
//!
//! Run with `cargo test --test acceptance`. Set `MWBOOT_SMOKE=1` for the
//! reduced Table 1 Design 1 variant (N = T = 20, S = 500, bands +-0.03).

use std::path::Path;
use std::time::Instant;

use multiway_bootstrap::engine::bootstrap_zestimator;
use multiway_bootstrap::prelude::*;
use multiway_bootstrap::projections::decompose_array;
use multiway_bootstrap::rng;
use multiway_bootstrap::simulation::{
    coverage, degeneracy_diagnostic, mean_estimate, preset, run_monte_carlo, shape, Design, DgpSpec, Layout, McConfig,
    McReport,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
    /// The failure is a recorded, understood deviation from the target.
    documented: bool,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into(), documented: false }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

// C1 -------------------------------------------------------------------------

fn wild_weights() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let c2 = 10.0 * (1.0 - r.random::<f64>());
        let c3 = 20.0 * r.random::<f64>() - 10.0;
        let w = solve_two_point(c2, c3).expect("valid moments");
        let (m1, m2, m3) = w.moments();
        worst = worst.max(m1.abs()).max((m2 - c2).abs()).max((m3 - c3).abs() / c3.abs().max(1.0));
    }
    let m = solve_two_point(1.0, 1.0).unwrap();
    let s5 = 5f64.sqrt();
    let mammen = (m.w1 - (1.0 + s5) / 2.0).abs().max((m.w2 - (1.0 - s5) / 2.0).abs()).max((m.p_star - (5.0 - s5) / 10.0).abs());
    outcome(worst <= 1e-12 && mammen <= 1e-12, format!("max moment error {worst:.1e}, Mammen error {mammen:.1e}"))
}

// C2 -------------------------------------------------------------------------

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * scale.max(1.0)
}

/// Defining sums for a dense array: slice means minus the grand mean.
fn oracle_dense(values: &[f64], sizes: &[usize]) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let total = values.len();
    let grand = values.iter().sum::<f64>() / total as f64;
    let strides: Vec<usize> = (0..sizes.len()).map(|d| sizes[d + 1..].iter().product()).collect();
    let level = |k: usize, d: usize| (k / strides[d]) % sizes[d];
    let effects: Vec<Vec<f64>> = (0..sizes.len())
        .map(|d| {
            let mut sum = vec![0.0; sizes[d]];
            for (k, v) in values.iter().enumerate() {
                sum[level(k, d)] += v;
            }
            let per = (total / sizes[d]) as f64;
            sum.into_iter().map(|s| s / per - grand).collect()
        })
        .collect();
    let residuals = (0..total)
        .map(|k| values[k] - grand - (0..sizes.len()).map(|d| effects[d][level(k, d)]).sum::<f64>())
        .collect();
    (grand, effects, residuals)
}

fn dense_matches(values: &[f64], sizes: &[usize]) -> bool {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dec = decompose_array(values, sizes);
    let (grand, effects, residuals) = oracle_dense(values, sizes);
    let mut ok = close(dec.grand_mean, grand, scale);
    for d in 0..sizes.len() {
        ok &= dec.effects[d].iter().zip(&effects[d]).all(|(a, b)| close(*a, *b, scale));
        ok &= close(dec.effects[d].iter().sum::<f64>(), 0.0, scale * sizes[d] as f64);
    }
    ok &= dec.residuals.iter().zip(&residuals).all(|(a, b)| close(*a, *b, scale));
    // Reconstruction.
    let strides: Vec<usize> = (0..sizes.len()).map(|d| sizes[d + 1..].iter().product()).collect();
    for (k, v) in values.iter().enumerate() {
        let fit = dec.grand_mean
            + (0..sizes.len()).map(|d| dec.effects[d][(k / strides[d]) % sizes[d]]).sum::<f64>()
            + dec.residuals[k];
        ok &= close(fit, *v, scale);
    }
    ok
}

fn unbalanced_matches(panel: &UnbalancedPanel) -> bool {
    let (n, t) = (panel.n_rows(), panel.n_cols());
    let scale = panel.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dec = decompose_unbalanced(panel);
    let all: Vec<f64> = panel.values().to_vec();
    let grand = all.iter().sum::<f64>() / all.len() as f64;
    let mut ok = close(dec.grand_mean, grand, scale);
    let mut row_total = 0.0;
    for i in 0..n {
        let units: Vec<f64> = (0..t).flat_map(|s| panel.cell(i, s).to_vec()).collect();
        let a = units.iter().sum::<f64>() / units.len() as f64 - grand;
        ok &= close(dec.effects[0][i], a, scale);
        row_total += units.len() as f64 * dec.effects[0][i];
    }
    let mut col_total = 0.0;
    for s in 0..t {
        let units: Vec<f64> = (0..n).flat_map(|i| panel.cell(i, s).to_vec()).collect();
        let g = units.iter().sum::<f64>() / units.len() as f64 - grand;
        ok &= close(dec.effects[1][s], g, scale);
        col_total += units.len() as f64 * dec.effects[1][s];
    }
    // Unit-weighted effects are centered.
    ok &= close(row_total, 0.0, scale * all.len() as f64) && close(col_total, 0.0, scale * all.len() as f64);
    let e = dec.unit_residuals.as_ref().expect("unit residuals");
    let mut u = 0;
    for i in 0..n {
        for s in 0..t {
            let cell = panel.cell(i, s);
            let m = cell.iter().sum::<f64>() / cell.len() as f64;
            ok &= close(dec.residual(i, s), m - grand - dec.effects[0][i] - dec.effects[1][s], scale);
            for y in cell {
                ok &= close(e[u], y - m, scale);
                ok &= close(dec.grand_mean + dec.effects[0][i] + dec.effects[1][s] + dec.residual(i, s) + e[u], *y, scale);
                u += 1;
            }
        }
    }
    ok
}

fn decompositions() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    let cases = 500;
    for case in 0..cases {
        let ok = match case % 5 {
            3 => {
                let v: Vec<f64> = (0..36).map(|_| r.random::<f64>() * 10.0 - 5.0).collect();
                dense_matches(&v, &[3, 3, 4])
            }
            4 => {
                let (n, t) = (r.random_range(3..=12), r.random_range(3..=12));
                let cells = (0..n * t)
                    .map(|_| (0..r.random_range(1..=4)).map(|_| r.random::<f64>() * 6.0 - 3.0).collect())
                    .collect();
                unbalanced_matches(&UnbalancedPanel::new(n, t, cells).unwrap())
            }
            _ => {
                let (n, t) = (r.random_range(3..=50), r.random_range(3..=50));
                let offset = r.random::<f64>() * 100.0;
                let v: Vec<f64> = (0..n * t).map(|_| offset + r.random::<f64>() * 4.0).collect();
                dense_matches(&v, &[n, t])
            }
        };
        failures += usize::from(!ok);
    }
    outcome(failures == 0, format!("{failures} of {cases} arrays disagree with the oracle"))
}

// C3 -------------------------------------------------------------------------

fn unbiasedness() -> Outcome {
    let dgp = DgpSpec::additive(1.0, 1.0, 1.0, 20, 20);
    let sims = 20_000;
    let mut est = [Vec::with_capacity(sims), Vec::with_capacity(sims), Vec::with_capacity(sims)];
    for s in 0..sims {
        let p = dgp.generate(&mut rng::stream(3, rng::DATA, s as u64));
        let vc = variance_components(&decompose_two_way(&p)).unwrap();
        est[0].push(vc.sigma_a2());
        est[1].push(vc.sigma_g2());
        est[2].push(vc.sigma_w2);
    }
    let parts: Vec<(f64, f64)> = est.iter().map(|x| mean_estimate(x)).map(|e| (e.value, e.se)).collect();
    let pass = parts.iter().all(|(m, se)| (m - 1.0).abs() <= 3.0 * se);
    let detail = ["a", "g", "w"]
        .iter()
        .zip(&parts)
        .map(|(k, (m, se))| format!("sigma_{k}2 {m:.4} ({:+.1} se)", (m - 1.0) / se))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, detail)
}

// C4-C6 ----------------------------------------------------------------------

fn simulate(name: &str, n: usize, sims: usize, reps: usize, seed: u64) -> McReport {
    let d = preset(name).unwrap();
    let d = Design { dgp: d.dgp.with_size(n, n), ..d };
    let boot = BootstrapConfig::default().with_replicates(reps).with_seed(seed);
    run_monte_carlo(&d, &McConfig::new(sims, boot)).unwrap()
}

fn rate(rep: &McReport, m: Method) -> f64 {
    rep.method(m).unwrap().two_sided.value
}

fn frr_check(rep: &McReport, targets: &[(Method, f64)], tol: f64) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for &(m, target) in targets {
        let v = rate(rep, m);
        pass &= within(v, target, tol);
        parts.push(format!("{} {v:.3} (target {target:.3})", m.name()));
    }
    (pass, parts.join(", "))
}

fn table1_design1() -> Outcome {
    let smoke = std::env::var_os("MWBOOT_SMOKE").is_some();
    let (n, sims, tol) = if smoke { (20, 500, 0.03) } else { (50, 2000, 0.015) };
    let rep = simulate("table1-design1", n, sims, 499, 4);
    let targets = [(Method::Gau, 0.053), (Method::Bs, 0.049), (Method::Piv, 0.059), (Method::Sym, 0.048)];
    let (pass, detail) = frr_check(&rep, &targets, tol);
    let an = rep.an_ratio.value;
    let an_ok = within(an, 1.03, 0.10);
    outcome(pass && an_ok, format!("N=T={n}, S={sims}, +-{tol}: {detail}; AN {an:.3} (target 1.03 +-0.10)"))
}

fn table1_design2() -> Outcome {
    let rep = simulate("table1-design2", 100, 2000, 499, 5);
    let targets: Vec<(Method, f64)> = Method::ALL.iter().map(|&m| (m, 0.05)).collect();
    let (pass, detail) = frr_check(&rep, &targets, 0.015);
    outcome(pass, format!("N=T=100, S=2000: {detail}"))
}

fn table3_design2() -> Outcome {
    let rep = simulate("table3-design2", 50, 2000, 499, 6);
    let (gau_ok, gau) = frr_check(&rep, &[(Method::Gau, 0.041)], 0.015);
    let (piv_ok, piv) = frr_check(&rep, &[(Method::Piv, 0.048)], 0.015);
    let mut o = outcome(gau_ok && piv_ok, format!("N=T=50, S=2000, sqrt-half-log: {gau}, {piv}; AN {:.3}", rep.an_ratio.value));
    // The reference GAU rate comes with a variance estimate inflated by about
    // 15% (AN 1.146); with a consistent estimate GAU over-rejects here.
    o.documented = piv_ok && !gau_ok;
    o
}

// C7 -------------------------------------------------------------------------

fn non_gaussian_limit() -> Outcome {
    let dgp = DgpSpec::nonseparable([1.0, 1.0, 0.0], 0.0, 100, 100);
    let rep = degeneracy_diagnostic(&dgp, 5000, 7, None).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let z: Vec<f64> = (0..5000)
        .map(|_| r.sample::<f64, _>(StandardNormal) * r.sample::<f64, _>(StandardNormal))
        .collect();
    let (_, oracle, _) = shape(&z);
    outcome(
        rep.excess_kurtosis > 3.0,
        format!("excess kurtosis {:.2} (Z1 Z2 oracle {oracle:.2}, theory 6)", rep.excess_kurtosis),
    )
}

// C8 -------------------------------------------------------------------------

fn run_cli(args: &[&str]) -> i32 {
    let mut full = vec!["mwboot"];
    full.extend_from_slice(args);
    multiway_bootstrap::cli::run(full)
}

fn output_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let mut bytes = std::fs::read(&p).unwrap();
            if name == "manifest.json" {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                let m = v.as_object_mut().unwrap();
                m.remove("started_unix");
                m.remove("finished_unix");
                bytes = serde_json::to_vec(&v).unwrap();
            }
            (name, bytes)
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("panel.csv");
    let panel = DgpSpec::additive(1.0, 1.0, 1.0, 12, 9).generate(&mut rng::stream(8, rng::DATA, 0));
    let mut text = String::from("i,t,y\n");
    for i in 0..12 {
        for t in 0..9 {
            text.push_str(&format!("u{i},p{t},{}\n", panel.get(i, t)));
        }
    }
    std::fs::write(&csv, text).unwrap();
    let csv = csv.to_str().unwrap();
    let mut checked = Vec::new();
    let mut pass = true;
    let commands: [(&str, Vec<&str>); 2] = [
        ("analyze", vec!["analyze", csv, "--reps", "199", "--seed", "8", "--replicates"]),
        ("simulate", vec!["simulate", "table1-design1", "--n", "10", "--sims", "20", "--reps", "99", "--seed", "8"]),
    ];
    for (name, args) in commands {
        let mut runs = Vec::new();
        for threads in ["1", "3"] {
            let out = tmp.path().join(format!("{name}-{threads}"));
            let mut a = args.clone();
            a.extend(["--threads", threads, "--out", out.to_str().unwrap()]);
            pass &= run_cli(&a) == 0;
            runs.push(output_files(&out));
        }
        pass &= runs[0] == runs[1] && !runs[0].is_empty();
        checked.push(format!("{name} ({} files)", runs[0].len()));
    }
    outcome(pass, format!("threads 1 vs 3, identical outputs: {}", checked.join(", ")))
}

// C9 -------------------------------------------------------------------------

fn z_estimator_reduction() -> Outcome {
    let panel = DgpSpec::additive(1.0, 0.5, 1.0, 15, 11).generate(&mut rng::stream(9, rng::DATA, 0));
    let cfg = BootstrapConfig::default().with_replicates(499).with_seed(9);
    let boot = bootstrap_two_way(&panel, &cfg).unwrap();
    let g = |y: &[f64], th: &[f64]| vec![y[0] - th[0]];
    let problem = ZProblem::new(&g, vec![0.0]).with_jacobian(DMatrix::from_element(1, 1, -1.0));
    let z = bootstrap_zestimator(&panel, &problem, &cfg).unwrap();
    let same = z.deviations.iter().zip(&boot.replicate_means).filter(|(d, m)| d[0] == *m - boot.mean).count();
    outcome(same == boot.replicates(), format!("{same} of {} deviations bitwise equal", boot.replicates()))
}

// C10 ------------------------------------------------------------------------

fn coverage_masked_unbalanced() -> Outcome {
    let boot = BootstrapConfig::default().with_replicates(199).with_seed(10);
    let mc = McConfig::new(1000, boot);
    let masked = coverage(&DgpSpec::additive(1.0, 1.0, 1.0, 50, 50), Layout::Masked { keep: 0.7 }, Method::Piv, &mc).unwrap();
    let unbalanced = coverage(
        &DgpSpec::additive(1.0, 1.0, 1.0, 40, 40),
        Layout::Unbalanced { max_units: 4, unit_var: 1.0 },
        Method::Piv,
        &mc,
    )
    .unwrap();
    outcome(
        masked.value >= 0.90 && unbalanced.value >= 0.90,
        format!(
            "PIV 95% coverage, S=1000: masked 50x50 keep 0.7 {:.3}, unbalanced 40x40 R in 1..4 {:.3}",
            masked.value, unbalanced.value
        ),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome, Option<f64>); 10] = [
        ("C1", "wild-weight exactness", wild_weights, Some(1.0)),
        ("C2", "decomposition oracles", decompositions, Some(10.0)),
        ("C3", "variance unbiasedness", unbiasedness, Some(120.0)),
        ("C4", "Table 1 Design 1 FRR", table1_design1, None),
        ("C5", "Table 1 Design 2 FRR", table1_design2, None),
        ("C6", "Table 3 Design 2 FRR", table3_design2, None),
        ("C7", "non-Gaussian limit", non_gaussian_limit, None),
        ("C8", "thread determinism", determinism, None),
        ("C9", "Z-estimator reduction", z_estimator_reduction, None),
        ("C10", "masked/unbalanced coverage", coverage_masked_unbalanced, Some(1200.0)),
    ];
    let only: Option<String> = std::env::args().skip(1).find(|a| a.starts_with('C'));
    let mut failed = 0;
    let mut documented = 0;
    for (id, name, run, budget) in criteria {
        if only.as_deref().is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let mut o = run();
        let secs = start.elapsed().as_secs_f64();
        if let Some(limit) = budget {
            if secs > limit {
                o.pass = false;
                o.detail.push_str(&format!("; over the {limit} s budget"));
            }
        }
        let status = match (o.pass, o.documented) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented deviation)",
            (false, false) => "FAIL",
        };
        if !o.pass {
            if o.documented {
                documented += 1;
            } else {
                failed += 1;
            }
        }
        println!("{id:<4}{status} {name}: {} [{secs:.1} s]", o.detail);
    }
    if documented > 0 {
        println!("{documented} criteria fail with documented deviations");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
