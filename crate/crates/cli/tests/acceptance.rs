//! End-to-end acceptance checks. Each test prints one line of the form
//! `criterion N: PASS|FAIL <detail>` and then asserts the verdict.

use std::process::Command;

use psml::analytic::{
    admissible_eps_mon, hlc_min_len_half_recall, phi_point, pma_fpr_estimate, precision, recall, uncertainty_ratio,
};
use psml::metrics::{
    self, default_warmup, fpr_equal, fpr_experiment, half_recall_crossing, hlc_recall_curve, partial_predicate_table,
    pooled_fpr, pr_diagram, presets, run_parallel, FprResult, PrMode,
};
use psml::monitors::{detect_async, detect_partialsync, detect_quasi};
use psml::oracle::{small_config, EventGraph, Reference};
use psml::simkernel::{generate, Correlation, IntervalModel, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

fn verdict(id: u32, pass: bool, detail: impl AsRef<str>) {
    println!("criterion {id}: {} {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(pass, "criterion {id} failed: {}", detail.as_ref());
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

/// Pooled FPR at `eps` over `seeds` replicates of `cfg`.
fn pooled(cfg: &SimConfig, seeds: usize) -> Vec<FprResult> {
    let runs: Vec<SimConfig> =
        (0..seeds).map(|r| SimConfig { seed: metrics::replicate_seed(cfg.seed, r), ..cfg.clone() }).collect();
    run_parallel(&runs, jobs(), |c| fpr_experiment(c, default_warmup(c.horizon), c.epsilon_app)).unwrap()
}

fn sparse(n: usize, beta: f64, eps: u64) -> SimConfig {
    SimConfig {
        n,
        beta,
        epsilon_app: eps,
        alpha: presets::ALPHA,
        delta: presets::DELTA,
        horizon: presets::HORIZON,
        interval: IntervalModel::Point,
        ..SimConfig::default()
    }
}

#[test]
fn criterion_01_phi_matches_monte_carlo() {
    const SAMPLES: usize = 1_000_000;
    let mut cells = Vec::new();
    for n in [2usize, 5, 20, 50] {
        for beta in [0.01, 0.05, 0.3] {
            cells.push((n, beta));
        }
    }
    // Geometric here counts failures, so a draw of k failures is a gap of
    // k + 1 ticks; phi(eps) is the chance that all n - 1 gaps fit in eps.
    let results = run_parallel(&cells, jobs(), |&(n, beta)| {
        let geo = Geometric::new(beta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 * n as u64 + (beta * 100.0) as u64);
        let mut hits = [0usize; 4];
        let eps = [1u64, 10, 100, 1000];
        for _ in 0..SAMPLES {
            let max = (0..n - 1).map(|_| geo.sample(&mut rng) + 1).max().unwrap();
            for (h, &e) in hits.iter_mut().zip(&eps) {
                *h += usize::from(max <= e);
            }
        }
        let mut worst: f64 = 0.0;
        for (h, &e) in hits.iter().zip(&eps) {
            let p = phi_point(e as f64, n, beta).unwrap();
            let se = (p * (1.0 - p) / SAMPLES as f64).sqrt();
            let diff = (*h as f64 / SAMPLES as f64 - p).abs();
            let z = if se > 0.0 {
                diff / se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
        Ok::<_, metrics::MetricsError>(worst)
    })
    .unwrap();
    let worst = results.iter().cloned().fold(0.0, f64::max);
    verdict(1, worst <= 3.0, format!("{} cells, largest deviation {worst:.2} standard errors", cells.len() * 4));
}

#[test]
fn criterion_02_published_fpr_values() {
    let cells = [(20usize, 0.01, 0.935, 0.05), (5, 0.01, 0.437, 0.05), (20, 0.03, 0.047, 0.04)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (n, beta, target, tol) in cells {
        let fpr = pooled_fpr(&pooled(&sparse(n, beta, 200), 5)).unwrap();
        ok &= (fpr - target).abs() <= tol;
        detail.push(format!("n={n} beta={beta}: {fpr:.4} (want {target}±{tol})"));
    }
    let fpr = pooled_fpr(&pooled(&sparse(20, 0.05, 200), 5)).unwrap();
    ok &= fpr <= 0.02;
    detail.push(format!("n=20 beta=0.05: {fpr:.4} (want <= 0.02)"));
    verdict(2, ok, detail.join("; "));
}

#[test]
fn criterion_03_alpha_delta_independence() {
    let combos = [(0.05, 10u64), (0.05, 100), (0.1, 10), (0.1, 100)];
    let mut ok = true;
    let mut worst = (0.0f64, 0u64);
    for eps in [10u64, 20, 30, 40, 50] {
        let per: Vec<Vec<FprResult>> = combos
            .iter()
            .map(|&(alpha, delta)| pooled(&SimConfig { alpha, delta, ..sparse(20, 0.1, eps) }, 5))
            .collect();
        for a in 0..per.len() {
            for b in a + 1..per.len() {
                ok &= fpr_equal(&per[a], &per[b], 0.03);
                let d = (pooled_fpr(&per[a]).unwrap() - pooled_fpr(&per[b]).unwrap()).abs();
                if d > worst.0 {
                    worst = (d, eps);
                }
            }
        }
    }
    verdict(3, ok, format!("largest pairwise FPR difference {:.4} at eps={}", worst.0, worst.1));
}

#[test]
fn criterion_04_uncertainty_ratio() {
    let vals: Vec<f64> = [0.001, 0.05, 0.5].iter().map(|&b| uncertainty_ratio(100, b).unwrap()).collect();
    let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
    let near = vals.iter().all(|v| (v - 0.52).abs() <= 0.01);
    let limit = uncertainty_ratio(1_000_000, 0.01).unwrap();
    verdict(
        4,
        near && spread <= 1e-9 && limit < 0.01,
        format!("ratio(100) = {:.6} (spread {spread:.1e}); ratio(10^6) = {limit:.6} (want < 0.01)", vals[0]),
    );
}

#[test]
fn criterion_05_bound_round_trip() {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for n in [3usize, 5, 20, 50] {
        for beta in [0.01, 0.05, 0.2] {
            for ell in [1.0, 3.0, 10.0] {
                for eps_app in [5.0, 50.0, 200.0, 1000.0] {
                    for eta in [0.5, 0.8, 0.95, 0.99] {
                        let b = admissible_eps_mon(eps_app, n, beta, ell, eta).unwrap();
                        if !b.lo_clamped {
                            worst = worst.max((recall(b.lo, eps_app, n, beta, ell).unwrap() - eta).abs());
                            checked += 1;
                        }
                        if !b.unbounded_hi {
                            worst = worst.max((precision(b.hi, eps_app, n, beta, ell).unwrap() - eta).abs());
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    verdict(5, worst <= 1e-9, format!("{checked} endpoints, largest |value - eta| = {worst:.2e}"));
}

#[test]
fn criterion_06_simulated_pr_matches_closed_form() {
    let spec = presets::pr_diagram_n20();
    let sim = pr_diagram(&spec, PrMode::Simulated, jobs()).unwrap();
    let ana = pr_diagram(&spec, PrMode::Analytic, 1).unwrap();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (s, a) in sim.iter().zip(&ana) {
        for (x, y) in [(s.precision, a.precision), (s.recall, a.recall)] {
            match (x, y) {
                (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
                _ => ok = false,
            }
        }
    }
    verdict(6, ok && worst <= 0.05, format!("{} grid points, largest deviation {worst:.4}", sim.len()));
}

#[test]
fn criterion_07_band_width_monotone() {
    let mut ok = true;
    let mut detail = String::new();
    for n in [3usize, 10, 20, 50] {
        for beta in [0.01, 0.05, 0.2] {
            for ell in [1.0, 5.0] {
                let mut prev = -1.0;
                for k in 0..=400 {
                    let eps_app = k as f64 * 2.5;
                    let b = admissible_eps_mon(eps_app, n, beta, ell, 0.95).unwrap();
                    let width = if b.empty {
                        0.0
                    } else if b.unbounded_hi {
                        f64::INFINITY
                    } else {
                        b.hi - b.lo
                    };
                    if width < prev - 1e-9 {
                        ok = false;
                        detail = format!("n={n} beta={beta} ell={ell}: width falls to {width} at eps_app={eps_app}");
                    }
                    prev = width;
                }
            }
        }
    }
    if ok {
        detail = "24 parameter sets, eps_app in [0, 1000]".into();
    }
    verdict(7, ok, detail);
}

#[test]
fn criterion_08_hlc_recall() {
    let preset = presets::fig_hlc();
    let cfg = &preset.config;
    let rows = hlc_recall_curve(cfg, default_warmup(cfg.horizon), &preset.ell, preset.replicates, jobs()).unwrap();
    let worst = rows.iter().map(|r| (r.recall_sim.unwrap() - r.recall_analytic.unwrap()).abs()).fold(0.0, f64::max);
    let eps = cfg.epsilon_app as f64;
    let formula = hlc_min_len_half_recall(eps, cfg.n, cfg.beta).unwrap();
    let crossing = half_recall_crossing(&rows, true).unwrap_or(f64::NAN);
    let ok =
        worst <= 0.05 && (crossing - formula).abs() <= 0.2 * formula && (formula - 2.0 * eps).abs() <= 0.2 * 2.0 * eps;
    verdict(
        8,
        ok,
        format!(
            "largest recall deviation {worst:.4}; simulated 0.5-crossing {crossing:.2}, formula {formula:.2}, 2*eps {}",
            2.0 * eps
        ),
    );
}

#[test]
fn criterion_09_partial_predicates() {
    let preset = presets::table_partial();
    let cfg = &preset.config;
    let ps = [2usize, 3, 4, 5];
    let rows = partial_predicate_table(cfg, default_warmup(cfg.horizon), &ps, preset.replicates, jobs()).unwrap();
    let fr: Vec<f64> = rows.iter().map(|r| r.fraction.unwrap()).collect();
    let close = fr.iter().zip(presets::TABLE_PARTIAL_TARGET).all(|(f, t)| (f - t).abs() <= 0.08);
    let monotone = fr.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = fr.iter().map(|f| format!("{f:.3}")).collect();
    verdict(9, close && monotone, format!("fractions for p=2..5: {} (want 0.79/0.68/0.60/0.42)", shown.join("/")));
}

#[test]
fn criterion_10_correlation_models() {
    let (n, beta) = (20usize, 0.1);
    let models =
        [("PMA", Correlation::Pma { g1: 10, p_dep: 0.5 }), ("HNMA", Correlation::Hnma), ("PMAJ", Correlation::Pmaj)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, correlation) in models {
        let mut worst: f64 = 0.0;
        for eps in [5u64, 10, 20, 30, 50, 80, 120] {
            let fpr = pooled_fpr(&pooled(&SimConfig { correlation, ..sparse(n, beta, eps) }, 2)).unwrap();
            let e = eps as f64;
            let est = match correlation {
                Correlation::Pma { g1, p_dep } => pma_fpr_estimate(e, n - g1, beta, 1.0 - p_dep).unwrap(),
                Correlation::Hnma => 1.0 - phi_point(e, n / 2, beta).unwrap(),
                _ => 1.0 - phi_point(e, n / 4, beta / 2.0).unwrap(),
            };
            worst = worst.max((fpr - est).abs());
        }
        ok &= worst <= 0.10;
        detail.push(format!("{name} largest deviation {worst:.3}"));
    }
    verdict(10, ok, detail.join("; "));
}

#[test]
fn criterion_11_exhaustive_monitor_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = Vec::new();
    let mut cuts = 0;
    for t in 0..200 {
        let cfg = small_config(&mut rng);
        let trace = generate(&cfg).unwrap();
        let graph = EventGraph::build(&trace);
        let procs: Vec<usize> = (0..cfg.n).collect();
        let reference = Reference::new(&trace, &graph, &procs);
        let got = detect_async(&trace, &procs);
        cuts += got.len();
        if got != reference.asynchronous(&trace, &procs) {
            mismatches.push(format!("trace {t} async"));
        }
        for eps in [0, 3, cfg.epsilon_app, 30] {
            if detect_partialsync(&trace, &procs, eps) != reference.partially_synchronous(&trace, &procs, eps) {
                mismatches.push(format!("trace {t} eps={eps}"));
            }
        }
        if detect_quasi(&trace, &procs) != reference.quasi(&trace, &procs) {
            mismatches.push(format!("trace {t} quasi"));
        }
    }
    verdict(11, mismatches.is_empty(), format!("200 traces, {cuts} asynchronous cuts, mismatches: {:?}", mismatches));
}

fn psml(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_psml")).args(args).env_remove("PSML_SEED").output().unwrap();
    assert!(out.status.success(), "psml {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn criterion_12_cli_determinism() {
    let commands: &[&[&str]] = &[
        &["analytic", "phi", "--eps", "200", "--n", "20", "--beta", "0.01"],
        &["analytic", "inflection", "--n", "50", "--beta", "0.001"],
        &["analytic", "pr", "--eps-mon", "40,80", "--eps-app", "60", "--n", "10", "--beta", "0.1"],
        &["analytic", "bound", "--eps-app", "60", "--n", "10", "--beta", "0.1"],
        &["analytic", "phase", "--n", "10", "--beta", "0.1"],
        &["analytic", "hlc-recall", "--eps-app", "10", "--n", "3", "--beta", "0.01", "--ell", "5,20"],
        &["analytic", "hlc-minlen", "--eps-app", "10", "--n", "3", "--beta", "0.01"],
        &["analytic", "pma-est", "--eps", "20", "--g2", "10", "--beta", "0.1"],
        &["tune", "--eps-app", "50", "--n", "20", "--beta", "0.05"],
        &["simulate", "--n", "5", "--horizon", "3000", "--seed", "7", "--replicates", "2"],
        &[
            "sweep",
            "--n",
            "4",
            "--beta",
            "0.05,0.1",
            "--eps-app",
            "10,30",
            "--horizon",
            "2000",
            "--replicates",
            "2",
            "--seed",
            "3",
            "--jobs",
            "2",
        ],
        &[
            "prdiagram",
            "--mode",
            "simulated",
            "--eps-mon",
            "20,40",
            "--eps-app",
            "30",
            "--horizon",
            "3000",
            "--seed",
            "5",
        ],
        &["partial", "--horizon", "5000", "--replicates", "2", "--seed", "9"],
        &["hlc-curve", "--ell", "5,20", "--horizon", "5000", "--replicates", "2", "--seed", "4"],
        &["trace", "export", "--n", "3", "--horizon", "100", "--seed", "11"],
        &["simulate", "--n", "3", "--horizon", "2000", "--format", "structured", "--seed", "2"],
    ];
    let mut differing = Vec::new();
    for args in commands {
        if psml(args) != psml(args) {
            differing.push(args.join(" "));
        }
    }
    let sweep = ["sweep", "--n", "4", "--eps-app", "10,30", "--beta", "0.05", "--horizon", "2000", "--replicates", "3"];
    let serial = psml(&[&sweep[..], &["--jobs", "1"]].concat());
    let parallel = psml(&[&sweep[..], &["--jobs", "4"]].concat());
    if serial != parallel {
        differing.push("sweep --jobs 1 vs --jobs 4".into());
    }
    verdict(
        12,
        differing.is_empty(),
        format!("{} commands run twice, {} differ {:?}", commands.len() + 1, differing.len(), differing),
    );
}
