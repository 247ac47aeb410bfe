//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use orlicz::chaining::sufficient_m;
use orlicz::config::{trig_of_dim, ExperimentConfig};
use orlicz::density::{
    change_of_density, kw_measure, l2_certificates, l2_one_sided, lewis_basis, one_sided_pipeline, one_sided_weights,
    L2OneSidedConfig, PipelineConfig,
};
use orlicz::discretization::monte_carlo_success;
use orlicz::norm::{lp_norm, luxemburg_norm};
use orlicz::optimize::AscentOptions;
use orlicz::phi::{
    check_classification, envelope_function, estimate_indices, lipschitz_ratio, log_grid, r_constant, scaling_law_ratio,
};
use orlicz::recovery::{
    domination_constant, recovery_error_check, sampling_number_experiment, BoundForm, ExperimentSettings,
    RecoveryInstance,
};
use orlicz::runner::execute;
use orlicz::subspace::{make_monomial_space, Subspace};
use orlicz::{DiscreteMeasure, PhiFunction, SampledFunction};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    out.detail = format!("{} [{:.2}s]", out.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            out.passed = false;
            out.detail = format!("{} exceeds {:.0}s", out.detail, limit.as_secs_f64());
        }
    }
    out
}

fn random_measure(n: usize, rng: &mut ChaCha8Rng) -> DiscreteMeasure {
    let points = (0..n).map(|j| vec![j as f64]).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    DiscreteMeasure::new(points, w.iter().map(|x| x / total).collect()).unwrap()
}

fn random_function(n: usize, rng: &mut ChaCha8Rng) -> SampledFunction {
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    SampledFunction::new(
        (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * scale
            })
            .collect(),
    )
}

fn luxemburg_vs_lp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for p in [1.0, 1.5, 2.0, 3.0] {
        let phi = PhiFunction::power(p).unwrap();
        for _ in 0..1000 {
            let nu = random_measure(64, &mut rng);
            let f = random_function(64, &mut rng);
            let lux = luxemburg_norm(&phi, &f, &nu, 1e-13).unwrap();
            let lp = lp_norm(&f, &nu, p).unwrap();
            worst = worst.max((lux - lp).abs() / lp);
        }
    }
    outcome(worst <= 1e-8, format!("worst relative gap {worst:.2e} (limit 1e-8)"))
}

fn phi_calculus() -> Outcome {
    let grid = log_grid(1e-6, 1e6, 1000);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pairs: Vec<(f64, f64)> = (0..1000)
        .map(|_| (grid[rng.random_range(0..grid.len())], grid[rng.random_range(0..grid.len())]))
        .collect();
    let t_grid = log_grid(1e-6, 1e6, 25);
    let lambdas = log_grid(1.0, 1e6, 40);
    let mut failures = Vec::new();
    let (mut worst_lip, mut worst_scale, mut worst_dom) = (0.0f64, 0.0f64, 0.0f64);
    for p in [1.0, 2.0, 3.0] {
        for alpha in [0.0, 0.5, 1.0] {
            for beta in [0.0, 0.5, 1.0] {
                let phi = PhiFunction::pab(p, alpha, beta).unwrap();
                let est = estimate_indices(&phi, &grid).unwrap();
                if est.p_hat < p - 1e-6 || est.q_hat > p + alpha + beta + 1e-6 {
                    failures.push(format!("indices ({p},{alpha},{beta}) = ({}, {})", est.p_hat, est.q_hat));
                }
                if !check_classification(&phi, &grid).passed {
                    failures.push(format!("classification ({p},{alpha},{beta})"));
                }
                worst_lip = worst_lip.max(lipschitz_ratio(&phi, &pairs));
                worst_scale = worst_scale.max(scaling_law_ratio(&phi, &t_grid, &lambdas));
                let r = r_constant(&phi, p).unwrap();
                for _ in 0..1000 {
                    let n = rng.random_range(4..32);
                    let nu = random_measure(n, &mut rng);
                    let f = random_function(n, &mut rng);
                    let lux = luxemburg_norm(&phi, &f, &nu, 1e-13).unwrap();
                    worst_dom = worst_dom.max(lp_norm(&f, &nu, p).unwrap() / (r * lux));
                }
            }
        }
    }
    let ok = failures.is_empty() && worst_lip <= 1.0 + 1e-10 && worst_scale <= 1.0 + 1e-10 && worst_dom <= 1.0 + 1e-8;
    outcome(
        ok,
        format!(
            "27 generators; lipschitz ratio {worst_lip:.6}, scaling ratio {worst_scale:.6}, L^p/(R·Luxemburg) {worst_dom:.6}; {} index/classification failures {:?}",
            failures.len(),
            failures
        ),
    )
}

fn nikolskii() -> Outcome {
    let grid = DiscreteMeasure::torus_grid(64, 1).unwrap();
    let mut worst = 0.0f64;
    for n in [3, 5, 9, 17] {
        let x = trig_of_dim(n, &grid).unwrap();
        worst = worst.max((x.nikolskii_constant() - (n as f64).sqrt()).abs());
    }
    outcome(worst <= 1e-8, format!("worst |H - sqrt|Q|| = {worst:.2e}"))
}

fn random_subspace(rng: &mut ChaCha8Rng) -> (Subspace, DiscreteMeasure) {
    let g = rng.random_range(16..=64);
    let n = rng.random_range(2..=6);
    let complex = rng.random_bool(0.5);
    let grid = DiscreteMeasure::interval_grid(g, 0.0, 1.0).unwrap();
    let values = DMatrix::from_fn(g, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
        Complex64::new(re, im)
    });
    let x = Subspace::from_values(values, grid.clone()).unwrap();
    let w: Vec<f64> = (0..g).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    let nu = DiscreteMeasure::new(grid.points().to_vec(), w.iter().map(|v| v / total).collect()).unwrap();
    (x, nu)
}

/// Lewis solves for criteria 4 and 5.
fn lewis_and_density() -> (Outcome, Outcome) {
    let square = PhiFunction::power(2.0).unwrap();
    let pab = PhiFunction::pab(2.0, 1.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let start = Instant::now();
    let (mut worst_sq, mut worst_res, mut sandwich_ok) = (0.0f64, 0.0f64, true);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut worst_orth, mut worst_christ) = (0.0f64, 0.0f64);
    let mut solves = 0;
    for _ in 0..10 {
        let (x, nu) = random_subspace(&mut rng);
        for (phi, is_square) in [(&square, true), (&pab, false)] {
            let sol = lewis_basis(phi, &x, &nu, 1e-10).unwrap();
            let (orth, norm) = sol.residuals(phi);
            worst_res = worst_res.max(orth).max(norm);
            let cn = sol.c_dim();
            if is_square {
                worst_sq = worst_sq.max((cn - 2.0).abs());
            } else {
                lo = lo.min(cn);
                hi = hi.max(cn);
                sandwich_ok &= cn >= 2.0 - 1e-6 && cn <= 3.0 + 1e-6;
            }
            let cod = change_of_density(phi, &sol).unwrap();
            worst_orth = worst_orth.max(cod.orthonormality_residual);
            worst_christ = worst_christ.max(cod.max_christoffel / sol.dim as f64 - 1.0);
            solves += 1;
        }
    }
    let took = start.elapsed().as_secs_f64();
    let lewis = outcome(
        worst_sq <= 1e-6 && worst_res <= 1e-6 && sandwich_ok && took < 60.0,
        format!(
            "|cN - 2| <= {worst_sq:.2e}, residuals <= {worst_res:.2e}, pab cN in [{lo:.4}, {hi:.4}] [{took:.2}s]"
        ),
    );
    let density = outcome(
        worst_orth <= 1e-6 && worst_christ <= 1e-8,
        format!("{solves} solves; orthonormality residual {worst_orth:.2e}, max Christoffel/N - 1 = {worst_christ:.2e}"),
    );
    (lewis, density)
}

fn kw_design() -> Outcome {
    let tol = 1e-3;
    let mut worst = 0.0f64;
    let mut trig_iters = 0usize;
    let mut cases = 0;
    for degree in [1, 3, 5, 9] {
        for g in [64, 512] {
            let grid = DiscreteMeasure::interval_grid(g, -1.0, 1.0).unwrap();
            let x = make_monomial_space(degree, &grid).unwrap();
            let d = kw_measure(&x, &grid, tol).unwrap();
            worst = worst.max(d.max_sigma / x.dim() as f64);
            cases += 1;
        }
    }
    for n in [3, 5, 9] {
        for g in [32, 512] {
            let grid = DiscreteMeasure::torus_grid(g, 1).unwrap();
            let x = trig_of_dim(n, &grid).unwrap();
            let d = kw_measure(&x, &grid, tol).unwrap();
            worst = worst.max(d.max_sigma / n as f64);
            trig_iters += d.iterations;
            cases += 1;
        }
    }
    outcome(
        worst <= 1.0 + tol && trig_iters == 0,
        format!("{cases} designs; max sigma/N = {worst:.6}; trig iterations {trig_iters}"),
    )
}

fn random_discretization() -> Outcome {
    let phi = PhiFunction::pab(2.0, 1.0, 0.0).unwrap();
    let grid = DiscreteMeasure::torus_grid(64, 1).unwrap();
    let opts = AscentOptions {
        restarts: 4,
        max_iter: 60,
        ..AscentOptions::default()
    };
    let (eps, trials) = (0.5, 50);
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [3usize, 5, 9] {
        let x = trig_of_dim(n, &grid).unwrap();
        let h = (n as f64).sqrt();
        let success = |m: usize| monte_carlo_success(&phi, &x, &grid, m, eps, trials, 7, &opts).unwrap();
        let mut sweep = Vec::new();
        let mut m = n;
        while m <= 8192 {
            let s = success(m);
            sweep.push((m, s));
            if s >= 0.95 && sweep.iter().rev().take(2).filter(|(_, s)| *s >= 0.95).count() == 2 {
                break;
            }
            m *= 2;
        }
        let monotone = sweep.windows(2).all(|w| w[1].1 >= w[0].1);
        let m_star = sweep.iter().find(|(_, s)| *s >= 0.95).map(|(m, _)| *m);
        // smallest C on a fine geometric grid whose formula count reaches m_star
        let fit = m_star.and_then(|m_star| {
            (-120..=40)
                .map(|k| 10f64.powf(k as f64 / 20.0))
                .find(|&c| sufficient_m(&phi, 2.0, n, h, eps, c).unwrap() >= m_star as u64)
        });
        let (c_fit, s_fit) = match fit {
            Some(c) => {
                let m_fit = sufficient_m(&phi, 2.0, n, h, eps, c).unwrap() as usize;
                (c, success(m_fit))
            }
            None => (f64::INFINITY, 0.0),
        };
        ok &= monotone && c_fit <= 100.0 && s_fit >= 0.95;
        let fmt: Vec<String> = sweep.iter().map(|(m, s)| format!("{m}:{s:.2}")).collect();
        parts.push(format!(
            "N={n} sweep [{}] monotone={monotone} C_user={c_fit:.3e} success={s_fit:.2}",
            fmt.join(" ")
        ));
    }
    outcome(ok, parts.join("; "))
}

fn one_sided() -> Outcome {
    let grid = DiscreteMeasure::torus_grid(64, 1).unwrap();
    let mut worst_check = 0.0f64;
    let mut worst_sum = 0.0f64;
    let mut runs = 0;
    let mut errors = Vec::new();
    for phi in [PhiFunction::pab(2.0, 1.0, 0.0).unwrap(), PhiFunction::power(3.0).unwrap()] {
        let psi = envelope_function(&phi, &log_grid(1e-6, 1e6, 121));
        for n in [3, 5] {
            let x = trig_of_dim(n, &grid).unwrap();
            for seed in 0..3 {
                let cfg = PipelineConfig {
                    seed,
                    ..PipelineConfig::default()
                };
                match one_sided_pipeline(&phi, &psi, &x, &grid, &cfg) {
                    Ok(r) => {
                        worst_check = worst_check.max(r.weight_check);
                        worst_sum = worst_sum.max((r.weights.iter().sum::<f64>() - 1.0).abs());
                        runs += 1;
                    }
                    Err(e) => errors.push(format!("{} N={n} seed={seed}: {e}", phi.label)),
                }
            }
        }
    }
    let mut uniform_exact = true;
    for phi in [PhiFunction::power(2.0).unwrap(), PhiFunction::pab(2.0, 1.0, 1.0).unwrap()] {
        for m in [1, 7, 32, 100] {
            let w = one_sided_weights(&phi, &vec![0.3; m], 2.0).unwrap();
            uniform_exact &= w.weights.iter().all(|&l| l == 1.0 / m as f64);
        }
    }
    outcome(
        errors.is_empty() && worst_check <= 1.0 && worst_sum <= 1e-10 && uniform_exact,
        format!(
            "{runs} pipeline runs; check value <= {worst_check:.4}, |sum - 1| <= {worst_sum:.1e}, uniform exact {uniform_exact}; errors {errors:?}"
        ),
    )
}

fn l2_one_sided_certificates() -> Outcome {
    let grid = DiscreteMeasure::torus_grid(64, 1).unwrap();
    let mut worst_repro = 0.0f64;
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [3, 5, 9] {
        let x = trig_of_dim(n, &grid).unwrap();
        let u = x.orthonormalize(&grid).unwrap().onb().clone();
        let (mut hits, mut first_draw) = (0, 0);
        for seed in 0..100 {
            // m stays at 2N; only the retry loop at that size is allowed
            let cfg = L2OneSidedConfig {
                c1: 2.0,
                c1_max: 2.0,
                seed,
                ..L2OneSidedConfig::default()
            };
            if let Ok(r) = l2_one_sided(&x, &grid, &cfg) {
                assert_eq!(r.m, 2 * n);
                let (cy, cz) = l2_certificates(&u, &r.y, &r.z);
                worst_repro = worst_repro.max((cy - r.c_y).abs()).max((cz - r.c_z).abs());
                if r.c2_hat <= 3.0 {
                    hits += 1;
                }
                if r.attempts == 1 {
                    first_draw += 1;
                }
            }
        }
        ok &= hits >= 95;
        parts.push(format!("N={n}: c2 <= 3 in {hits}/100 (first draw {first_draw}/100)"));
    }
    ok &= worst_repro <= 1e-10;
    outcome(ok, format!("{}; re-evaluation gap {worst_repro:.1e}", parts.join(", ")))
}

fn recovery_squares() -> Outcome {
    let sq = PhiFunction::power(2.0).unwrap();
    let grid = DiscreteMeasure::torus_grid(64, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let opts = AscentOptions::default();
    let mut worst = 0.0f64;
    let (mut violations, mut evaluated) = (0, 0);
    for i in 0..100 {
        let n = [3, 5, 9][i % 3];
        let x = trig_of_dim(n, &grid).unwrap();
        let m = rng.random_range(2 * n..=6 * n);
        let samples: Vec<usize> = (0..m).map(|_| rng.random_range(0..64)).collect();
        let target = SampledFunction::new((0..64).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect());
        let inst = RecoveryInstance::new(target, x.clone(), samples, vec![1.0 / m as f64; m], sq.clone(), sq.clone()).unwrap();
        let nu = inst.nu().unwrap();
        let d = domination_constant(&sq, &sq, &x, &grid, &nu, &opts, &mut rng).unwrap();
        if !d.is_finite() {
            continue;
        }
        let r = recovery_error_check(&inst, &grid, d, 1.0, 1.0, 1e-10).unwrap();
        evaluated += 1;
        let rel = r.ratio / r.constant;
        worst = worst.max(rel);
        if rel > 1.0 + 1e-4 {
            violations += 1;
        }
    }
    outcome(
        violations == 0 && evaluated == 100,
        format!("{evaluated}/100 instances with finite D; max ratio/constant {worst:.4}, {violations} violations"),
    )
}

fn recovery_bench() -> Outcome {
    let grid = DiscreteMeasure::torus_grid(256, 1).unwrap();
    let fset = orlicz::recovery::fourier_family(&grid, 6, 0.7, 64, 11).unwrap();
    let spaces: Vec<Subspace> = [3, 5, 9, 17].iter().map(|&n| trig_of_dim(n, &grid).unwrap()).collect();
    let settings = ExperimentSettings {
        bound: BoundForm::LogPower,
        seed: 5,
        ..ExperimentSettings::default()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 1.0] {
        let phi = PhiFunction::pab(2.0, alpha, 0.0).unwrap();
        let rows = sampling_number_experiment(&fset, &grid, &phi, 2.0, &spaces, &settings).unwrap();
        let fitted: Vec<f64> = rows.iter().map(|r| r.fitted_c).collect();
        let hi = fitted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = fitted.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread = hi / lo;
        ok &= spread <= 2.0 && lo > 0.0;
        let cs: Vec<String> = fitted.iter().map(|c| format!("{c:.3}")).collect();
        parts.push(format!("alpha={alpha}: fitted C [{}] spread x{spread:.3}", cs.join(", ")));
    }
    outcome(ok, parts.join("; "))
}

const BENCH_CONFIG: &str = r#"{
    "name": "determinism",
    "task": {"bench": {
        "phi": {"family": "pab", "p": 2, "alpha": 1, "beta": 0},
        "n_list": [3, 5, 9, 17],
        "measure": {"kind": "torus_grid", "n": 256},
        "functions": {"kind": "fourier", "count": 6, "decay": 0.7, "max_freq": 64, "seed": 11},
        "settings": {"bound": "log_power", "seed": 5}
    }}
}"#;

fn determinism() -> Outcome {
    let cfg = ExperimentConfig::from_json_str(BENCH_CONFIG).unwrap();
    let body = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let out = pool.install(|| execute(&cfg, Path::new("."))).unwrap();
        out.artifacts.into_iter().find(|a| a.name == "bench.csv").unwrap().content
    };
    let (a, b) = (body(1), body(3));
    outcome(a == b && !a.is_empty(), format!("{} bytes, identical={}", a.len(), a == b))
}

fn main() {
    // numeric arguments select criteria; other libtest flags are ignored
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |k: u32| only.is_empty() || only.contains(&k);
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |k: u32, o: Outcome| {
        println!("criterion {k:>2}: {} {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((k, o));
    };
    if wanted(1) {
        report(1, timed(Some(Duration::from_secs(5)), luxemburg_vs_lp));
    }
    if wanted(2) {
        report(2, timed(Some(Duration::from_secs(10)), phi_calculus));
    }
    if wanted(3) {
        report(3, timed(None, nikolskii));
    }
    if wanted(4) || wanted(5) {
        let (c4, c5) = lewis_and_density();
        report(4, c4);
        report(5, c5);
    }
    if wanted(6) {
        report(6, timed(None, kw_design));
    }
    if wanted(7) {
        report(7, timed(Some(Duration::from_secs(600)), random_discretization));
    }
    if wanted(8) {
        report(8, timed(None, one_sided));
    }
    if wanted(9) {
        report(9, timed(None, l2_one_sided_certificates));
    }
    if wanted(10) {
        let c10 = timed(Some(Duration::from_secs(300)), || {
            let a = recovery_squares();
            let b = recovery_bench();
            outcome(a.passed && b.passed, format!("squares: {}; bench: {}", a.detail, b.detail))
        });
        report(10, c10);
    }
    if wanted(11) {
        report(11, timed(None, determinism));
    }
    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.passed).map(|(k, _)| *k).collect();
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
