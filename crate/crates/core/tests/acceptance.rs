//! Acceptance run: one PASS/FAIL line per criterion, with the measured
//! values and wall-clock time against the budget.

mod support;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use stepbayes::asymptotics::{beginning_zone_check, middle_zone_scan, psi_estimate, psi_piecewise_check, PsiMethod};
use stepbayes::entropy::{entropy_functional, shannon};
use stepbayes::io::load_dataset;
use stepbayes::kernel::log_beta;
use stepbayes::model::{integral, l2_squared, sample_dataset, sample_poisson_dataset_with, GridFunction};
use stepbayes::predictive::{exact_log_z_m, exact_log_z_star, mc_log_z_m, model_posterior, series_log_z_m, ZSource};
use stepbayes::rng::{derive_seed, replicate_seed, rng_from_seed};
use stepbayes::sampler::{median, posterior_fit, posterior_l1_samples, run_chain_with, ChainSettings};
use stepbayes::urn::{exact_relative_entropy_term, relative_entropy_terms};
use stepbayes::{DataSet, HierarchyPrior, StepFunction};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn random_dataset(n: usize, rng: &mut ChaCha8Rng) -> DataSet {
    let points: Vec<(f64, bool)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<bool>())).collect();
    DataSet::from_points(&points).unwrap()
}

fn two_level() -> StepFunction {
    StepFunction::two_level(0.2, 0.8, 0.5).unwrap()
}

fn exact_fixtures() -> Outcome {
    let one = exact_log_z_m(&load_dataset(fixture("one_point.csv")).unwrap(), 1).unwrap().ln();
    let two = exact_log_z_m(&load_dataset(fixture("two_point.csv")).unwrap(), 1).unwrap().ln();
    let e1 = (one - 0.5f64.ln()).abs();
    let e2 = (two - (7.0f64 / 36.0).ln()).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(0..=12);
        let d = random_dataset(n, &mut rng);
        let lz = exact_log_z_m(&d, 0).unwrap().ln();
        worst = worst.max((lz - log_beta(d.n_success(), d.n_failure())).abs());
    }
    outcome(
        e1 < 1e-10 && e2 < 1e-10 && worst < 1e-10,
        format!("|err| one-point {e1:.1e}, two-point {e2:.1e}, m=0 worst {worst:.1e}"),
    )
}

fn mc_vs_exact() -> Outcome {
    let hits: usize = (0..50usize)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(replicate_seed(2, i));
            let n = rng.random_range(1..=10);
            let m = rng.random_range(1..=4);
            let d = random_dataset(n, &mut rng);
            let exact = exact_log_z_m(&d, m).unwrap().ln();
            let mc = mc_log_z_m(&d, m, 100_000, replicate_seed(3, i)).unwrap();
            usize::from((mc.estimate.ln() - exact).abs() <= 3.0 * mc.std_error)
        })
        .sum();
    outcome(hits >= 47, format!("{hits}/50 within 3 SE"))
}

fn sampler_exactness() -> Outcome {
    let nu = HierarchyPrior::geometric(0.5).unwrap().truncated(6).unwrap();
    let settings = ChainSettings { n_iters: 1_000_000, burn_in: 10_000, thin: 1, ..ChainSettings::default() };
    let tvs: Vec<f64> = (0..5usize)
        .into_par_iter()
        .map(|i| {
            let d = random_dataset(6, &mut rng_from_seed(replicate_seed(4, i)));
            let exact = model_posterior(&d, &nu, 6, ZSource::Exact).unwrap().probs;
            let mut counts = [0.0; 7];
            run_chain_with(&d, &nu, &settings, replicate_seed(5, i), |s| counts[s.m()] += 1.0).unwrap();
            let total: f64 = counts.iter().sum();
            0.5 * counts.iter().zip(&exact).map(|(c, p)| (c / total - p).abs()).sum::<f64>()
        })
        .collect();
    let worst = tvs.iter().copied().fold(0.0, f64::max);
    outcome(worst < 0.02, format!("max TV {worst:.4} over 5 datasets"))
}

fn middle_zone() -> Outcome {
    let f = two_level();
    let reference = -0.500402;
    let scan = middle_zone_scan(&f, 4000, &[40], 2000, 6).unwrap();
    let row = scan.rows[0];
    let data = sample_dataset(&f, 4000, derive_seed(6, stepbayes::rng::tag::DATA));
    let exact = series_log_z_m(&data, 40).ln() / 4000.0;
    let err = (row.estimate - reference).abs();
    outcome(
        err < 0.05,
        format!(
            "estimate {:.5} (se {:.1e}), exact on same data {exact:.5}, -H(f) {:.6}, |diff| {err:.4}",
            row.estimate,
            row.std_error,
            -entropy_functional(&f)
        ),
    )
}

fn beginning_zone() -> Outcome {
    let f = GridFunction::smooth_example();
    let rep = beginning_zone_check(&f, 2, 4000, 10, 7).unwrap();
    let bound = rep.reference - 0.02;
    let upper = rep.max_estimate + 3.0 * rep.std_error;
    outcome(
        upper < bound,
        format!("max estimate {:.5} + 3se = {upper:.5} vs -H(f) - 0.02 = {bound:.5}", rep.max_estimate),
    )
}

fn end_zone_gap() -> Outcome {
    let h = shannon(0.8);
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [0.5, 1.0, 2.0] {
        let est = psi_estimate(0.8, alpha, 2000, 20, PsiMethod::Exact, 8).unwrap();
        let upper = est.estimate + h + 3.0 * est.std_error;
        pass &= upper < 0.0;
        parts.push(format!("alpha {alpha}: psi+H {:.4} (+3se {upper:.4})", est.estimate + h));
    }
    outcome(pass, parts.join("; "))
}

fn deep_end_zone() -> Outcome {
    let n = 2000.0;
    let alpha = 20.0;
    let ln2 = 2f64.ln();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.5, 0.8] {
        let f = StepFunction::constant(p).unwrap();
        let pairs: Vec<(f64, f64)> = (0..10usize)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_from_seed(replicate_seed(9, i));
                let d = sample_poisson_dataset_with(&f, n, &mut rng);
                let z = exact_log_z_star(&d, alpha * n).unwrap().ln() / n;
                let ones = exact_log_z_star(&d.with_responses(true), alpha * n).unwrap().ln() / n;
                (z, ones)
            })
            .collect();
        let mean = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
        let mean_ones = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
        let shift = pairs.iter().map(|p| (p.0 - p.1).abs()).fold(0.0, f64::max);
        pass &= (mean + ln2).abs() < 0.1 && (mean_ones + ln2).abs() < 0.1;
        parts.push(format!("p {p}: {mean:.4}, all-ones {mean_ones:.4}, max |diff| {shift:.4}"));
    }
    outcome(pass, format!("{} (-log 2 = {:.4})", parts.join("; "), -ln2))
}

fn piecewise() -> Outcome {
    let rep = psi_piecewise_check(0.2, 0.8, 0.5, 1.0, 2000, 20, PsiMethod::Exact, 10).unwrap();
    let sigma = rep.difference_se();
    outcome(
        rep.difference().abs() < 3.0 * sigma,
        format!(
            "direct {:.5}, combined {:.5}, diff {:.5}, 3 sigma {:.5}",
            rep.direct.estimate,
            rep.combined,
            rep.difference(),
            3.0 * sigma
        ),
    )
}

fn theorem_one() -> Outcome {
    let f = two_level();
    let nu = HierarchyPrior::geometric(0.5).unwrap();
    let settings = ChainSettings::default();
    let medians: Vec<f64> = [128usize, 1024, 4096]
        .par_iter()
        .map(|&n| {
            let d = sample_dataset(&f, n, 11 + n as u64);
            median(&posterior_l1_samples(&d, &nu, &f, &settings, 12).unwrap())
        })
        .collect();
    let pass = medians.windows(2).all(|w| w[1] < w[0]) && medians[2] < 0.1;
    outcome(pass, format!("median L1 at n = 128, 1024, 4096: {:.4}, {:.4}, {:.4}", medians[0], medians[1], medians[2]))
}

fn figure_one() -> Outcome {
    let data = load_dataset(fixture("smooth_1024.csv")).unwrap();
    let f = GridFunction::smooth_example();
    let nu = HierarchyPrior::geometric(0.5).unwrap();
    let fit = posterior_fit(&data, &nu, &ChainSettings::default(), 1024, 13).unwrap();
    let ise = l2_squared(&fit.mean, &f);
    let best = integral(&f, 0.0, 1.0);
    let constant_ise = l2_squared(&GridFunction::new(vec![best, best]).unwrap(), &f);
    outcome(ise < constant_ise, format!("posterior mean ISE {ise:.5} vs best constant {constant_ise:.5}"))
}

fn urn_inequality() -> Outcome {
    let terms = relative_entropy_terms(0.8, 0.5, &[5, 10, 20], 100_000, 14).unwrap();
    let all_negative = terms.iter().all(|t| t.mean + 3.0 * t.std_error < 0.0);
    let max_mean = terms.iter().map(|t| t.mean).fold(f64::NEG_INFINITY, f64::max);
    let parts: Vec<String> = terms
        .iter()
        .map(|t| {
            let exact = exact_relative_entropy_term(0.8, 0.5, t.k).unwrap();
            format!("k {}: {:.5} (se {:.1e}, exact {exact:.5})", t.k, t.mean, t.std_error)
        })
        .collect();
    outcome(all_negative && max_mean < -0.001, parts.join("; "))
}

fn property_suites() -> Outcome {
    let failures: Vec<String> = support::suite()
        .into_par_iter()
        .filter_map(|(name, check)| check().err().map(|e| format!("{name}: {e}")))
        .collect();
    let total = support::suite().len();
    let mut detail = format!("{}/{total} properties x {} cases", total - failures.len(), support::CASES);
    for f in &failures {
        detail.push_str("; ");
        detail.push_str(f);
    }
    outcome(failures.is_empty(), detail)
}

/// Name, check and time budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("exact oracle fixtures", exact_fixtures, 1),
        ("Monte Carlo vs exact", mc_vs_exact, 60),
        ("sampler exactness", sampler_exactness, 120),
        ("middle zone rate", middle_zone, 60),
        ("beginning-zone penalty", beginning_zone, 60),
        ("end-zone entropy gap", end_zone_gap, 300),
        ("deep end zone", deep_end_zone, 180),
        ("piecewise additivity", piecewise, 300),
        ("posterior L1 concentration", theorem_one, 180),
        ("smooth-truth fit vs constant", figure_one, 120),
        ("urn information inequality", urn_inequality, 120),
        ("property suites", property_suites, 300),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == id.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let pass = out.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "criterion {id:2} {:4} {name}: {} [{:.2}s / {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
