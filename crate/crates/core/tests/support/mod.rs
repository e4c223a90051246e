//! Shared property checks. Each runs 1000 random cases and is exercised both
//! by the `properties` test target and by the acceptance run.

#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::seq::SliceRandom;

use stepbayes::entropy::{concavity_gap, entropy_functional};
use stepbayes::kernel::{log_beta, log_z_u, HeightPosterior};
use stepbayes::model::{average_onto, cell_counts, l1_distance, l2_squared, DataSet, StepFunction};
use stepbayes::predictive::{exact_log_z_m, exact_log_z_star, log_likelihood_ratio};
use stepbayes::rng::rng_from_seed;
use stepbayes::urn::{filter_q, mixing_distance, UrnFilter};

pub const CASES: u32 = 1000;

pub type Check = fn() -> Result<(), String>;

const GRID: u32 = 1 << 20;

/// Covariates sit at odd multiples of `2^-21`, splits at multiples of `2^-20`,
/// so the two never coincide.
pub fn dataset(max_n: usize) -> impl Strategy<Value = DataSet> {
    prop::collection::vec((0..GRID, any::<bool>()), 0..=max_n).prop_map(|pts| {
        let unique: BTreeMap<u32, bool> = pts.into_iter().collect();
        let points: Vec<(f64, bool)> = unique.into_iter().map(|(k, y)| ((k as f64 + 0.5) / GRID as f64, y)).collect();
        DataSet::from_points(&points).unwrap()
    })
}

pub fn splits(max_m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1..GRID, 0..=max_m).prop_map(|v| v.into_iter().map(|k| k as f64 / GRID as f64).collect())
}

pub fn step_function(max_cells: usize, lo: f64, hi: f64) -> impl Strategy<Value = StepFunction> {
    (splits(max_cells - 1), prop::collection::vec(lo..=hi, max_cells)).prop_map(|(u, levels)| {
        let mut b = u;
        b.sort_by(f64::total_cmp);
        b.dedup();
        let levels = levels[..b.len() + 1].to_vec();
        StepFunction::new(b, levels).unwrap()
    })
}

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() })
}

fn run<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

pub fn count_conservation_and_order_invariance() -> Result<(), String> {
    run((dataset(30), splits(6), any::<u64>()), |(data, u, seed)| {
        let c = cell_counts(&data, &u).unwrap();
        prop_assert_eq!(c.n_success(), data.n_success());
        prop_assert_eq!(c.n_failure(), data.n_failure());
        let mut pts: Vec<(f64, bool)> = data.points().collect();
        let mut rev_u = u.clone();
        rev_u.reverse();
        pts.shuffle(&mut rng_from_seed(seed));
        let shuffled = DataSet::from_points(&pts).unwrap();
        let mut a = c.cells.clone();
        let mut b = cell_counts(&shuffled, &rev_u).unwrap().cells;
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        Ok(())
    })
}

pub fn average_onto_idempotent() -> Result<(), String> {
    run((step_function(5, 0.0, 1.0), splits(5)), |(f, u)| {
        let once = average_onto(&f, &u).unwrap();
        let twice = average_onto(&once, &u).unwrap();
        prop_assert_eq!(once.breakpoints(), twice.breakpoints());
        for (a, b) in once.levels().iter().zip(twice.levels()) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
        Ok(())
    })
}

pub fn l1_is_a_metric() -> Result<(), String> {
    let f = || step_function(4, 0.0, 1.0);
    run((f(), f(), f()), |(a, b, c)| {
        let ab = l1_distance(&a, &b);
        prop_assert!((ab - l1_distance(&b, &a)).abs() < 1e-12);
        prop_assert!(ab <= l1_distance(&a, &c) + l1_distance(&c, &b) + 1e-12);
        prop_assert!(l1_distance(&a, &a).abs() < 1e-15);
        Ok(())
    })
}

pub fn predictive_bounds() -> Result<(), String> {
    run((dataset(40), splits(8)), |(data, u)| {
        let lz = log_z_u(&data, &u).unwrap().ln();
        prop_assert!(lz <= 0.0);
        prop_assert!(lz >= -(data.len() as f64) * 4f64.ln() - 1e-9);
        Ok(())
    })
}

pub fn refinement_ratio() -> Result<(), String> {
    let counts = (0u32..=12, 0u32..=12).prop_filter("n <= 12", |(s, f)| s + f <= 12);
    run((counts, 0u32..=12, 0u32..=12), |((s, f), sl, fl)| {
        let (sl, fl) = (sl.min(s), fl.min(f));
        let ratio = log_beta(s, f) - log_beta(sl, fl) - log_beta(s - sl, f - fl);
        prop_assert!(ratio <= ((s + f).max(1) as f64).ln() + 1e-12);
        Ok(())
    })
}

pub fn stirling_rate() -> Result<(), String> {
    const N: u32 = 10_000;
    run(500u32..=9500, |m| {
        let p = m as f64 / N as f64;
        let h = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        let rate = log_beta(m, N - m) / N as f64;
        prop_assert!((rate + h).abs() < 0.01, "m = {}: {} vs {}", m, rate, -h);
        Ok(())
    })
}

pub fn beta_concentration() -> Result<(), String> {
    const N: u32 = 10_000;
    run((0u32..=N, any::<u64>()), |(m, seed)| {
        let hp = HeightPosterior { cells: vec![(m, N - m)] };
        let mut rng = rng_from_seed(seed);
        let centre = m as f64 / N as f64;
        let draws = 10_000;
        let inside = (0..draws).filter(|_| (hp.sample_with(&mut rng)[0] - centre).abs() <= 0.05).count();
        prop_assert!(inside as f64 >= 0.99 * draws as f64);
        Ok(())
    })
}

pub fn adding_data_never_increases_z() -> Result<(), String> {
    run((dataset(9), splits(4), 0..GRID, any::<bool>()), |(data, u, k, y)| {
        let x = (k as f64 + 0.5) / GRID as f64;
        let Ok(bigger) = data.with_point(x, y) else { return Ok(()) };
        prop_assert!(log_z_u(&bigger, &u).unwrap().ln() <= log_z_u(&data, &u).unwrap().ln() + 1e-12);
        let m = u.len();
        prop_assert!(exact_log_z_m(&bigger, m).unwrap().ln() <= exact_log_z_m(&data, m).unwrap().ln() + 1e-12);
        Ok(())
    })
}

pub fn exact_z_bounds() -> Result<(), String> {
    run((dataset(10), 0usize..=6), |(data, m)| {
        let lz = exact_log_z_m(&data, m).unwrap().ln();
        prop_assert!(lz <= 1e-12);
        prop_assert!(lz >= -(data.len() as f64) * 4f64.ln() - 1e-9);
        Ok(())
    })
}

pub fn shift_invariance() -> Result<(), String> {
    run((dataset(10), 0usize..=4, 0.0..1.0f64), |(data, m, t)| {
        let pts: Vec<(f64, bool)> = data.points().collect();
        if pts.is_empty() {
            return Ok(());
        }
        let lo = data.sorted_x()[0];
        let hi = data.sorted_x()[data.len() - 1];
        let shift = -lo + t * (1.0 - (hi - lo));
        let moved: Vec<(f64, bool)> = pts.iter().map(|&(x, y)| (x + shift, y)).collect();
        let moved = DataSet::from_points(&moved).unwrap();
        let a = exact_log_z_m(&data, m).unwrap().ln();
        let b = exact_log_z_m(&moved, m).unwrap().ln();
        prop_assert!(close(a, b, 1e-9), "{} vs {}", a, b);
        Ok(())
    })
}

pub fn likelihood_identity() -> Result<(), String> {
    run((dataset(8), 0usize..=4, 0.05..0.95f64), |(data, m, p)| {
        let direct = exact_log_z_m(&data, m).unwrap().ln();
        let bernoulli = data.n_success() as f64 * p.ln() + data.n_failure() as f64 * (1.0 - p).ln();
        let via_ratio = bernoulli + log_likelihood_ratio(&data, m, p).unwrap();
        prop_assert!(close(direct, via_ratio, 1e-10), "{} vs {}", direct, via_ratio);
        Ok(())
    })
}

pub fn thinning_raises_z_star() -> Result<(), String> {
    run((dataset(10), 0.0..20.0f64, any::<u64>()), |(data, lambda, keep)| {
        let pts: Vec<(f64, bool)> =
            data.points().enumerate().filter(|(i, _)| keep >> (i % 64) & 1 == 1).map(|p| p.1).collect();
        let thinned = DataSet::from_points(&pts).unwrap();
        let full = exact_log_z_star(&data, lambda).unwrap().ln();
        prop_assert!(exact_log_z_star(&thinned, lambda).unwrap().ln() >= full - 1e-12);
        Ok(())
    })
}

pub fn concavity_gap_bounds() -> Result<(), String> {
    run((step_function(6, 0.0, 1.0), splits(6)), |(f, u)| {
        let gap = concavity_gap(&f, &u).unwrap();
        prop_assert!(gap >= -1e-12);
        let fbar = average_onto(&f, &u).unwrap();
        prop_assert!(gap >= 2.0 * l2_squared(&f, &fbar) - 1e-12, "gap {} below quadratic bound", gap);
        Ok(())
    })
}

pub fn entropy_continuity() -> Result<(), String> {
    run((step_function(6, 0.05, 0.95), splits(6), prop::collection::vec(-0.01..0.01f64, 7)), |(f, extra, d)| {
        // Perturb the levels and add breakpoints so that ‖f − g‖₁ <= 0.01.
        let refined = average_onto(&f, &[f.breakpoints(), &extra[..]].concat()).unwrap();
        let levels: Vec<f64> =
            refined.levels().iter().zip(d.iter().cycle()).map(|(l, e)| (l + e).clamp(0.05, 0.95)).collect();
        let g = StepFunction::new(refined.breakpoints().to_vec(), levels).unwrap();
        prop_assert!(l1_distance(&f, &g) <= 0.01 + 1e-12);
        prop_assert!((entropy_functional(&f) - entropy_functional(&g)).abs() <= 0.05);
        Ok(())
    })
}

/// `P(y_1..y_k)` by summing over every recharge pattern; the first draw is
/// from the fresh urn either way.
pub fn brute_force_prob(y: &[bool], r: f64) -> f64 {
    let k = y.len();
    let mut total = 0.0;
    for pattern in 0u32..(1 << k.saturating_sub(1)) {
        let mut weight = 1.0;
        let (mut red, mut blue) = (1.0, 1.0);
        for (i, &yi) in y.iter().enumerate() {
            if i > 0 {
                if pattern >> (i - 1) & 1 == 1 {
                    weight *= r;
                    red = 1.0;
                    blue = 1.0;
                } else {
                    weight *= 1.0 - r;
                }
            }
            let p1 = blue / (red + blue);
            weight *= if yi { p1 } else { 1.0 - p1 };
            if yi {
                blue += 1.0;
            } else {
                red += 1.0;
            }
        }
        total += weight;
    }
    total
}

pub fn filter_matches_path_enumeration() -> Result<(), String> {
    run((prop::collection::vec(any::<bool>(), 0..=10), 0.01..=1.0f64), |(y, r)| {
        let mut ext = y.clone();
        ext.push(true);
        let brute = brute_force_prob(&ext, r) / brute_force_prob(&y, r);
        let q = filter_q(&y, r).unwrap();
        prop_assert!((q - brute).abs() < 1e-10, "{} vs {}", q, brute);
        Ok(())
    })
}

pub fn filter_is_a_distribution() -> Result<(), String> {
    run((prop::collection::vec(any::<bool>(), 0..=40), 0.01..=1.0f64), |(y, r)| {
        let mut f = UrnFilter::new(r).unwrap();
        for v in y {
            f.observe(v);
        }
        let total: f64 = f.states().iter().map(|s| s.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(f.states().len() <= f.len() + 2);
        Ok(())
    })
}

pub fn mixing_bound() -> Result<(), String> {
    run((0usize..=6, 0.01..=1.0f64, prop::collection::vec(any::<bool>(), 0..=8)), |(m, r, prefix)| {
        let tv = mixing_distance(m, r, &[prefix]).unwrap()[0];
        prop_assert!(tv <= (1.0 - r).powi(m as i32) + 1e-12, "tv {} at m = {}, r = {}", tv, m, r);
        Ok(())
    })
}

pub fn suite() -> Vec<(&'static str, Check)> {
    vec![
        ("count conservation and order invariance", count_conservation_and_order_invariance),
        ("average_onto idempotent", average_onto_idempotent),
        ("l1 metric", l1_is_a_metric),
        ("log Z_u bounds", predictive_bounds),
        ("refinement ratio", refinement_ratio),
        ("Stirling rate", stirling_rate),
        ("Beta concentration", beta_concentration),
        ("monotonicity in data", adding_data_never_increases_z),
        ("exact Z_m bounds", exact_z_bounds),
        ("shift invariance", shift_invariance),
        ("likelihood identity", likelihood_identity),
        ("thinning raises Z*", thinning_raises_z_star),
        ("concavity gap", concavity_gap_bounds),
        ("entropy continuity", entropy_continuity),
        ("filter vs path enumeration", filter_matches_path_enumeration),
        ("filter normalization", filter_is_a_distribution),
        ("mixing bound", mixing_bound),
    ]
}
