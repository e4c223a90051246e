use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{integral, DataSet, RegressionFunction};

/// Measure of the `(ε, κ)`-bad points found on the candidate grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadSetReport {
    pub epsilon: f64,
    pub kappa: f64,
    /// Lebesgue measure of the union of bad intervals found.
    pub measure: f64,
    /// Disjoint components of that union.
    pub witnesses: Vec<(f64, f64)>,
    /// Spacing of the uniform part of the candidate endpoints.
    pub mesh: f64,
}

/// Uniform candidate mesh `2^⌊log₂(κ/4)⌋ / n <= κ / (4n)`. Dyadic multiples of
/// `1/n` keep the grids nested as `κ` grows.
pub fn candidate_mesh(kappa: f64, n: usize) -> f64 {
    (kappa / 4.0).log2().floor().exp2() / n as f64
}

struct Endpoint {
    t: f64,
    /// Covariates strictly below / at most `t`.
    below: usize,
    upto: usize,
    /// `∫₀ᵗ f`.
    mass: f64,
}

/// Lower bound on `|B_n(ε, κ)|`: the union of intervals `J` with `|J| >= κ/n`
/// and endpoints among the sorted covariates and a uniform grid, such that
/// `N(J)`, `N^S(J)` or `N^F(J)` deviates from `n|J|`, `n∫_J f` or
/// `n∫_J (1 − f)` by at least `εn|J|`. Intervals are tested closed, open and
/// half-open.
pub fn badset_measure(data: &DataSet, f: &dyn RegressionFunction, epsilon: f64, kappa: f64) -> Result<BadSetReport> {
    if !(epsilon > 0.0 && kappa > 0.0 && epsilon.is_finite() && kappa.is_finite()) {
        return Err(Error::param("epsilon", "epsilon and kappa must be positive"));
    }
    let n = data.len();
    if n == 0 {
        return Ok(BadSetReport { epsilon, kappa, measure: 0.0, witnesses: Vec::new(), mesh: 0.0 });
    }
    let nf = n as f64;
    let mesh = candidate_mesh(kappa, n);
    let min_len = kappa / nf;

    let mut ts: Vec<f64> = data.sorted_x().to_vec();
    let steps = (1.0 / mesh).floor() as usize;
    ts.extend((0..=steps).map(|j| j as f64 * mesh));
    ts.push(1.0);
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let xs = data.sorted_x();
    let prefix = data.success_prefix();
    let mut mass = 0.0;
    let mut last = 0.0;
    let pts: Vec<Endpoint> = ts
        .iter()
        .map(|&t| {
            mass += integral(f, last, t);
            last = t;
            Endpoint { t, below: xs.partition_point(|&x| x < t), upto: xs.partition_point(|&x| x <= t), mass }
        })
        .collect();

    let bad = |a: &Endpoint, b: &Endpoint| {
        let len = b.t - a.t;
        let tol = epsilon * nf * len;
        let exp_s = nf * (b.mass - a.mass);
        let exp_f = nf * len - exp_s;
        [a.below, a.upto].iter().any(|&lo| {
            [b.below, b.upto].iter().any(|&hi| {
                let cnt = (hi - lo) as f64;
                let s = (prefix[hi] - prefix[lo]) as f64;
                (cnt - nf * len).abs() >= tol || (s - exp_s).abs() >= tol || (cnt - s - exp_f).abs() >= tol
            })
        })
    };

    // For each left endpoint, the union of its bad intervals is [a, farthest bad b].
    let mut spans: Vec<(f64, f64)> = Vec::new();
    for (i, a) in pts.iter().enumerate() {
        for b in pts[i + 1..].iter().rev() {
            if b.t - a.t < min_len {
                break;
            }
            if bad(a, b) {
                spans.push((a.t, b.t));
                break;
            }
        }
    }
    let mut witnesses: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in spans {
        match witnesses.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => witnesses.push((lo, hi)),
        }
    }
    let measure = witnesses.iter().map(|(a, b)| b - a).sum::<f64>().clamp(0.0, 1.0);
    Ok(BadSetReport { epsilon, kappa, measure, witnesses, mesh })
}
