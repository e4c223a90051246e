//! Predictive probabilities with the split points integrated out.
//!
//! `Z_m` integrates `Z_u` over `m` i.i.d. uniform split points and `Z*_λ`
//! mixes the `Z_m` against Poisson(`λ`). Both depend on a split configuration
//! only through which of the `n − 1` gaps between consecutive covariates hold
//! at least one split: cells inside a gap are empty and contribute
//! `B(0, 0) = 1`. That gives three exact routes:
//!
//! * [`exact_log_z_m`] sums over occupied-gap sets `S`, with the probability
//!   of occupying exactly `S` obtained by inclusion–exclusion (cost `3^{n−1}`).
//! * [`series_log_z_m`] writes `Z_m = m! [t^m] G(t)` for a generating
//!   function that factors along the covariate order and evaluates it by a
//!   run-segmentation recursion (cost `O(n² m)`, all terms positive).
//! * [`exact_log_z_star`] uses that under Poisson splits the gaps are occupied
//!   independently with probability `1 − e^{−λ g}` (cost `O(n²)`).
//!
//! Plain Monte Carlo estimators ([`mc_log_z_m`], [`log_z_star`]) report a
//! delta-method standard error on the log scale.

use std::cmp::Ordering;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{log_beta, log_factorial, log_sum_exp, log_z_cells, LogSum, LogWeight};
use crate::model::{cell_counts, DataSet};
use crate::rng::{rng_from_seed, Rng};
use crate::sampler::HierarchyPrior;

/// Default size limit for [`exact_log_z_m`].
pub const DEFAULT_N_MAX: usize = 14;

/// Gap lengths induced by the sorted covariates and the sorted responses.
#[derive(Debug, Clone, PartialEq)]
pub struct GapDecomposition {
    /// `g_0 .. g_n`; `g_0 = x_(1)`, `g_n = 1 − x_(n)`.
    pub gaps: Vec<f64>,
    pub sorted_y: Vec<bool>,
}

impl GapDecomposition {
    pub fn new(data: &DataSet) -> Self {
        GapDecomposition { gaps: data.gaps(), sorted_y: data.sorted_y().to_vec() }
    }

    pub fn n(&self) -> usize {
        self.sorted_y.len()
    }

    /// Total length of the two outer gaps, where splits never separate data.
    pub fn outer(&self) -> f64 {
        self.gaps[0] + self.gaps[self.n()]
    }

    /// `g_1 .. g_{n−1}`.
    pub fn interior(&self) -> &[f64] {
        let n = self.n();
        if n < 2 {
            &[]
        } else {
            &self.gaps[1..n]
        }
    }

    /// Success prefix counts of the sorted responses.
    fn prefix(&self) -> Vec<u32> {
        let mut p = Vec::with_capacity(self.n() + 1);
        p.push(0);
        let mut acc = 0;
        for &y in &self.sorted_y {
            acc += y as u32;
            p.push(acc);
        }
        p
    }
}

/// A Monte Carlo estimate of a log weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub estimate: LogWeight,
    /// Standard error of the log estimate (delta method).
    pub std_error: f64,
    pub n_samples: usize,
}

impl EstimateWithError {
    pub fn exact(value: LogWeight) -> Self {
        EstimateWithError { estimate: value, std_error: 0.0, n_samples: 0 }
    }

    /// `estimate ± 3·std_error` on the log scale.
    pub fn interval(&self) -> (f64, f64) {
        let e = self.estimate.ln();
        (e - 3.0 * self.std_error, e + 3.0 * self.std_error)
    }

    /// Log of the sample mean of `exp(log_values)` with its delta-method error.
    pub fn from_log_samples(log_values: &[f64]) -> Self {
        let n = log_values.len();
        let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scaled: Vec<f64> = log_values.iter().map(|&l| (l - max).exp()).collect();
        let mean = scaled.iter().sum::<f64>() / n as f64;
        let var = scaled.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
        EstimateWithError {
            estimate: LogWeight::from_ln(max + mean.ln()),
            std_error: var.sqrt() / ((n as f64).sqrt() * mean),
            n_samples: n,
        }
    }
}

fn run_value(prefix: &[u32], lo: usize, hi: usize, term: &impl Fn(u32, u32) -> f64) -> f64 {
    let s = prefix[hi] - prefix[lo];
    term(s, (hi - lo) as u32 - s)
}

/// `ln Σ_S W_m(S) Π_runs term(run)` over occupied interior-gap sets `S`, with
/// `W_m(S)` the probability that `m` uniform splits occupy exactly the
/// interior gaps in `S`. Positive and negative inclusion–exclusion terms are
/// accumulated separately in log space for each `S`.
fn gap_occupancy_sum(data: &DataSet, m: usize, n_max: usize, term: impl Fn(u32, u32) -> f64) -> Result<LogWeight> {
    let n = data.len();
    if n > n_max {
        return Err(Error::OracleTooLarge { n, max: n_max });
    }
    let gd = GapDecomposition::new(data);
    let prefix = gd.prefix();
    if n == 0 {
        return Ok(LogWeight::ONE);
    }
    if m == 0 {
        return Ok(LogWeight::from_ln(run_value(&prefix, 0, n, &term)));
    }
    let interior = gd.interior();
    let k = interior.len();
    let full = 1usize << k;

    // m · ln(outer + g(T)) for every subset T.
    let mut mass = vec![gd.outer(); full];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        mass[mask] = mass[mask & (mask - 1)] + interior[low];
    }
    let log_pow: Vec<f64> = mass.iter().map(|&c| if c > 0.0 { m as f64 * c.ln() } else { f64::NEG_INFINITY }).collect();

    let mut total = LogSum::default();
    for set in 0..full {
        let size = set.count_ones() as usize;
        if size > m {
            continue; // m splits cannot occupy more than m gaps
        }
        let mut pos = LogSum::default();
        let mut neg = LogSum::default();
        let mut sub = set;
        loop {
            if (size - sub.count_ones() as usize).is_multiple_of(2) {
                pos.push(log_pow[sub]);
            } else {
                neg.push(log_pow[sub]);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & set;
        }
        let (lp, ln) = (pos.ln(), neg.ln());
        if lp.partial_cmp(&ln) != Some(Ordering::Greater) {
            continue;
        }
        let log_w = lp + (-(ln - lp).exp()).ln_1p();

        let mut runs = 0.0;
        let mut start = 0;
        let mut bits = set;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            runs += run_value(&prefix, start, b + 1, &term);
            start = b + 1;
            bits &= bits - 1;
        }
        runs += run_value(&prefix, start, n, &term);
        total.push(log_w + runs);
    }
    Ok(LogWeight::from_ln(total.ln()))
}

/// Exact `ln Z_m` by the interior-gap occupancy identity; `n <= n_max`.
pub fn exact_log_z_m_with_limit(data: &DataSet, m: usize, n_max: usize) -> Result<LogWeight> {
    gap_occupancy_sum(data, m, n_max, log_beta)
}

/// Exact `ln Z_m` for datasets of at most [`DEFAULT_N_MAX`] points.
pub fn exact_log_z_m(data: &DataSet, m: usize) -> Result<LogWeight> {
    exact_log_z_m_with_limit(data, m, DEFAULT_N_MAX)
}

/// `ln (dQ_m / dP_p)` on the responses' σ-field for constant truth `p`,
/// enumerated directly with the Bernoulli factor divided out of every run.
pub fn log_likelihood_ratio(data: &DataSet, m: usize, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must be in (0, 1)"));
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let term = |s: u32, f: u32| log_beta(s, f) - s as f64 * lp - f as f64 * lq;
    Ok(gap_occupancy_sum(data, m, DEFAULT_N_MAX, term)?.ln())
}

/// Exact `ln Z_m` as `m! [t^m] e^{c t} P_n(t)`, where `P_j` sums over
/// segmentations of the first `j` sorted points into runs, each run boundary
/// in gap `g` weighted by `e^{g t} − 1`. Truncated power series are kept in log
/// space; every term is positive. Cost `O(n² m)`.
pub fn series_log_z_m(data: &DataSet, m: usize) -> LogWeight {
    let n = data.len();
    if n == 0 {
        return LogWeight::ONE;
    }
    let gd = GapDecomposition::new(data);
    let prefix = gd.prefix();
    let deg = m + 1;
    let neg = f64::NEG_INFINITY;
    let log_fact: Vec<f64> = (0..=m).map(|k| log_factorial(k as u64)).collect();

    // q[i] = P_i · (e^{g_i t} − 1), with q[0] = 1.
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut first = vec![neg; deg];
    first[0] = 0.0;
    q.push(first);
    let mut p_last = vec![neg; deg];
    let mut terms = vec![0.0f64; n];
    for j in 1..=n {
        let mut pj = vec![neg; deg];
        for (d, slot) in pj.iter_mut().enumerate() {
            let mut max = neg;
            for i in 0..j {
                let v = q[i][d];
                let t = if v == neg { neg } else { v + run_value(&prefix, i, j, &log_beta) };
                terms[i] = t;
                max = max.max(t);
            }
            if max > neg {
                *slot = max + terms[..j].iter().map(|&t| (t - max).exp()).sum::<f64>().ln();
            }
        }
        if j == n {
            p_last = pj;
            break;
        }
        let lg = gd.gaps[j].ln();
        let mut qj = vec![neg; deg];
        for (d, slot) in qj.iter_mut().enumerate().skip(1) {
            let parts: Vec<f64> =
                (1..=d).filter(|&a| pj[d - a] > neg).map(|a| pj[d - a] + a as f64 * lg - log_fact[a]).collect();
            *slot = log_sum_exp(&parts);
        }
        q.push(qj);
    }
    let outer = gd.outer();
    let lo = outer.ln();
    let parts: Vec<f64> = (0..=m)
        .filter(|&k| p_last[k] > neg && (k == m || outer > 0.0))
        .map(|k| {
            let c = if k == m { 0.0 } else { (m - k) as f64 * lo - log_fact[m - k] };
            p_last[k] + c
        })
        .collect();
    LogWeight::from_ln(log_fact[m] + log_sum_exp(&parts))
}

/// Exact `ln Z*_λ` with Poisson(`λ`) split points, by the run-segmentation
/// recursion over the sorted covariates. Cost `O(n²)`.
pub fn exact_log_z_star(data: &DataSet, lambda: f64) -> Result<LogWeight> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and nonnegative"));
    }
    let n = data.len();
    if n == 0 {
        return Ok(LogWeight::ONE);
    }
    let x = data.sorted_x();
    let prefix = data.success_prefix();
    if lambda == 0.0 {
        return Ok(LogWeight::from_ln(run_value(prefix, 0, n, &log_beta)));
    }
    // ln P(gap before sorted point i holds a split), i >= 1.
    let boundary: Vec<f64> =
        (0..n).map(|i| if i == 0 { 0.0 } else { (-(-lambda * (x[i] - x[i - 1])).exp_m1()).ln() }).collect();
    let mut f = vec![0.0f64; n + 1];
    let mut terms = vec![0.0f64; n];
    for j in 1..=n {
        let mut max = f64::NEG_INFINITY;
        for i in 0..j {
            let t = f[i] + boundary[i] + run_value(prefix, i, j, &log_beta) - lambda * (x[j - 1] - x[i]);
            terms[i] = t;
            max = max.max(t);
        }
        f[j] = max + terms[..j].iter().map(|&t| (t - max).exp()).sum::<f64>().ln();
    }
    Ok(LogWeight::from_ln(f[n]))
}

fn draw_split(rng: &mut Rng) -> f64 {
    loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            return v;
        }
    }
}

/// `ln Z_u` for `m` fresh uniform split points; redraws the probability-zero
/// event of a split landing on a covariate.
pub(crate) fn log_z_random_u(data: &DataSet, m: usize, rng: &mut Rng, u: &mut Vec<f64>) -> f64 {
    loop {
        u.clear();
        u.extend((0..m).map(|_| draw_split(rng)));
        if let Ok(counts) = cell_counts(data, u) {
            return log_z_cells(&counts).ln();
        }
    }
}

/// Plain Monte Carlo estimate of `ln Z_m` over i.i.d. uniform split vectors.
pub fn mc_log_z_m(data: &DataSet, m: usize, n_samples: usize, seed: u64) -> Result<EstimateWithError> {
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least 2 samples"));
    }
    if m == 0 {
        let z = LogWeight::from_ln(log_beta(data.n_success(), data.n_failure()));
        return Ok(EstimateWithError { n_samples, ..EstimateWithError::exact(z) });
    }
    let mut rng = rng_from_seed(seed);
    let mut u = Vec::with_capacity(m);
    let logs: Vec<f64> = (0..n_samples).map(|_| log_z_random_u(data, m, &mut rng, &mut u)).collect();
    Ok(EstimateWithError::from_log_samples(&logs))
}

/// `ln β` for one draw of Poisson(`λ`) split points. Only gap occupancy
/// matters, and under Poisson splits each interior gap `g` is occupied
/// independently with probability `1 − e^{−λ g}`.
fn log_beta_poisson_splits(data: &DataSet, lambda: f64, rng: &mut Rng) -> f64 {
    let x = data.sorted_x();
    let n = x.len();
    let mut total = 0.0;
    let mut start = 0;
    for i in 1..n {
        let empty = (-lambda * (x[i] - x[i - 1])).exp();
        let r: f64 = rng.random();
        if r >= empty {
            let (s, f) = data.counts_between(start, i);
            total += log_beta(s, f);
            start = i;
        }
    }
    let (s, f) = data.counts_between(start, n);
    total + log_beta(s, f)
}

/// Monte Carlo estimate of `ln Z*_λ = ln E[β | data]` with Poisson(`λ`) splits.
pub fn log_z_star(data: &DataSet, lambda: f64, n_samples: usize, seed: u64) -> Result<EstimateWithError> {
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least 2 samples"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and nonnegative"));
    }
    if lambda == 0.0 || data.len() < 2 {
        let z = LogWeight::from_ln(log_beta(data.n_success(), data.n_failure()));
        return Ok(EstimateWithError { n_samples, ..EstimateWithError::exact(z) });
    }
    let mut rng = rng_from_seed(seed);
    let logs: Vec<f64> = (0..n_samples).map(|_| log_beta_poisson_splits(data, lambda, &mut rng)).collect();
    Ok(EstimateWithError::from_log_samples(&logs))
}

/// How `Z_m` is obtained for [`model_posterior`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZSource {
    /// Inclusion–exclusion oracle (`n <= 14`).
    Exact,
    /// Generating-function recursion (any `n`, cost `O(n² m)`).
    Series,
    MonteCarlo {
        n_samples: usize,
        seed: u64,
    },
}

/// Posterior over the number of split points, `∝ ν_m Z_m`, for `m <= m_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelPosterior {
    pub probs: Vec<f64>,
    pub log_z: Vec<f64>,
    /// `Σ_{m <= m_max} ν_m`.
    pub prior_mass_covered: f64,
    /// Set when the covered prior mass is below 0.999.
    pub truncated: bool,
}

pub fn model_posterior(data: &DataSet, nu: &HierarchyPrior, m_max: usize, source: ZSource) -> Result<ModelPosterior> {
    let log_z = (0..=m_max)
        .map(|m| {
            Ok(match source {
                ZSource::Exact => exact_log_z_m(data, m)?.ln(),
                ZSource::Series => series_log_z_m(data, m).ln(),
                ZSource::MonteCarlo { n_samples, seed } => {
                    mc_log_z_m(data, m, n_samples, crate::rng::replicate_seed(seed, m))?.estimate.ln()
                }
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let joint: Vec<f64> = log_z.iter().enumerate().map(|(m, lz)| nu.log_mass(m) + lz).collect();
    let norm = log_sum_exp(&joint);
    if norm == f64::NEG_INFINITY {
        return Err(Error::ZeroWeights);
    }
    let probs = joint.iter().map(|j| (j - norm).exp()).collect();
    let prior_mass_covered = nu.covered_mass(m_max);
    Ok(ModelPosterior { probs, log_z, prior_mass_covered, truncated: prior_mass_covered < 0.999 })
}
