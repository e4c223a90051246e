//! The Beta-function convention, per-configuration predictive probabilities
//! `Z_u`, and the conjugate posterior of the step heights.
//!
//! Predictive probabilities behave like `exp(-n H)` and underflow double
//! precision near `n ≈ 700`, so everything here is carried as a natural log
//! in a [`LogWeight`].

use std::ops::{Add, Div, Mul};
use std::sync::OnceLock;

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{cell_counts, CellCounts, DataSet};
use crate::rng::{rng_from_seed, Rng};

/// A nonnegative weight stored as its natural logarithm; `-inf` is weight zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn from_ln(ln: f64) -> Self {
        LogWeight(ln)
    }

    pub fn from_weight(w: f64) -> Self {
        LogWeight(w.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn weight(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

/// Addition, multiplication and division act on the natural scale.
impl Add for LogWeight {
    type Output = LogWeight;
    fn add(self, rhs: LogWeight) -> LogWeight {
        LogWeight(log_add_exp(self.0, rhs.0))
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: LogWeight) -> LogWeight {
        LogWeight(self.0 + rhs.0)
    }
}

impl Div for LogWeight {
    type Output = LogWeight;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: LogWeight) -> LogWeight {
        LogWeight(self.0 - rhs.0)
    }
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}`; the empty sum is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Streaming `ln Σ e^{x_i}` without storing the terms.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum { max: f64::NEG_INFINITY, scaled: 0.0 }
    }
}

impl LogSum {
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    pub fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

const STIRLING_FROM: usize = 1024;
const LOG_FACTORIAL_TABLE: usize = 1 << 16;

// Cumulative sums below 1024, Stirling series from there on.
fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LOG_FACTORIAL_TABLE);
        let mut acc = 0.0f64;
        t.push(0.0);
        for k in 1..STIRLING_FROM {
            acc += (k as f64).ln();
            t.push(acc);
        }
        for k in STIRLING_FROM..LOG_FACTORIAL_TABLE {
            t.push(ln_gamma_stirling(k as f64 + 1.0));
        }
        t
    })
}

/// `ln Γ(z)` by the Stirling series; accurate to ~1e-16 relative for `z > 1000`.
fn ln_gamma_stirling(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// `ln k!`, from a cached table for `k < 65536`.
pub fn log_factorial(k: u64) -> f64 {
    if (k as usize) < LOG_FACTORIAL_TABLE {
        log_factorial_table()[k as usize]
    } else {
        ln_gamma_stirling(k as f64 + 1.0)
    }
}

/// `ln B(s, f)` in the shifted convention `B(s, f) = 1 / ((s+f+1) C(s+f, s))`,
/// i.e. `∫ w^s (1-w)^f dw`.
pub fn log_beta(n_s: u32, n_f: u32) -> f64 {
    let (s, f) = (n_s as u64, n_f as u64);
    if s == 0 && f == 0 {
        return 0.0;
    }
    log_factorial(s) + log_factorial(f) - log_factorial(s + f + 1)
}

/// `ln Z_u` from precomputed cell counts.
pub fn log_z_cells(counts: &CellCounts) -> LogWeight {
    LogWeight(counts.cells.iter().map(|&(s, f)| log_beta(s, f)).sum())
}

/// `ln Z_u = Σ_i ln B(N_i^S, N_i^F)` over the cells of `u`.
pub fn log_z_u(data: &DataSet, u: &[f64]) -> Result<LogWeight> {
    Ok(log_z_cells(&cell_counts(data, u)?))
}

/// Independent per-cell posteriors with density `∝ w^{n_s} (1-w)^{n_f}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightPosterior {
    pub cells: Vec<(u32, u32)>,
}

impl HeightPosterior {
    pub fn from_counts(counts: CellCounts) -> Self {
        HeightPosterior { cells: counts.cells }
    }

    /// Posterior mean `(n_s + 1) / (n_s + n_f + 2)` of every cell.
    pub fn means(&self) -> Vec<f64> {
        self.cells.iter().map(|&(s, f)| cell_posterior_mean(s, f)).collect()
    }

    pub fn sample_with(&self, rng: &mut Rng) -> Vec<f64> {
        self.cells
            .iter()
            .map(|&(s, f)| {
                let a: f64 = Gamma::new(s as f64 + 1.0, 1.0).expect("shape >= 1").sample(rng);
                let b: f64 = Gamma::new(f as f64 + 1.0, 1.0).expect("shape >= 1").sample(rng);
                a / (a + b)
            })
            .collect()
    }
}

pub fn cell_posterior_mean(n_s: u32, n_f: u32) -> f64 {
    (n_s as f64 + 1.0) / ((n_s + n_f) as f64 + 2.0)
}

pub fn height_posterior(data: &DataSet, u: &[f64]) -> Result<HeightPosterior> {
    Ok(HeightPosterior::from_counts(cell_counts(data, u)?))
}

/// One draw of the step heights, by the two-gamma construction.
pub fn sample_heights(hp: &HeightPosterior, seed: u64) -> Vec<f64> {
    hp.sample_with(&mut rng_from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_log_factorial(k: u64) -> f64 {
        ((1..=k).product::<u64>() as f64).ln()
    }

    #[test]
    fn log_factorial_matches_small_integers() {
        for k in 0..=20 {
            let exact = exact_log_factorial(k);
            assert!((log_factorial(k) - exact).abs() <= 1e-12 * exact.max(1.0), "k = {k}");
        }
    }

    #[test]
    fn stirling_branch_is_continuous_with_table() {
        let table = log_factorial_table()[STIRLING_FROM - 1];
        let series = ln_gamma_stirling(STIRLING_FROM as f64);
        assert!(((table - series) / series).abs() < 1e-13);
    }

    #[test]
    fn beta_convention_examples() {
        assert_eq!(log_beta(0, 0), 0.0);
        assert!((log_beta(1, 1) - (1.0f64 / 6.0).ln()).abs() < 1e-15);
        assert!((log_beta(1, 0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((log_beta(0, 1) - 0.5f64.ln()).abs() < 1e-15);
        // B(2,1) = 1 / (4 * 3) = 1/12
        assert!((log_beta(2, 1) - (1.0f64 / 12.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn log_z_u_examples() {
        let d = DataSet::from_points(&[(0.5, true), (0.6, false)]).unwrap();
        assert!((log_z_u(&d, &[]).unwrap().ln() - (1.0f64 / 6.0).ln()).abs() < 1e-15);
        let d = DataSet::from_points(&[(0.25, true), (0.75, false)]).unwrap();
        assert!((log_z_u(&d, &[0.5]).unwrap().ln() - 0.25f64.ln()).abs() < 1e-15);
        assert!((log_z_u(&d, &[0.1, 0.5]).unwrap().ln() - 0.25f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_handles_zeros() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(LogWeight::ZERO + LogWeight::ONE, LogWeight::ONE);
        let mut acc = LogSum::default();
        assert_eq!(acc.ln(), f64::NEG_INFINITY);
        for x in [-3.0, 2.0, f64::NEG_INFINITY, -700.0, 1.5] {
            acc.push(x);
        }
        assert!((acc.ln() - log_sum_exp(&[-3.0, 2.0, -700.0, 1.5])).abs() < 1e-14);
    }

    #[test]
    fn posterior_means() {
        let hp = HeightPosterior { cells: vec![(0, 0), (3, 1), (0, 5)] };
        let m = hp.means();
        assert_eq!(m[0], 0.5);
        assert!((m[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((m[2] - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn height_draw_moments() {
        let reps = 100_000;
        let hp = HeightPosterior { cells: vec![(0, 0), (3, 1)] };
        let mut rng = rng_from_seed(17);
        let mut sums = [0.0f64; 2];
        for _ in 0..reps {
            let w = hp.sample_with(&mut rng);
            sums[0] += w[0];
            sums[1] += w[1];
        }
        let uniform_se = 1.0 / (12.0 * reps as f64).sqrt();
        assert!((sums[0] / reps as f64 - 0.5).abs() < 3.0 * uniform_se);
        // Beta(4, 2): mean 2/3, variance ab / ((a+b)^2 (a+b+1)) = 8 / 252.
        let beta_se = (8.0 / 252.0 / reps as f64).sqrt();
        assert!((sums[1] / reps as f64 - 2.0 / 3.0).abs() < 3.0 * beta_se);
    }

    #[test]
    fn height_draws_stay_inside_unit_interval() {
        let hp = HeightPosterior { cells: vec![(1, 0), (0, 1), (5, 5)] };
        let mut rng = rng_from_seed(3);
        for _ in 0..1_000_000 / 3 {
            for w in hp.sample_with(&mut rng) {
                assert!(w > 0.0 && w < 1.0);
            }
        }
    }
}
