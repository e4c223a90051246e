use rayon::prelude::*;
use serde::Serialize;

use super::report::{mean_and_se, Report, ReportRow};
use crate::error::{Error, Result};
use crate::rng::replicate_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubadditiveRow {
    pub n: usize,
    /// Mean of `S_n / n` over replicates.
    pub mean: f64,
    pub std_error: f64,
    /// Standard deviation of `S_n / n`.
    pub dispersion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubadditiveReport {
    pub rows: Vec<SubadditiveRow>,
    /// Least-squares slope of the means against `ln n`.
    pub slope: f64,
    /// Dispersion is nonincreasing along `n_list`.
    pub dispersion_shrinks: bool,
}

impl SubadditiveReport {
    /// Mean of `S_n / n` at the largest `n`.
    pub fn limit_estimate(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.mean)
    }
}

impl Report for SubadditiveReport {
    fn rows(&self) -> Vec<ReportRow> {
        let limit = self.limit_estimate();
        self.rows
            .iter()
            .map(|r| ReportRow {
                keys: vec![("n", r.n.to_string()), ("dispersion", r.dispersion.to_string())],
                estimate: r.mean,
                std_error: r.std_error,
                reference: limit,
                margin: r.mean - limit,
            })
            .collect()
    }
}

/// Empirical convergence diagnostic for `S_n / n`. `sampler(n, seed)` returns
/// one draw of `S_n`; replicate `i` at `n_list[j]` gets the seed
/// `replicate_seed(replicate_seed(seed, j), i)`.
pub fn subadditive_check(
    sampler: impl Fn(usize, u64) -> Result<f64> + Sync,
    n_list: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<SubadditiveReport> {
    if replicates < 10 {
        return Err(Error::param("replicates", "need at least 10 replicates"));
    }
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::param("n_list", "must be positive and strictly increasing"));
    }
    let rows = n_list
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let base = replicate_seed(seed, j);
            let vals: Vec<f64> = (0..replicates)
                .into_par_iter()
                .map(|i| Ok(sampler(n, replicate_seed(base, i))? / n as f64))
                .collect::<Result<_>>()?;
            let (mean, std_error) = mean_and_se(&vals);
            Ok(SubadditiveRow { n, mean, std_error, dispersion: std_error * (replicates as f64).sqrt() })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let x_bar = xs.iter().sum::<f64>() / xs.len() as f64;
    let y_bar = rows.iter().map(|r| r.mean).sum::<f64>() / rows.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&rows).map(|(x, r)| (x - x_bar) * (r.mean - y_bar)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let dispersion_shrinks = rows.windows(2).all(|w| w[1].dispersion <= w[0].dispersion);
    Ok(SubadditiveReport { rows, slope, dispersion_shrinks })
}
