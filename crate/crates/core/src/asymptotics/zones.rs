use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use super::report::{mean_and_se, Report, ReportRow};
use crate::entropy::entropy_functional;
use crate::error::{Error, Result};
use crate::kernel::log_z_u;
use crate::model::{average_onto, sample_dataset, RegressionFunction};
use crate::predictive::{mc_log_z_m, series_log_z_m};
use crate::rng::{derive_seed, replicate_seed, rng_from_seed, tag};

/// `n^{-1} ln Z_m` for one `(n, m)` with its reference rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZoneRow {
    pub n: usize,
    pub m: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub reference: f64,
}

impl ZoneRow {
    pub fn margin(&self) -> f64 {
        self.estimate - self.reference
    }
}

/// `n^{-1} ln Z_u` for one random split vector, against `−H(f̄_u)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitRow {
    pub m: usize,
    pub index: usize,
    pub estimate: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneScanResult {
    pub rows: Vec<ZoneRow>,
    pub per_u: Vec<SplitRow>,
}

impl ZoneScanResult {
    /// Fraction of per-configuration rows with `|estimate − reference| < tol`.
    pub fn per_u_fraction_within(&self, tol: f64) -> f64 {
        let hits = self.per_u.iter().filter(|r| (r.estimate - r.reference).abs() < tol).count();
        hits as f64 / self.per_u.len().max(1) as f64
    }
}

impl Report for ZoneScanResult {
    fn rows(&self) -> Vec<ReportRow> {
        let mut out: Vec<ReportRow> = self
            .rows
            .iter()
            .map(|r| ReportRow {
                keys: vec![("n", r.n.to_string()), ("m", r.m.to_string()), ("u_index", String::new())],
                estimate: r.estimate,
                std_error: r.std_error,
                reference: r.reference,
                margin: r.margin(),
            })
            .collect();
        let n = self.rows.first().map_or(0, |r| r.n);
        out.extend(self.per_u.iter().map(|r| ReportRow {
            keys: vec![("n", n.to_string()), ("m", r.m.to_string()), ("u_index", r.index.to_string())],
            estimate: r.estimate,
            std_error: 0.0,
            reference: r.reference,
            margin: r.estimate - r.reference,
        }));
        out
    }
}

/// Number of random split vectors per `m` in the per-configuration rows.
pub const SPLITS_PER_M: usize = 10;

/// Monte Carlo estimates of `n^{-1} ln Z_m` on one simulated dataset, against
/// `−H(f)`, plus per-configuration rows `n^{-1} ln Z_u` against `−H(f̄_u)`.
pub fn middle_zone_scan(
    f: &dyn RegressionFunction,
    n: usize,
    m_list: &[usize],
    mc_samples: usize,
    seed: u64,
) -> Result<ZoneScanResult> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    let mut ms = m_list.to_vec();
    ms.sort_unstable();
    ms.dedup();
    if ms.last().is_some_and(|&m| m > n) {
        return Err(Error::param("m_list", "every m must be at most n"));
    }
    let data = sample_dataset(f, n, derive_seed(seed, tag::DATA));
    let reference = -entropy_functional(f);
    let nf = n as f64;
    let split_seed = derive_seed(seed, tag::SPLITS);

    let results: Vec<(ZoneRow, Vec<SplitRow>)> = ms
        .par_iter()
        .map(|&m| {
            let est = mc_log_z_m(&data, m, mc_samples, replicate_seed(split_seed, m))?;
            let row = ZoneRow { n, m, estimate: est.estimate.ln() / nf, std_error: est.std_error / nf, reference };
            let mut rng = rng_from_seed(replicate_seed(derive_seed(seed, tag::HEIGHTS), m));
            let mut per_u = Vec::with_capacity(SPLITS_PER_M);
            while per_u.len() < SPLITS_PER_M {
                let u: Vec<f64> = (0..m).map(|_| rng.random()).collect();
                let Ok(lz) = log_z_u(&data, &u) else { continue };
                let Ok(avg) = average_onto(f, &u) else { continue };
                per_u.push(SplitRow {
                    m,
                    index: per_u.len(),
                    estimate: lz.ln() / nf,
                    reference: -entropy_functional(&avg),
                });
            }
            Ok((row, per_u))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(results.len());
    let mut per_u = Vec::new();
    for (r, p) in results {
        rows.push(r);
        per_u.extend(p);
    }
    Ok(ZoneScanResult { rows, per_u })
}

/// `Some(j)` if `f` is a step function with `j` jumps, `None` otherwise.
pub fn step_jumps(f: &dyn RegressionFunction) -> Option<usize> {
    let mut edges = vec![0.0];
    edges.extend(f.knots());
    edges.push(1.0);
    let mut jumps = 0;
    let mut prev: Option<f64> = None;
    for w in edges.windows(2) {
        let (v0, v1) = f.piece_ends(w[0], w[1]);
        if v0 != v1 {
            return None;
        }
        if prev.is_some_and(|p| p != v0) {
            jumps += 1;
        }
        prev = Some(v0);
    }
    Some(jumps)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeginningZoneReport {
    pub k: usize,
    pub n: usize,
    pub replicates: usize,
    /// Mean over replicates of `n^{-1} ln Z_m`, `m = 0..=k`.
    pub rows: Vec<ZoneRow>,
    /// Mean over replicates of `max_{m <= k} n^{-1} ln Z_m`.
    pub max_estimate: f64,
    pub std_error: f64,
    /// `−H(f)`.
    pub reference: f64,
    /// `reference − max_estimate`; positive when the small models fall short.
    pub margin: f64,
    /// `f` is itself a step function with at most `k` jumps.
    pub f_is_small_step: bool,
}

impl Report for BeginningZoneReport {
    fn rows(&self) -> Vec<ReportRow> {
        let mut out: Vec<ReportRow> = self
            .rows
            .iter()
            .map(|r| ReportRow {
                keys: vec![("n", r.n.to_string()), ("m", r.m.to_string())],
                estimate: r.estimate,
                std_error: r.std_error,
                reference: r.reference,
                margin: r.margin(),
            })
            .collect();
        out.push(ReportRow {
            keys: vec![("n", self.n.to_string()), ("m", "max".into())],
            estimate: self.max_estimate,
            std_error: self.std_error,
            reference: self.reference,
            margin: self.margin,
        });
        out
    }
}

/// `max_{m <= k} n^{-1} ln Z_m` against `−H(f)`, with `Z_m` evaluated exactly
/// by the generating-function recursion on each of `replicates` datasets.
pub fn beginning_zone_check(
    f: &dyn RegressionFunction,
    k: usize,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<BeginningZoneReport> {
    if n == 0 || replicates == 0 {
        return Err(Error::param("n", "n and replicates must be positive"));
    }
    let nf = n as f64;
    let per_rep: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let data = sample_dataset(f, n, replicate_seed(derive_seed(seed, tag::DATA), r));
            (0..=k).map(|m| series_log_z_m(&data, m).ln() / nf).collect()
        })
        .collect();
    let reference = -entropy_functional(f);
    let rows = (0..=k)
        .map(|m| {
            let vals: Vec<f64> = per_rep.iter().map(|v| v[m]).collect();
            let (estimate, std_error) = mean_and_se(&vals);
            ZoneRow { n, m, estimate, std_error, reference }
        })
        .collect();
    let maxima: Vec<f64> = per_rep.iter().map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let (max_estimate, std_error) = mean_and_se(&maxima);
    Ok(BeginningZoneReport {
        k,
        n,
        replicates,
        rows,
        max_estimate,
        std_error,
        reference,
        margin: reference - max_estimate,
        f_is_small_step: step_jumps(f).is_some_and(|j| j <= k),
    })
}
