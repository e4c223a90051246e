use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{cell_posterior_mean, HeightPosterior};
use crate::model::{l1_distance, DataSet, GridFunction, RegressionFunction, StepFunction};
use crate::rng::{derive_seed, rng_from_seed, tag};

use super::chain::{run_chain_with, AcceptanceStats, ChainSettings};
use super::HierarchyPrior;

/// Adds the step function with sorted breakpoints `u` and per-cell `levels`,
/// evaluated at the equispaced nodes `j / k`, into `acc`.
fn accumulate_on_grid(u: &[f64], levels: &[f64], acc: &mut [f64]) {
    let k = acc.len() - 1;
    let mut cell = 0;
    for (j, slot) in acc.iter_mut().enumerate() {
        let x = j as f64 / k as f64;
        while cell < u.len() && u[cell] <= x {
            cell += 1;
        }
        *slot += levels[cell];
    }
}

/// Posterior mean with the chain diagnostics that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorFit {
    pub mean: GridFunction,
    pub stats: AcceptanceStats,
    pub retained: usize,
}

/// Posterior mean `E[g(x) | data]` on `k + 1` equispaced nodes, averaging the
/// per-cell height means `(n_s + 1) / (n_s + n_f + 2)` over retained chain
/// states.
pub fn posterior_mean(
    data: &DataSet,
    nu: &HierarchyPrior,
    settings: &ChainSettings,
    k: usize,
    seed: u64,
) -> Result<GridFunction> {
    Ok(posterior_fit(data, nu, settings, k, seed)?.mean)
}

pub fn posterior_fit(
    data: &DataSet,
    nu: &HierarchyPrior,
    settings: &ChainSettings,
    k: usize,
    seed: u64,
) -> Result<PosteriorFit> {
    if k < 2 {
        return Err(Error::param("k", "grid needs at least 2 panels"));
    }
    let mut acc = vec![0.0; k + 1];
    let mut count = 0usize;
    let stats = run_chain_with(data, nu, settings, seed, |s| {
        let levels: Vec<f64> = s.cells().iter().map(|&(a, b)| cell_posterior_mean(a, b)).collect();
        accumulate_on_grid(s.u(), &levels, &mut acc);
        count += 1;
    })?;
    if count == 0 {
        return Err(Error::param("n_iters", "no samples retained after burn-in"));
    }
    let mean = GridFunction::new(acc.iter().map(|v| (v / count as f64).clamp(0.0, 1.0)).collect())?;
    Ok(PosteriorFit { mean, stats, retained: count })
}

/// Pointwise average of posterior draws `g` with sampled heights; an
/// unconditioned counterpart to [`posterior_mean`].
pub fn posterior_mean_sampled(
    data: &DataSet,
    nu: &HierarchyPrior,
    settings: &ChainSettings,
    k: usize,
    seed: u64,
) -> Result<GridFunction> {
    if k < 2 {
        return Err(Error::param("k", "grid needs at least 2 panels"));
    }
    let mut rng = rng_from_seed(derive_seed(seed, tag::HEIGHTS));
    let mut acc = vec![0.0; k + 1];
    let mut count = 0usize;
    run_chain_with(data, nu, settings, seed, |s| {
        let hp = HeightPosterior { cells: s.cells().to_vec() };
        accumulate_on_grid(s.u(), &hp.sample_with(&mut rng), &mut acc);
        count += 1;
    })?;
    if count == 0 {
        return Err(Error::param("n_iters", "no samples retained after burn-in"));
    }
    GridFunction::new(acc.iter().map(|v| (v / count as f64).clamp(0.0, 1.0)).collect())
}

/// `‖g − f_true‖₁` for one posterior draw `g` per retained chain state.
pub fn posterior_l1_samples(
    data: &DataSet,
    nu: &HierarchyPrior,
    f_true: &dyn RegressionFunction,
    settings: &ChainSettings,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = rng_from_seed(derive_seed(seed, tag::HEIGHTS));
    let mut out = Vec::with_capacity(settings.n_retained());
    let mut failure = None;
    run_chain_with(data, nu, settings, seed, |s| {
        let hp = HeightPosterior { cells: s.cells().to_vec() };
        match StepFunction::new(s.u().to_vec(), hp.sample_with(&mut rng)) {
            Ok(g) => out.push(l1_distance(&g, f_true)),
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Median of a nonempty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
