use rayon::prelude::*;
use serde::Serialize;

use super::report::{mean_and_se, Report, ReportRow};
use crate::entropy::entropy_functional;
use crate::error::{Error, Result};
use crate::model::{sample_poisson_dataset_with, Function, RegressionFunction, StepFunction};
use crate::predictive::{exact_log_z_star, log_z_star};
use crate::rng::{derive_seed, replicate_seed, rng_from_seed, tag};

/// How `Z*_λ` is evaluated for each simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PsiMethod {
    /// Run-segmentation recursion, `O(N²)` and free of Monte Carlo error.
    Exact,
    /// Gap-occupancy Monte Carlo with this many draws per dataset.
    MonteCarlo { inner_samples: usize },
}

/// `ln Z*_λ` on one dataset of Poisson(`size_mean`) points drawn from `f`.
fn poissonized_log_z(
    f: &dyn RegressionFunction,
    size_mean: f64,
    lambda: f64,
    method: PsiMethod,
    seed: u64,
) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let data = sample_poisson_dataset_with(f, size_mean, &mut rng);
    Ok(match method {
        PsiMethod::Exact => exact_log_z_star(&data, lambda)?.ln(),
        PsiMethod::MonteCarlo { inner_samples } => {
            log_z_star(&data, lambda, inner_samples, derive_seed(seed, tag::SPLITS))?.estimate.ln()
        }
    })
}

/// Replicate values of `n^{-1} ln Z*_{αn}` on datasets of size `Λ(n)` from `f`.
pub fn psi_samples(
    f: &dyn RegressionFunction,
    alpha: f64,
    n: usize,
    replicates: usize,
    method: PsiMethod,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", "must be finite and nonnegative"));
    }
    let nf = n as f64;
    (0..replicates)
        .into_par_iter()
        .map(|i| Ok(poissonized_log_z(f, nf, alpha * nf, method, replicate_seed(seed, i))? / nf))
        .collect()
}

/// Fixed-`n` estimate of the rate `ψ_f(α)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiEstimate {
    pub function: String,
    pub alpha: f64,
    pub n: usize,
    pub replicates: usize,
    pub estimate: f64,
    pub std_error: f64,
}

impl PsiEstimate {
    /// `(estimate − reference) / std_error`.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.estimate - reference) / self.std_error
    }
}

fn check_psi_args(n: usize, replicates: usize) -> Result<()> {
    if n < 100 {
        return Err(Error::param("n", "must be at least 100"));
    }
    if replicates < 2 {
        return Err(Error::param("replicates", "need at least 2 replicates"));
    }
    Ok(())
}

/// Mean and standard error over replicates of `n^{-1} ln Z*_{αn}` for truth `f`.
pub fn psi_estimate_for(
    f: &dyn RegressionFunction,
    label: &str,
    alpha: f64,
    n: usize,
    replicates: usize,
    method: PsiMethod,
    seed: u64,
) -> Result<PsiEstimate> {
    check_psi_args(n, replicates)?;
    let vals = psi_samples(f, alpha, n, replicates, method, seed)?;
    let (estimate, std_error) = mean_and_se(&vals);
    Ok(PsiEstimate { function: label.to_string(), alpha, n, replicates, estimate, std_error })
}

/// [`psi_estimate_for`] with constant truth `p`.
pub fn psi_estimate(
    p: f64,
    alpha: f64,
    n: usize,
    replicates: usize,
    method: PsiMethod,
    seed: u64,
) -> Result<PsiEstimate> {
    let f = StepFunction::constant(p)?;
    psi_estimate_for(&f, &format!("const:{p}"), alpha, n, replicates, method, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseReport {
    pub direct: PsiEstimate,
    /// Mean over replicates of `n^{-1}(ln Z' + ln Z'')`.
    pub combined: f64,
    pub combined_se: f64,
}

impl PiecewiseReport {
    pub fn difference(&self) -> f64 {
        self.direct.estimate - self.combined
    }

    /// Standard error of [`difference`](Self::difference), the runs being independent.
    pub fn difference_se(&self) -> f64 {
        self.direct.std_error.hypot(self.combined_se)
    }
}

/// Sum over the cells `J` of a step function of `ln Z*` for constant-level
/// data of size `Λ(|J| n)` at intensity `α |J| n`, divided by `n`. Cell `j`
/// uses the stream `derive_seed(seed, j)`.
fn piecewise_sample(step: &StepFunction, alpha: f64, n: usize, method: PsiMethod, seeds: &[u64]) -> Result<f64> {
    let nf = n as f64;
    let mut total = 0.0;
    for (j, (&level, &s)) in step.levels().iter().zip(seeds).enumerate() {
        let (a, b) = step.cell_bounds(j);
        let len = b - a;
        total += poissonized_log_z(&StepFunction::constant(level)?, len * nf, alpha * len * nf, method, s)?;
    }
    Ok(total / nf)
}

/// Compares `ψ_f(α)` for the two-level step `(pL on [0, b), pR on [b, 1])`
/// with the sum of independent constant-truth runs on `[0, b]` and `[b, 1]`
/// rescaled to sizes `bn`, `(1 − b)n` and intensities `αbn`, `α(1 − b)n`.
///
/// The left runs use the stream `derive_seed(seed, LEFT)`, so at `b = 1` the
/// combined value equals `psi_estimate(pL, α, n, replicates, method,
/// derive_seed(seed, LEFT))` exactly.
#[allow(clippy::too_many_arguments)]
pub fn psi_piecewise_check(
    p_left: f64,
    p_right: f64,
    b: f64,
    alpha: f64,
    n: usize,
    replicates: usize,
    method: PsiMethod,
    seed: u64,
) -> Result<PiecewiseReport> {
    check_psi_args(n, replicates)?;
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::param("b", "must be in [0, 1]"));
    }
    let f = if b <= 0.0 {
        StepFunction::constant(p_right)?
    } else if b >= 1.0 {
        StepFunction::constant(p_left)?
    } else {
        StepFunction::two_level(p_left, p_right, b)?
    };
    let label = format!("step:{b}:{p_left},{p_right}");
    let direct = psi_estimate_for(&f, &label, alpha, n, replicates, method, derive_seed(seed, tag::DATA))?;
    let nf = n as f64;
    let (left_seed, right_seed) = (derive_seed(seed, tag::LEFT), derive_seed(seed, tag::RIGHT));
    let (fl, fr) = (StepFunction::constant(p_left)?, StepFunction::constant(p_right)?);
    let vals: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let zl = poissonized_log_z(&fl, b * nf, alpha * b * nf, method, replicate_seed(left_seed, i))?;
            let zr =
                poissonized_log_z(&fr, (1.0 - b) * nf, alpha * (1.0 - b) * nf, method, replicate_seed(right_seed, i))?;
            Ok((zl + zr) / nf)
        })
        .collect::<Result<_>>()?;
    let (combined, combined_se) = mean_and_se(&vals);
    Ok(PiecewiseReport { direct, combined, combined_se })
}

impl Report for PiecewiseReport {
    fn rows(&self) -> Vec<ReportRow> {
        let keys = |which: &str| vec![("estimator", which.to_string()), ("alpha", self.direct.alpha.to_string())];
        vec![
            ReportRow {
                keys: keys("direct"),
                estimate: self.direct.estimate,
                std_error: self.direct.std_error,
                reference: self.combined,
                margin: self.difference(),
            },
            ReportRow {
                keys: keys("combined"),
                estimate: self.combined,
                std_error: self.combined_se,
                reference: self.direct.estimate,
                margin: -self.difference(),
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndZoneRow {
    pub alpha: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// `−H(f)`.
    pub reference: f64,
}

impl EndZoneRow {
    pub fn margin(&self) -> f64 {
        self.estimate - self.reference
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndZoneReport {
    pub n: usize,
    pub replicates: usize,
    pub rows: Vec<EndZoneRow>,
    pub warning: Option<String>,
}

impl Report for EndZoneReport {
    fn rows(&self) -> Vec<ReportRow> {
        self.rows
            .iter()
            .map(|r| ReportRow {
                keys: vec![("n", self.n.to_string()), ("alpha", r.alpha.to_string())],
                estimate: r.estimate,
                std_error: r.std_error,
                reference: r.reference,
                margin: r.margin(),
            })
            .collect()
    }
}

fn is_identically_half(f: &dyn RegressionFunction) -> bool {
    let mut edges = vec![0.0];
    edges.extend(f.knots());
    edges.push(1.0);
    edges.windows(2).all(|w| f.piece_ends(w[0], w[1]) == (0.5, 0.5))
}

/// Estimates of `ψ_f(α)` for each `α` against `−H(f)`.
///
/// Step functions with jumps go through the piecewise reduction: one
/// independent constant-level run per cell. Constant and grid functions are
/// Poissonized directly. A warning is attached when `f ≡ 1/2`, where no gap
/// below `−H(f)` is expected.
pub fn end_zone_dominance(
    f: &Function,
    alpha_list: &[f64],
    n: usize,
    replicates: usize,
    method: PsiMethod,
    seed: u64,
) -> Result<EndZoneReport> {
    check_psi_args(n, replicates)?;
    let reference = -entropy_functional(f);
    let warning = is_identically_half(f).then(|| "f is identically 1/2: no end-zone gap is expected".to_string());
    let rows = alpha_list
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let aseed = replicate_seed(seed, ai);
            let vals: Vec<f64> = match f.as_step().filter(|s| !s.is_constant()) {
                Some(step) => (0..replicates)
                    .into_par_iter()
                    .map(|i| {
                        let rs = replicate_seed(aseed, i);
                        let seeds: Vec<u64> = (0..step.n_cells()).map(|j| derive_seed(rs, j as u64)).collect();
                        piecewise_sample(step, alpha, n, method, &seeds)
                    })
                    .collect::<Result<_>>()?,
                None => psi_samples(f, alpha, n, replicates, method, aseed)?,
            };
            let (estimate, std_error) = mean_and_se(&vals);
            Ok(EndZoneRow { alpha, estimate, std_error, reference })
        })
        .collect::<Result<_>>()?;
    Ok(EndZoneReport { n, replicates, rows, warning })
}
