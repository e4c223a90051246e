use rand::Rng as _;
use rand_distr::{Distribution, Poisson};

use super::function::{sorted_splits, RegressionFunction};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// Covariate/response pairs with a sorted view and success prefix counts.
///
/// `success_prefix[k]` is the number of successes among the `k` smallest
/// covariates, so success and failure counts of any interval follow from two
/// binary searches.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    x: Vec<f64>,
    y: Vec<bool>,
    sort_index: Vec<usize>,
    sorted_x: Vec<f64>,
    sorted_y: Vec<bool>,
    success_prefix: Vec<u32>,
}

impl DataSet {
    pub fn new(x: Vec<f64>, y: Vec<bool>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::param("y", format!("{} covariates but {} responses", x.len(), y.len())));
        }
        for &xi in &x {
            if !(0.0..=1.0).contains(&xi) {
                return Err(Error::CovariateOutOfRange { x: xi });
            }
        }
        let mut sort_index: Vec<usize> = (0..x.len()).collect();
        sort_index.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let sorted_x: Vec<f64> = sort_index.iter().map(|&i| x[i]).collect();
        if let Some(w) = sorted_x.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateCovariate { x: w[0] });
        }
        let sorted_y: Vec<bool> = sort_index.iter().map(|&i| y[i]).collect();
        let mut success_prefix = Vec::with_capacity(x.len() + 1);
        success_prefix.push(0u32);
        let mut acc = 0u32;
        for &yi in &sorted_y {
            acc += yi as u32;
            success_prefix.push(acc);
        }
        Ok(DataSet { x, y, sort_index, sorted_x, sorted_y, success_prefix })
    }

    pub fn from_points(points: &[(f64, bool)]) -> Result<Self> {
        DataSet::new(points.iter().map(|p| p.0).collect(), points.iter().map(|p| p.1).collect())
    }

    pub fn empty() -> Self {
        DataSet::new(Vec::new(), Vec::new()).expect("empty dataset is valid")
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Points in insertion order.
    pub fn points(&self) -> impl Iterator<Item = (f64, bool)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[bool] {
        &self.y
    }

    pub fn sort_index(&self) -> &[usize] {
        &self.sort_index
    }

    pub fn sorted_x(&self) -> &[f64] {
        &self.sorted_x
    }

    pub fn sorted_y(&self) -> &[bool] {
        &self.sorted_y
    }

    pub fn success_prefix(&self) -> &[u32] {
        &self.success_prefix
    }

    pub fn n_success(&self) -> u32 {
        *self.success_prefix.last().unwrap()
    }

    pub fn n_failure(&self) -> u32 {
        self.len() as u32 - self.n_success()
    }

    /// Number of covariates strictly below `t`.
    pub fn rank(&self, t: f64) -> usize {
        self.sorted_x.partition_point(|&v| v < t)
    }

    /// `(successes, failures)` among sorted points `lo..hi`.
    pub fn counts_between(&self, lo: usize, hi: usize) -> (u32, u32) {
        let s = self.success_prefix[hi] - self.success_prefix[lo];
        (s, (hi - lo) as u32 - s)
    }

    /// Copy with one more point appended.
    pub fn with_point(&self, x: f64, y: bool) -> Result<Self> {
        let mut xs = self.x.clone();
        let mut ys = self.y.clone();
        xs.push(x);
        ys.push(y);
        DataSet::new(xs, ys)
    }

    /// Copy with every response replaced by `y`.
    pub fn with_responses(&self, y: bool) -> Self {
        DataSet::new(self.x.clone(), vec![y; self.len()]).expect("covariates unchanged")
    }

    /// Gap lengths `g_0 .. g_n` between consecutive sorted covariates, with the
    /// outer gaps to 0 and 1. An empty dataset has the single gap `[0, 1]`.
    pub fn gaps(&self) -> Vec<f64> {
        let mut gaps = Vec::with_capacity(self.len() + 1);
        let mut prev = 0.0;
        for &xi in &self.sorted_x {
            gaps.push(xi - prev);
            prev = xi;
        }
        gaps.push(1.0 - prev);
        gaps
    }
}

/// Success/failure counts for each cell of a split vector's partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellCounts {
    pub cells: Vec<(u32, u32)>,
}

impl CellCounts {
    pub fn n_success(&self) -> u32 {
        self.cells.iter().map(|c| c.0).sum()
    }

    pub fn n_failure(&self) -> u32 {
        self.cells.iter().map(|c| c.1).sum()
    }
}

/// Per-cell counts for the (unordered) split vector `u` under the
/// left-closed, right-open cell convention.
pub fn cell_counts(data: &DataSet, u: &[f64]) -> Result<CellCounts> {
    let splits = sorted_splits(u)?;
    let mut cells = Vec::with_capacity(u.len() + 1);
    let mut lo = 0usize;
    for &s in &splits {
        let hi = data.rank(s);
        if hi < data.len() && data.sorted_x[hi] == s {
            return Err(Error::SplitOnCovariate { split: s });
        }
        cells.push(data.counts_between(lo, hi));
        lo = hi;
    }
    cells.push(data.counts_between(lo, data.len()));
    // Duplicated split positions produce empty cells.
    cells.extend(std::iter::repeat_n((0, 0), u.len() - splits.len()));
    Ok(CellCounts { cells })
}

/// Draw `n` pairs under `P_f` from an existing generator.
pub fn sample_dataset_with(f: &dyn RegressionFunction, n: usize, rng: &mut Rng) -> DataSet {
    loop {
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let xi: f64 = rng.random();
            let v: f64 = rng.random();
            x.push(xi);
            y.push(v < f.value(xi));
        }
        // Covariate ties have probability ~n^2 2^-53; redraw if one occurs.
        if let Ok(data) = DataSet::new(x, y) {
            return data;
        }
    }
}

/// `n` i.i.d. pairs: `X` uniform on `[0, 1)`, `Y = 1{V < f(X)}` with `V` uniform.
pub fn sample_dataset(f: &dyn RegressionFunction, n: usize, seed: u64) -> DataSet {
    sample_dataset_with(f, n, &mut rng_from_seed(seed))
}

pub fn poisson_count_with(mean: f64, rng: &mut Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
    draw as usize
}

/// A Poisson(`mean`) count.
pub fn poisson_count(mean: f64, seed: u64) -> Result<usize> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(Error::param("mean", "must be finite and nonnegative"));
    }
    Ok(poisson_count_with(mean, &mut rng_from_seed(seed)))
}

/// A dataset of Poisson(`mean`) size from `P_f`.
pub fn sample_poisson_dataset_with(f: &dyn RegressionFunction, mean: f64, rng: &mut Rng) -> DataSet {
    let n = poisson_count_with(mean, rng);
    sample_dataset_with(f, n, rng)
}

/// Independently drop failures with probability `rho0` and successes with
/// probability `rho1`, keeping insertion order.
pub fn thin_dataset(data: &DataSet, rho0: f64, rho1: f64, seed: u64) -> Result<DataSet> {
    for (name, rho) in [("rho0", rho0), ("rho1", rho1)] {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::param(name, "removal probability must be in [0, 1]"));
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (xi, yi) in data.points() {
        let rho = if yi { rho1 } else { rho0 };
        let u: f64 = rng.random();
        if u >= rho {
            x.push(xi);
            y.push(yi);
        }
    }
    DataSet::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StepFunction;

    fn pts(p: &[(f64, u8)]) -> DataSet {
        DataSet::from_points(&p.iter().map(|&(x, y)| (x, y == 1)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn prefix_tracks_sorted_responses() {
        let d = pts(&[(0.9, 0), (0.1, 1), (0.5, 1)]);
        assert_eq!(d.sorted_x(), &[0.1, 0.5, 0.9]);
        assert_eq!(d.success_prefix(), &[0, 1, 2, 2]);
        assert_eq!(d.n_success(), 2);
        assert_eq!(d.n_failure(), 1);
        assert!((d.gaps().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(matches!(DataSet::new(vec![0.3, 0.3], vec![true, false]), Err(Error::DuplicateCovariate { .. })));
        assert!(matches!(DataSet::new(vec![1.2], vec![true]), Err(Error::CovariateOutOfRange { .. })));
    }

    #[test]
    fn cell_count_examples() {
        let d = pts(&[(0.25, 1), (0.75, 0)]);
        assert_eq!(cell_counts(&d, &[0.5]).unwrap().cells, vec![(1, 0), (0, 1)]);
        assert_eq!(cell_counts(&d, &[]).unwrap().cells, vec![(1, 1)]);
        let d = pts(&[(0.1, 1), (0.2, 1), (0.9, 0)]);
        assert_eq!(cell_counts(&d, &[0.6, 0.5]).unwrap().cells, vec![(2, 0), (0, 0), (0, 1)]);
    }

    #[test]
    fn split_on_covariate_is_an_error() {
        let d = pts(&[(0.25, 1), (0.75, 0)]);
        assert!(matches!(cell_counts(&d, &[0.25]), Err(Error::SplitOnCovariate { .. })));
        assert!(matches!(cell_counts(&d, &[1.0]), Err(Error::SplitOutOfRange { .. })));
    }

    #[test]
    fn degenerate_bernoulli() {
        let one = StepFunction::constant(1.0).unwrap();
        let zero = StepFunction::constant(0.0).unwrap();
        assert!(sample_dataset(&one, 100, 3).y().iter().all(|&y| y));
        assert!(sample_dataset(&zero, 100, 3).y().iter().all(|&y| !y));
    }

    #[test]
    fn success_rate_matches_level() {
        let f = StepFunction::constant(0.7).unwrap();
        let n = 100_000;
        let d = sample_dataset(&f, n, 11);
        let mean = d.n_success() as f64 / n as f64;
        assert!((mean - 0.7).abs() < 3.0 * (0.21f64 / n as f64).sqrt());
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = StepFunction::constant(0.4).unwrap();
        assert_eq!(sample_dataset(&f, 50, 9), sample_dataset(&f, 50, 9));
        assert_ne!(sample_dataset(&f, 50, 9), sample_dataset(&f, 50, 10));
    }

    #[test]
    fn poisson_moments() {
        assert_eq!(poisson_count(0.0, 1).unwrap(), 0);
        let reps = 10_000;
        let draws: Vec<f64> =
            (0..reps).map(|i| poisson_count(1000.0, crate::rng::replicate_seed(5, i)).unwrap() as f64).collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!((mean - 1000.0).abs() < 3.0 * (1000.0f64 / reps as f64).sqrt());
        assert!((0.9..=1.1).contains(&(var / mean)));
    }

    #[test]
    fn thinning_extremes() {
        let f = StepFunction::constant(0.5).unwrap();
        let d = sample_dataset(&f, 200, 1);
        assert_eq!(thin_dataset(&d, 0.0, 0.0, 2).unwrap(), d);
        assert!(thin_dataset(&d, 1.0, 1.0, 2).unwrap().is_empty());
        assert!(thin_dataset(&d, 1.5, 0.0, 2).is_err());
    }

    #[test]
    fn thinning_failures_raises_success_rate() {
        let p = 0.5;
        let eps = 0.2;
        let f = StepFunction::constant(p).unwrap();
        let d = sample_dataset(&f, 100_000, 4);
        let t = thin_dataset(&d, eps, 0.0, 5).unwrap();
        let rate = t.n_success() as f64 / t.len() as f64;
        let target = p / (1.0 - eps * (1.0 - p));
        let se = (target * (1.0 - target) / t.len() as f64).sqrt();
        assert!((rate - target).abs() < 3.0 * se, "rate {rate} target {target}");
    }
}
