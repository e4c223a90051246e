//! Regression functions on `[0, 1]`.
//!
//! Two concrete representations are provided: [`StepFunction`] (finitely many
//! jumps) and [`GridFunction`] (piecewise-linear interpolation of values on an
//! equispaced grid). Both are affine between consecutive knots, so cell
//! averages, `L^1` distances and squared `L^2` distances can be integrated
//! exactly piece by piece.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A regression function `f: [0, 1] -> [0, 1]` that is affine between knots.
pub trait RegressionFunction: Send + Sync {
    /// Value at `x`.
    fn value(&self, x: f64) -> f64;

    /// Points of `(0, 1)` between which the function is affine, increasing.
    fn knots(&self) -> Vec<f64>;

    /// One-sided values at the ends of `[a, b]`, which must not contain a knot
    /// in its interior.
    fn piece_ends(&self, a: f64, b: f64) -> (f64, f64);
}

/// Piecewise-constant function with half-open cells `[u_(j), u_(j+1))`; the
/// last cell is closed at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStep")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

#[derive(Deserialize)]
struct RawStep {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl TryFrom<RawStep> for StepFunction {
    type Error = Error;

    fn try_from(raw: RawStep) -> Result<Self> {
        StepFunction::new(raw.breakpoints, raw.levels)
    }
}

fn check_level(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidFunction(format!("level {p} outside [0, 1]")));
    }
    Ok(())
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidFunction(format!(
                "{} breakpoints need {} levels, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                levels.len()
            )));
        }
        for &b in &breakpoints {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::InvalidFunction(format!("breakpoint {b} outside (0, 1)")));
            }
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFunction("breakpoints must be strictly increasing".into()));
        }
        for &p in &levels {
            check_level(p)?;
        }
        Ok(StepFunction { breakpoints, levels })
    }

    pub fn constant(p: f64) -> Result<Self> {
        StepFunction::new(Vec::new(), vec![p])
    }

    /// Two-level step with a single jump at `b`.
    pub fn two_level(left: f64, right: f64, b: f64) -> Result<Self> {
        StepFunction::new(vec![b], vec![left, right])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn n_cells(&self) -> usize {
        self.levels.len()
    }

    /// Index of the cell containing `x`.
    pub fn cell_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    /// Cell `i` as `(left, right)`.
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { 0.0 } else { self.breakpoints[i - 1] };
        let hi = if i == self.breakpoints.len() { 1.0 } else { self.breakpoints[i] };
        (lo, hi)
    }

    pub fn is_constant(&self) -> bool {
        self.levels.windows(2).all(|w| w[0] == w[1])
    }
}

impl RegressionFunction for StepFunction {
    fn value(&self, x: f64) -> f64 {
        self.levels[self.cell_index(x)]
    }

    fn knots(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }

    fn piece_ends(&self, a: f64, b: f64) -> (f64, f64) {
        let v = self.value(0.5 * (a + b));
        (v, v)
    }
}

/// Piecewise-linear interpolation of values at the `K + 1` nodes `j / K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridFunction {
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    values: Vec<f64>,
}

impl TryFrom<RawGrid> for GridFunction {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridFunction::new(raw.values)
    }
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidFunction("grid needs at least two nodes".into()));
        }
        for &p in &values {
            check_level(p)?;
        }
        Ok(GridFunction { values })
    }

    /// Sample `f` at the nodes of a `k`-panel grid.
    pub fn from_fn(k: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "grid needs k >= 1"));
        }
        GridFunction::new((0..=k).map(|j| f(j as f64 / k as f64)).collect())
    }

    /// `0.5 + 0.45 sin(4πx)` on 1024 panels: a smooth truth that no step
    /// function with few cells approximates well.
    pub fn smooth_example() -> Self {
        GridFunction::from_fn(1024, |x| 0.5 + 0.45 * (4.0 * std::f64::consts::PI * x).sin())
            .expect("values lie in [0.05, 0.95]")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of panels `K`.
    pub fn panels(&self) -> usize {
        self.values.len() - 1
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.panels() as f64
    }
}

impl RegressionFunction for GridFunction {
    fn value(&self, x: f64) -> f64 {
        let k = self.panels();
        let pos = x.clamp(0.0, 1.0) * k as f64;
        let i = (pos.floor() as usize).min(k - 1);
        let t = pos - i as f64;
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        (v0 + t * (v1 - v0)).clamp(0.0, 1.0)
    }

    fn knots(&self) -> Vec<f64> {
        (1..self.panels()).map(|j| self.node(j)).collect()
    }

    fn piece_ends(&self, a: f64, b: f64) -> (f64, f64) {
        // Evaluate from inside the piece so the segment is unambiguous at nodes.
        let k = self.panels();
        let i = ((0.5 * (a + b) * k as f64).floor() as usize).min(k - 1);
        let (x0, v0, v1) = (self.node(i), self.values[i], self.values[i + 1]);
        let slope = (v1 - v0) * k as f64;
        (v0 + slope * (a - x0), v0 + slope * (b - x0))
    }
}

/// Either representation; serializes as `{"breakpoints", "levels"}` or `{"values"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Function {
    Step(StepFunction),
    Grid(GridFunction),
}

impl Function {
    pub fn as_step(&self) -> Option<&StepFunction> {
        match self {
            Function::Step(s) => Some(s),
            Function::Grid(_) => None,
        }
    }
}

impl From<StepFunction> for Function {
    fn from(s: StepFunction) -> Self {
        Function::Step(s)
    }
}

impl From<GridFunction> for Function {
    fn from(g: GridFunction) -> Self {
        Function::Grid(g)
    }
}

impl RegressionFunction for Function {
    fn value(&self, x: f64) -> f64 {
        match self {
            Function::Step(s) => s.value(x),
            Function::Grid(g) => g.value(x),
        }
    }

    fn knots(&self) -> Vec<f64> {
        match self {
            Function::Step(s) => s.knots(),
            Function::Grid(g) => g.knots(),
        }
    }

    fn piece_ends(&self, a: f64, b: f64) -> (f64, f64) {
        match self {
            Function::Step(s) => s.piece_ends(a, b),
            Function::Grid(g) => g.piece_ends(a, b),
        }
    }
}

/// Sorted union of `{lo, hi}` and the knots of every function strictly inside `(lo, hi)`.
fn merged_knots(fs: &[&dyn RegressionFunction], lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for f in fs {
        pts.extend(f.knots().into_iter().filter(|&k| k > lo && k < hi));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Exact integral of `f` over `[a, b]`.
pub fn integral(f: &dyn RegressionFunction, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    merged_knots(&[f], a, b)
        .windows(2)
        .map(|w| {
            let (v0, v1) = f.piece_ends(w[0], w[1]);
            0.5 * (v0 + v1) * (w[1] - w[0])
        })
        .sum()
}

/// Mean of `f` over `[a, b]`; a cell without interior knots returns the piece
/// midpoint value directly, so constant pieces are reproduced bit for bit.
pub fn cell_mean(f: &dyn RegressionFunction, a: f64, b: f64) -> f64 {
    let knots = merged_knots(&[f], a, b);
    let mean = if knots.len() == 2 {
        let (v0, v1) = f.piece_ends(a, b);
        0.5 * (v0 + v1)
    } else {
        integral(f, a, b) / (b - a)
    };
    mean.clamp(0.0, 1.0)
}

/// Sorted, deduplicated copy of a split vector, validated to lie in `(0, 1)`.
pub fn sorted_splits(u: &[f64]) -> Result<Vec<f64>> {
    let mut s = u.to_vec();
    for &v in &s {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::SplitOutOfRange { split: v });
        }
    }
    s.sort_by(f64::total_cmp);
    s.dedup();
    Ok(s)
}

/// `f̄_u`: the step function whose level on each cell of `u` is the mean of `f` there.
pub fn average_onto(f: &dyn RegressionFunction, u: &[f64]) -> Result<StepFunction> {
    let splits = sorted_splits(u)?;
    let mut edges = Vec::with_capacity(splits.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(&splits);
    edges.push(1.0);
    let levels = edges.windows(2).map(|w| cell_mean(f, w[0], w[1])).collect();
    StepFunction::new(splits, levels)
}

/// `∫ |d|` over `[a, b]` for `d` affine with end values `d0`, `d1`.
fn abs_affine_integral(d0: f64, d1: f64, len: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        0.5 * (d0.abs() + d1.abs()) * len
    } else {
        0.5 * len * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
    }
}

/// Exact `‖f − g‖₁` on `[0, 1]`.
pub fn l1_distance(f: &dyn RegressionFunction, g: &dyn RegressionFunction) -> f64 {
    merged_knots(&[f, g], 0.0, 1.0)
        .windows(2)
        .map(|w| {
            let (f0, f1) = f.piece_ends(w[0], w[1]);
            let (g0, g1) = g.piece_ends(w[0], w[1]);
            abs_affine_integral(f0 - g0, f1 - g1, w[1] - w[0])
        })
        .sum()
}

/// Exact `‖f − g‖₂²` on `[0, 1]`.
pub fn l2_squared(f: &dyn RegressionFunction, g: &dyn RegressionFunction) -> f64 {
    merged_knots(&[f, g], 0.0, 1.0)
        .windows(2)
        .map(|w| {
            let (f0, f1) = f.piece_ends(w[0], w[1]);
            let (g0, g1) = g.piece_ends(w[0], w[1]);
            let (d0, d1) = (f0 - g0, f1 - g1);
            (w[1] - w[0]) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0
        })
        .sum()
}
