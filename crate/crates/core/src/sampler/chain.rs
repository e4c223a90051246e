use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{log_beta, log_z_cells};
use crate::model::{cell_counts, CellCounts, DataSet};
use crate::rng::{derive_seed, rng_from_seed, tag, Rng};

use super::HierarchyPrior;

/// Absolute tolerance for the periodic cache check.
pub const CACHE_TOLERANCE: f64 = 1e-9;

/// Move probabilities and the move-proposal half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningParams {
    pub p_birth: f64,
    pub p_death: f64,
    pub p_move: f64,
    pub move_width: f64,
}

impl Default for TuningParams {
    fn default() -> Self {
        TuningParams { p_birth: 0.35, p_death: 0.35, p_move: 0.3, move_width: 0.05 }
    }
}

impl TuningParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_birth > 0.0 && self.p_death > 0.0 && self.p_move > 0.0) {
            return Err(Error::param("tuning", "move probabilities must be positive"));
        }
        if self.p_birth != self.p_death {
            return Err(Error::param("tuning", "birth and death probabilities must be equal"));
        }
        if (self.p_birth + self.p_death + self.p_move - 1.0).abs() > 1e-12 {
            return Err(Error::param("tuning", "move probabilities must sum to 1"));
        }
        if !(self.move_width > 0.0 && self.move_width <= 1.0) {
            return Err(Error::param("move_width", "must be in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Birth,
    Death,
    Move,
}

/// A split configuration, stored sorted, with cached cell counts and `ln Z_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    u: Vec<f64>,
    /// `ranks[i]` = number of covariates below `u[i]`.
    ranks: Vec<usize>,
    cells: Vec<(u32, u32)>,
    log_z: f64,
}

fn counts_sum(a: (u32, u32), b: (u32, u32)) -> (u32, u32) {
    (a.0 + b.0, a.1 + b.1)
}

/// `Σ ln B(added) − Σ ln B(removed)` after cancelling cells common to both, so
/// that a change which leaves the occupancy pattern intact yields exactly 0.
fn cell_delta(mut removed: Vec<(u32, u32)>, mut added: Vec<(u32, u32)>) -> f64 {
    removed.sort_unstable();
    added.sort_unstable();
    let (mut i, mut j) = (0, 0);
    let (mut plus, mut minus) = (0.0, 0.0);
    while i < removed.len() || j < added.len() {
        match (removed.get(i), added.get(j)) {
            (Some(r), Some(a)) if r == a => {
                i += 1;
                j += 1;
            }
            (Some(r), Some(a)) if r < a => {
                minus += log_beta(r.0, r.1);
                i += 1;
            }
            (Some(r), None) => {
                minus += log_beta(r.0, r.1);
                i += 1;
            }
            (_, Some(a)) => {
                plus += log_beta(a.0, a.1);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    plus - minus
}

impl ChainState {
    pub fn new(data: &DataSet, u: &[f64]) -> Result<Self> {
        let mut sorted = u.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("u", "split points must be distinct"));
        }
        let counts = cell_counts(data, &sorted)?;
        let ranks = sorted.iter().map(|&s| data.rank(s)).collect();
        let log_z = log_z_cells(&counts).ln();
        Ok(ChainState { u: sorted, ranks, cells: counts.cells, log_z })
    }

    pub fn empty(data: &DataSet) -> Self {
        ChainState::new(data, &[]).expect("no splits")
    }

    pub fn m(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn cells(&self) -> &[(u32, u32)] {
        &self.cells
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    fn bounds(&self, k: usize, n: usize) -> (usize, usize) {
        let lo = if k == 0 { 0 } else { self.ranks[k - 1] };
        let hi = if k == self.u.len() { n } else { self.ranks[k] };
        (lo, hi)
    }

    /// Rank of a proposed split, or `None` if it hits a covariate or an
    /// existing split (both probability zero).
    fn proposal_rank(&self, data: &DataSet, v: f64) -> Option<usize> {
        if !(v > 0.0 && v < 1.0) {
            return None;
        }
        let r = data.rank(v);
        if r < data.len() && data.sorted_x()[r] == v {
            return None;
        }
        let k = self.u.partition_point(|&s| s < v);
        if k < self.u.len() && self.u[k] == v {
            return None;
        }
        Some(r)
    }

    fn birth_change(&self, data: &DataSet, v: f64, r: usize) -> (usize, (u32, u32), (u32, u32), f64) {
        let k = self.u.partition_point(|&s| s < v);
        let (lo, hi) = self.bounds(k, data.len());
        let left = data.counts_between(lo, r);
        let right = data.counts_between(r, hi);
        let delta = cell_delta(vec![self.cells[k]], vec![left, right]);
        (k, left, right, delta)
    }

    fn insert(&mut self, data: &DataSet, v: f64, r: usize) -> f64 {
        let (k, left, right, delta) = self.birth_change(data, v, r);
        self.u.insert(k, v);
        self.ranks.insert(k, r);
        self.cells[k] = left;
        self.cells.insert(k + 1, right);
        self.log_z += delta;
        delta
    }

    fn death_delta(&self, j: usize) -> f64 {
        let (a, b) = (self.cells[j], self.cells[j + 1]);
        cell_delta(vec![a, b], vec![counts_sum(a, b)])
    }

    fn remove(&mut self, j: usize) -> f64 {
        let delta = self.death_delta(j);
        let merged = counts_sum(self.cells[j], self.cells[j + 1]);
        self.u.remove(j);
        self.ranks.remove(j);
        self.cells[j] = merged;
        self.cells.remove(j + 1);
        self.log_z += delta;
        delta
    }

    /// Change in `ln Z_u` from moving split `j` to `v` (rank `r`), computed as
    /// one cancelled cell multiset over the remove-then-insert path.
    fn move_delta(&self, data: &DataSet, j: usize, v: f64, r: usize) -> f64 {
        let n = data.len();
        let m = self.u.len();
        let (a, b) = (self.cells[j], self.cells[j + 1]);
        let merged = counts_sum(a, b);
        // Position of v among the splits with j removed.
        let k0 = self.u.partition_point(|&s| s < v);
        let k = if k0 > j { k0 - 1 } else { k0 };
        let rank_without = |i: usize| if i < j { self.ranks[i] } else { self.ranks[i + 1] };
        let host = match k.cmp(&j) {
            std::cmp::Ordering::Equal => merged,
            std::cmp::Ordering::Less => self.cells[k],
            std::cmp::Ordering::Greater => self.cells[k + 1],
        };
        let lo = if k == 0 { 0 } else { rank_without(k - 1) };
        let hi = if k == m - 1 { n } else { rank_without(k) };
        let left = data.counts_between(lo, r);
        let right = data.counts_between(r, hi);
        cell_delta(vec![a, b, host], vec![merged, left, right])
    }

    fn apply_move(&mut self, data: &DataSet, j: usize, v: f64, r: usize, delta: f64) {
        let before = self.log_z;
        self.remove(j);
        self.insert(data, v, r);
        self.log_z = before + delta;
    }

    /// Recompute counts and `ln Z_u` from scratch; error if the cache drifted.
    pub fn verify(&mut self, data: &DataSet) -> Result<()> {
        let fresh = cell_counts(data, &self.u)?;
        let recomputed = log_z_cells(&fresh).ln();
        if fresh.cells != self.cells || (recomputed - self.log_z).abs() > CACHE_TOLERANCE {
            return Err(Error::CacheMismatch { cached: self.log_z, recomputed });
        }
        self.log_z = recomputed;
        Ok(())
    }

    pub fn counts(&self) -> CellCounts {
        CellCounts { cells: self.cells.clone() }
    }
}

/// `ln ν_m + ln Z_u`, unnormalized.
pub fn log_target(state: &ChainState, nu: &HierarchyPrior) -> f64 {
    nu.log_mass(state.m()) + state.log_z
}

/// Outcome of one Metropolis–Hastings step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
}

fn accept(log_ratio: f64, rng: &mut Rng) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    let v: f64 = rng.random();
    v.ln() < log_ratio
}

/// One reversible-jump step, updating `state` in place.
///
/// Splits are stored sorted, so the target on the ordered simplex carries a
/// factor `m!`; the birth acceptance ratio is therefore
/// `ν_{m+1} Z_{u+v} p_death / (ν_m Z_u p_birth)`, the `(m + 1)` from the
/// reverse death choice cancelling against `(m + 1)! / m!`.
pub fn mh_step_with(
    state: &mut ChainState,
    data: &DataSet,
    nu: &HierarchyPrior,
    tuning: &TuningParams,
    rng: &mut Rng,
) -> StepOutcome {
    let pick: f64 = rng.random();
    let m = state.m();
    let jump = (tuning.p_death / tuning.p_birth).ln();
    if pick < tuning.p_birth {
        let v: f64 = rng.random();
        let accepted = match state.proposal_rank(data, v) {
            Some(r) => {
                let (_, _, _, delta) = state.birth_change(data, v, r);
                let ratio = delta + nu.log_mass(m + 1) - nu.log_mass(m) + jump;
                let ok = accept(ratio, rng);
                if ok {
                    state.insert(data, v, r);
                }
                ok
            }
            None => false,
        };
        StepOutcome { kind: MoveKind::Birth, accepted }
    } else if pick < tuning.p_birth + tuning.p_death {
        if m == 0 {
            return StepOutcome { kind: MoveKind::Death, accepted: false };
        }
        let j = rng.random_range(0..m);
        let ratio = state.death_delta(j) + nu.log_mass(m - 1) - nu.log_mass(m) - jump;
        let accepted = accept(ratio, rng);
        if accepted {
            state.remove(j);
        }
        StepOutcome { kind: MoveKind::Death, accepted }
    } else {
        if m == 0 {
            return StepOutcome { kind: MoveKind::Move, accepted: false };
        }
        let j = rng.random_range(0..m);
        let step: f64 = rng.random_range(-tuning.move_width..tuning.move_width);
        let mut v = state.u[j] + step;
        if v < 0.0 {
            v = -v;
        } else if v > 1.0 {
            v = 2.0 - v;
        }
        if v == state.u[j] {
            return StepOutcome { kind: MoveKind::Move, accepted: true };
        }
        let accepted = match state.proposal_rank(data, v) {
            Some(r) => {
                let delta = state.move_delta(data, j, v, r);
                let ok = accept(delta, rng);
                if ok {
                    state.apply_move(data, j, v, r, delta);
                }
                ok
            }
            None => false,
        };
        StepOutcome { kind: MoveKind::Move, accepted }
    }
}

/// One step with a fresh generator seeded from `seed`.
pub fn mh_step(
    state: &ChainState,
    data: &DataSet,
    nu: &HierarchyPrior,
    tuning: &TuningParams,
    seed: u64,
) -> ChainState {
    let mut next = state.clone();
    mh_step_with(&mut next, data, nu, tuning, &mut rng_from_seed(seed));
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSettings {
    pub n_iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub tuning: TuningParams,
    /// Steps between full cache recomputations.
    pub verify_every: usize,
}

impl Default for ChainSettings {
    fn default() -> Self {
        ChainSettings {
            n_iters: 200_000,
            burn_in: 50_000,
            thin: 10,
            tuning: TuningParams::default(),
            verify_every: 10_000,
        }
    }
}

impl ChainSettings {
    pub fn validate(&self) -> Result<()> {
        self.tuning.validate()?;
        if self.n_iters < self.burn_in {
            return Err(Error::param("n_iters", "must be at least burn_in"));
        }
        if self.thin == 0 {
            return Err(Error::param("thin", "must be at least 1"));
        }
        if self.verify_every == 0 {
            return Err(Error::param("verify_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn n_retained(&self) -> usize {
        (self.n_iters - self.burn_in) / self.thin
    }
}

/// Proposal and acceptance counts for one move type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub birth: MoveStats,
    pub death: MoveStats,
    #[serde(rename = "move")]
    pub shift: MoveStats,
    pub verifications: u64,
}

impl AcceptanceStats {
    fn record(&mut self, outcome: StepOutcome) {
        let s = match outcome.kind {
            MoveKind::Birth => &mut self.birth,
            MoveKind::Death => &mut self.death,
            MoveKind::Move => &mut self.shift,
        };
        s.proposed += 1;
        s.accepted += outcome.accepted as u64;
    }
}

/// One retained sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub m: usize,
    pub u: Vec<f64>,
    pub log_target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub samples: Vec<ChainSample>,
    pub stats: AcceptanceStats,
}

impl ChainOutput {
    /// Empirical distribution of `m` over the retained samples.
    pub fn m_frequencies(&self, m_max: usize) -> Vec<f64> {
        let mut freq = vec![0.0; m_max + 1];
        for s in &self.samples {
            if s.m <= m_max {
                freq[s.m] += 1.0;
            }
        }
        let total = self.samples.len().max(1) as f64;
        freq.iter().map(|c| c / total).collect()
    }

    /// One JSON object per line: `{"m":..,"u":[..],"log_target":..}`.
    pub fn write_json_lines(&self, mut out: impl Write) -> Result<()> {
        for s in &self.samples {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn initial_state(data: &DataSet, nu: &HierarchyPrior, rng: &mut Rng) -> Result<ChainState> {
    let m0 = (0..10_000).find(|&m| nu.log_mass(m) > f64::NEG_INFINITY).ok_or(Error::ZeroWeights)?;
    loop {
        let u: Vec<f64> = (0..m0).map(|_| rng.random()).collect();
        if let Ok(state) = ChainState::new(data, &u) {
            if state.u.iter().all(|&s| s > 0.0) {
                return Ok(state);
            }
        }
    }
}

/// Run a chain from the smallest `m` with prior mass, calling `visit` on every
/// retained state (after burn-in, every `thin`-th step).
pub fn run_chain_with(
    data: &DataSet,
    nu: &HierarchyPrior,
    settings: &ChainSettings,
    seed: u64,
    mut visit: impl FnMut(&ChainState),
) -> Result<AcceptanceStats> {
    settings.validate()?;
    let mut rng = rng_from_seed(derive_seed(seed, tag::CHAIN));
    let mut state = initial_state(data, nu, &mut rng)?;
    let mut stats = AcceptanceStats::default();
    for it in 1..=settings.n_iters {
        let outcome = mh_step_with(&mut state, data, nu, &settings.tuning, &mut rng);
        stats.record(outcome);
        if it % settings.verify_every == 0 {
            state.verify(data)?;
            stats.verifications += 1;
        }
        if it > settings.burn_in && (it - settings.burn_in).is_multiple_of(settings.thin) {
            visit(&state);
        }
    }
    state.verify(data)?;
    stats.verifications += 1;
    Ok(stats)
}

pub fn run_chain(data: &DataSet, nu: &HierarchyPrior, settings: &ChainSettings, seed: u64) -> Result<ChainOutput> {
    let mut samples = Vec::with_capacity(settings.n_retained());
    let stats = run_chain_with(data, nu, settings, seed, |s| {
        samples.push(ChainSample { m: s.m(), u: s.u.clone(), log_target: log_target(s, nu) });
    })?;
    Ok(ChainOutput { samples, stats })
}
