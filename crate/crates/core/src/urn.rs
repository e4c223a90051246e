//! The rechargeable Pólya urn and its exact forward filter.
//!
//! Before each draw the urn is, with probability `r`, emptied and reseeded
//! with one red and one blue ball; a blue draw is recorded as `1`. Between
//! recharges it is an ordinary Pólya urn, so the composition is determined by
//! the draws since the last recharge. The filter therefore tracks a
//! distribution over `d`, the number of draws since the last recharge, and
//! reads the blue count off the observed suffix.

use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, replicate_seed, rng_from_seed, tag, Rng};

/// Largest block length accepted by [`mixing_distance`].
pub const MAX_MIXING_BLOCK: usize = 10;

/// `r = α / (1 + α)`.
pub fn recharge_prob(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::param("alpha", "must be nonnegative"));
    }
    if alpha.is_infinite() {
        return Ok(1.0);
    }
    Ok(alpha / (1.0 + alpha))
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::param("r", "recharge probability must be in (0, 1]"));
    }
    Ok(())
}

/// Urn composition; both counts are at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct UrnState {
    pub red: u32,
    pub blue: u32,
}

impl UrnState {
    pub const RECHARGED: UrnState = UrnState { red: 1, blue: 1 };

    pub fn blue_prob(&self) -> f64 {
        self.blue as f64 / (self.red + self.blue) as f64
    }
}

/// Draws `burn_in + steps` values from the recharge state and keeps the last
/// `steps`, with the composition before each kept draw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UrnTrace {
    pub y: Vec<bool>,
    pub states: Vec<UrnState>,
}

pub fn simulate_urn_with(r: f64, steps: usize, burn_in: usize, rng: &mut Rng) -> Result<UrnTrace> {
    check_r(r)?;
    let mut state = UrnState::RECHARGED;
    let mut y = Vec::with_capacity(steps);
    let mut states = Vec::with_capacity(steps);
    for i in 0..burn_in + steps {
        if rng.random::<f64>() < r {
            state = UrnState::RECHARGED;
        }
        let blue = rng.random::<f64>() < state.blue_prob();
        if i >= burn_in {
            states.push(state);
            y.push(blue);
        }
        if blue {
            state.blue += 1;
        } else {
            state.red += 1;
        }
    }
    Ok(UrnTrace { y, states })
}

pub fn simulate_urn(r: f64, steps: usize, burn_in: usize, seed: u64) -> Result<UrnTrace> {
    simulate_urn_with(r, steps, burn_in, &mut rng_from_seed(derive_seed(seed, tag::URN)))
}

/// Exact conditional law of the urn composition given the observed draws,
/// started from the recharge state.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnFilter {
    r: f64,
    /// `weights[d]` = P(d draws since the last recharge | observed draws).
    weights: Vec<f64>,
    /// Blue counts among the first `k` observations.
    blue_prefix: Vec<u32>,
    log_prob: f64,
}

impl UrnFilter {
    pub fn new(r: f64) -> Result<Self> {
        check_r(r)?;
        Ok(UrnFilter { r, weights: vec![1.0], blue_prefix: vec![0], log_prob: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.blue_prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn state(&self, d: usize) -> UrnState {
        let k = self.len();
        let blue = self.blue_prefix[k] - self.blue_prefix[k - d];
        UrnState { red: 1 + d as u32 - blue, blue: 1 + blue }
    }

    /// Current composition distribution (before the next recharge step).
    pub fn states(&self) -> Vec<(UrnState, f64)> {
        self.weights.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(d, &w)| (self.state(d), w)).collect()
    }

    /// Mass on each `d` after the recharge step preceding the next draw.
    fn predicted(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.r;
        self.weights.iter().enumerate().map(move |(d, &w)| (d, if d == 0 { r + (1.0 - r) * w } else { (1.0 - r) * w }))
    }

    /// `P(next draw = 1 | observed draws)`.
    pub fn q(&self) -> f64 {
        self.predicted().map(|(d, w)| w * self.state(d).blue_prob()).sum()
    }

    /// Condition on the next draw `y`; returns its predictive probability.
    pub fn observe(&mut self, y: bool) -> f64 {
        let mut next = vec![0.0; self.weights.len() + 1];
        let mut total = 0.0;
        for (d, w) in self.predicted() {
            let p1 = self.state(d).blue_prob();
            let lik = if y { p1 } else { 1.0 - p1 };
            next[d + 1] = w * lik;
            total += w * lik;
        }
        for w in &mut next {
            *w /= total;
        }
        self.weights = next;
        let last = *self.blue_prefix.last().expect("nonempty");
        self.blue_prefix.push(last + y as u32);
        self.log_prob += total.ln();
        total
    }

    /// `ln q(y_1, ..., y_k)` for the observations so far.
    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }
}

/// `q(Y_{k+1} = 1 | Y_1..Y_k = y_prefix)`.
pub fn filter_q(y_prefix: &[bool], r: f64) -> Result<f64> {
    let mut f = UrnFilter::new(r)?;
    for &y in y_prefix {
        f.observe(y);
    }
    Ok(f.q())
}

/// `ln q(y_1, ..., y_n)`, the total probability of a draw sequence.
pub fn sequence_log_prob(y: &[bool], r: f64) -> Result<f64> {
    let mut f = UrnFilter::new(r)?;
    for &v in y {
        f.observe(v);
    }
    Ok(f.log_prob())
}

/// Estimate of `E_P ln(q(Y_{k+1} | Y_1..Y_k) / p(Y_{k+1}))` under i.i.d.
/// Bernoulli-`p` draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyTerm {
    pub k: usize,
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
}

/// One filter pass per replicate serves every `k` in `k_list`.
pub fn relative_entropy_terms(
    p: f64,
    r: f64,
    k_list: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<EntropyTerm>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must be in (0, 1)"));
    }
    check_r(r)?;
    if replicates < 2 {
        return Err(Error::param("replicates", "need at least 2 replicates"));
    }
    let k_max = k_list.iter().copied().max().unwrap_or(0);
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let per_rep: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(replicate_seed(derive_seed(seed, tag::URN), i));
            let mut filter = UrnFilter::new(r).expect("checked");
            let mut terms = vec![0.0; k_max + 1];
            for term in terms.iter_mut() {
                let y = rng.random::<f64>() < p;
                let q = filter.observe(y);
                *term = q.ln() - if y { lp } else { lq };
            }
            k_list.iter().map(|&k| terms[k]).collect()
        })
        .collect();
    Ok(k_list
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let vals: Vec<f64> = per_rep.iter().map(|v| v[j]).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            EntropyTerm { k, mean, std_error: (var / n).sqrt(), replicates }
        })
        .collect())
}

/// Exact `E_P ln(q(Y_{k+1} | Y_1..Y_k) / p(Y_{k+1}))` by enumerating all `2^k` prefixes.
pub fn exact_relative_entropy_term(p: f64, r: f64, k: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must be in (0, 1)"));
    }
    if k > 24 {
        return Err(Error::param("k", "exact enumeration limited to k <= 24"));
    }
    fn walk(filter: &UrnFilter, weight: f64, depth: usize, p: f64) -> f64 {
        if depth == 0 {
            let q = filter.q();
            return weight * (p * (q / p).ln() + (1.0 - p) * ((1.0 - q) / (1.0 - p)).ln());
        }
        let mut total = 0.0;
        for (y, py) in [(true, p), (false, 1.0 - p)] {
            let mut next = filter.clone();
            next.observe(y);
            total += walk(&next, weight * py, depth - 1, p);
        }
        total
    }
    Ok(walk(&UrnFilter::new(r)?, 1.0, k, p))
}

pub fn write_terms_csv(terms: &[EntropyTerm], comments: &[String], mut out: impl Write) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "mean", "std_error", "replicates"]).map_err(std::io::Error::from)?;
    for t in terms {
        w.write_record([t.k.to_string(), t.mean.to_string(), t.std_error.to_string(), t.replicates.to_string()])
            .map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// Joint law over `(draws since recharge, blue among them)`.
type JointState = std::collections::BTreeMap<(u32, u32), f64>;

fn recharge_step(states: &JointState, r: f64) -> JointState {
    let mut out = JointState::new();
    for (&s, &w) in states {
        *out.entry(s).or_insert(0.0) += (1.0 - r) * w;
    }
    *out.entry((0, 0)).or_insert(0.0) += r;
    out
}

fn blue_prob(d: u32, b: u32) -> f64 {
    (1 + b) as f64 / (2 + d) as f64
}

/// One unobserved draw.
fn propagate(states: &JointState, r: f64) -> JointState {
    let mut out = JointState::new();
    for (&(d, b), &w) in &recharge_step(states, r) {
        let p1 = blue_prob(d, b);
        *out.entry((d + 1, b + 1)).or_insert(0.0) += w * p1;
        *out.entry((d + 1, b)).or_insert(0.0) += w * (1.0 - p1);
    }
    out
}

/// Probabilities of all `2^m` blocks, indexed by the bits of the block.
fn block_law(start: &JointState, r: f64, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; 1 << m];
    fn rec(states: &JointState, r: f64, depth: usize, m: usize, code: usize, mass: f64, out: &mut [f64]) {
        if depth == m {
            out[code] = mass;
            return;
        }
        let pre = recharge_step(states, r);
        for y in [false, true] {
            let mut next = JointState::new();
            let mut total = 0.0;
            for (&(d, b), &w) in &pre {
                let p1 = blue_prob(d, b);
                let lik = w * if y { p1 } else { 1.0 - p1 };
                if lik > 0.0 {
                    *next.entry((d + 1, b + y as u32)).or_insert(0.0) += lik;
                    total += lik;
                }
            }
            if total > 0.0 {
                next.values_mut().for_each(|w| *w /= total);
                rec(&next, r, depth + 1, m, code | (y as usize) << depth, mass * total, out);
            }
        }
    }
    rec(start, r, 0, m, 0, 1.0, &mut out);
    out
}

fn state_after(prefix: &[bool], r: f64) -> JointState {
    let mut f = UrnFilter::new(r).expect("checked");
    for &y in prefix {
        f.observe(y);
    }
    let k = f.len();
    let mut states = JointState::new();
    for (d, &w) in f.weights.iter().enumerate() {
        if w > 0.0 {
            let blue = f.blue_prefix[k] - f.blue_prefix[k - d];
            states.insert((d as u32, blue), w);
        }
    }
    states
}

/// Total-variation distance between the law of `(Y_{m+1}, ..., Y_{2m})`
/// given each observed `prefix` (ending at time 0) and the law of the same
/// block from the recharge state, both computed exactly.
pub fn mixing_distance(m: usize, r: f64, prefixes: &[Vec<bool>]) -> Result<Vec<f64>> {
    check_r(r)?;
    if m > MAX_MIXING_BLOCK {
        return Err(Error::param("m", format!("exact enumeration limited to m <= {MAX_MIXING_BLOCK}")));
    }
    let advance = |mut s: JointState| {
        for _ in 0..m {
            s = propagate(&s, r);
        }
        s
    };
    let reference = block_law(&advance(state_after(&[], r)), r, m);
    Ok(prefixes
        .iter()
        .map(|prefix| {
            let law = block_law(&advance(state_after(prefix, r)), r, m);
            0.5 * law.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum::<f64>()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recharge_probabilities() {
        assert_eq!(recharge_prob(0.0).unwrap(), 0.0);
        assert_eq!(recharge_prob(1.0).unwrap(), 0.5);
        assert!((recharge_prob(1e6).unwrap() - 1.0).abs() < 1e-6);
        assert!(recharge_prob(-1.0).is_err());
    }

    #[test]
    fn filter_examples() {
        assert_eq!(filter_q(&[], 0.5).unwrap(), 0.5);
        assert!((filter_q(&[true], 0.5).unwrap() - 7.0 / 12.0).abs() < 1e-15);
        let mut prev = 0.5;
        for len in 1..=20 {
            let q = filter_q(&vec![true; len], 0.5).unwrap();
            assert!(q > prev && q < 1.0);
            prev = q;
        }
    }

    #[test]
    fn zero_recharge_is_rejected() {
        assert!(simulate_urn(0.0, 10, 0, 1).is_err());
        assert!(UrnFilter::new(0.0).is_err());
    }

    #[test]
    fn filter_states_sum_to_one() {
        let mut f = UrnFilter::new(0.3).unwrap();
        for y in [true, false, false, true, true] {
            f.observe(y);
        }
        let total: f64 = f.states().iter().map(|s| s.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(f.states().iter().all(|(s, _)| s.red >= 1 && s.blue >= 1));
    }

    #[test]
    fn zero_order_term_vanishes_at_half() {
        let t = relative_entropy_terms(0.5, 0.5, &[0], 100, 1).unwrap();
        assert!(t[0].mean.abs() < 1e-15);
        assert_eq!(exact_relative_entropy_term(0.5, 0.3, 0).unwrap(), 0.0);
    }

    #[test]
    fn full_recharge_mixes_immediately() {
        let tv = mixing_distance(3, 1.0, &[vec![true, true, true], vec![false]]).unwrap();
        assert!(tv.iter().all(|&t| t.abs() < 1e-15));
        assert!(mixing_distance(11, 0.5, &[]).is_err());
    }
}
