//! Shannon entropy in nats and the entropy functional `H(f) = ∫ H(f(x)) dx`.

use crate::error::Result;
use crate::model::{average_onto, RegressionFunction};

/// Minimum number of Simpson panels used for non-constant pieces.
pub const MIN_SIMPSON_PANELS: usize = 1024;

fn x_log_x(x: f64) -> f64 {
    if x < 1e-300 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `H(p) = −p ln p − (1 − p) ln(1 − p)`, with `H(0) = H(1) = 0`.
pub fn shannon(p: f64) -> f64 {
    (-x_log_x(p) - x_log_x(1.0 - p)).max(0.0)
}

/// `∫₀¹ H(f(x)) dx`.
///
/// Constant pieces are integrated exactly, so step functions are exact.
/// Affine pieces use composite Simpson with at least [`MIN_SIMPSON_PANELS`]
/// panels in total, aligned to the knots of `f`.
pub fn entropy_functional(f: &dyn RegressionFunction) -> f64 {
    let mut edges = vec![0.0];
    edges.extend(f.knots());
    edges.push(1.0);
    let pieces = edges.len() - 1;
    let per_piece = MIN_SIMPSON_PANELS.div_ceil(pieces).next_multiple_of(2);
    edges
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (v0, v1) = f.piece_ends(a, b);
            if v0 == v1 {
                return (b - a) * shannon(v0);
            }
            let h = (b - a) / per_piece as f64;
            let at = |t: f64| shannon((v0 + (v1 - v0) * t).clamp(0.0, 1.0));
            let mut sum = at(0.0) + at(1.0);
            for i in 1..per_piece {
                let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
                sum += weight * at(i as f64 / per_piece as f64);
            }
            sum * h / 3.0
        })
        .sum()
}

/// `H(f̄_u) − H(f)`, nonnegative by concavity of `H`.
pub fn concavity_gap(f: &dyn RegressionFunction, u: &[f64]) -> Result<f64> {
    Ok(entropy_functional(&average_onto(f, u)?) - entropy_functional(f))
}
