use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::log_factorial;

/// The hierarchy prior `ν` over the number of split points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HierarchyPrior {
    /// `ν_m = θ (1 − θ)^m`, `m = 0, 1, ...`
    Geometric { theta: f64 },
    /// `ν_m = e^{−λ} λ^m / m!`
    Poisson { lambda: f64 },
    /// Normalized masses on `0..weights.len()`.
    Table { weights: Vec<f64> },
}

impl HierarchyPrior {
    pub fn geometric(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::param("theta", "geometric parameter must be in (0, 1)"));
        }
        Ok(HierarchyPrior::Geometric { theta })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", "Poisson mean must be positive"));
        }
        Ok(HierarchyPrior::Poisson { lambda })
    }

    /// Normalizes `weights`.
    pub fn table(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::param("weights", "masses must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("weights", "masses must not all be zero"));
        }
        Ok(HierarchyPrior::Table { weights: weights.iter().map(|w| w / total).collect() })
    }

    pub fn point_mass(m: usize) -> Self {
        let mut weights = vec![0.0; m + 1];
        weights[m] = 1.0;
        HierarchyPrior::Table { weights }
    }

    /// This prior conditioned on `m <= m_max`.
    pub fn truncated(&self, m_max: usize) -> Result<Self> {
        HierarchyPrior::table((0..=m_max).map(|m| self.mass(m)).collect())
    }

    pub fn log_mass(&self, m: usize) -> f64 {
        match self {
            HierarchyPrior::Geometric { theta } => theta.ln() + m as f64 * (-theta).ln_1p(),
            HierarchyPrior::Poisson { lambda } => m as f64 * lambda.ln() - lambda - log_factorial(m as u64),
            HierarchyPrior::Table { weights } => weights.get(m).map_or(f64::NEG_INFINITY, |w| w.ln()),
        }
    }

    pub fn mass(&self, m: usize) -> f64 {
        self.log_mass(m).exp()
    }

    /// `Σ_{m <= m_max} ν_m`.
    pub fn covered_mass(&self, m_max: usize) -> f64 {
        (0..=m_max).map(|m| self.mass(m)).sum::<f64>().min(1.0)
    }

    pub fn has_infinite_support(&self) -> bool {
        !matches!(self, HierarchyPrior::Table { .. })
    }
}

impl FromStr for HierarchyPrior {
    type Err = Error;

    /// `geometric:0.5`, `poisson:3`, `point:2`, `table:0.2,0.3,0.5`, with an
    /// optional `@m_max` suffix for truncation (`geometric:0.5@6`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("hierarchy prior `{s}`: {why}"));
        let (body, trunc) = match s.split_once('@') {
            Some((b, t)) => (b, Some(t.trim().parse::<usize>().map_err(|_| bad("bad truncation"))?)),
            None => (s, None),
        };
        let (kind, arg) = body.split_once(':').ok_or_else(|| bad("expected kind:value"))?;
        let num = |a: &str| a.trim().parse::<f64>().map_err(|_| bad("bad number"));
        let prior = match kind.trim() {
            "geometric" => HierarchyPrior::geometric(num(arg)?)?,
            "poisson" => HierarchyPrior::poisson(num(arg)?)?,
            "point" => HierarchyPrior::point_mass(arg.trim().parse().map_err(|_| bad("bad count"))?),
            "table" => HierarchyPrior::table(arg.split(',').map(num).collect::<Result<_>>()?)?,
            _ => return Err(bad("unknown kind")),
        };
        match trunc {
            Some(m) => prior.truncated(m),
            None => Ok(prior),
        }
    }
}
