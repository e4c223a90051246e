//! Reversible-jump Metropolis–Hastings over split configurations.
//!
//! Step heights are integrated out, so the chain lives on `(m, u)` with
//! target `ν_m Z_u`. Posterior means are Rao-Blackwellized over the heights.

mod chain;
mod estimate;
mod prior;

pub use chain::{
    log_target, mh_step, mh_step_with, run_chain, run_chain_with, AcceptanceStats, ChainOutput, ChainSample,
    ChainSettings, ChainState, MoveKind, MoveStats, StepOutcome, TuningParams, CACHE_TOLERANCE,
};
pub use estimate::{median, posterior_fit, posterior_l1_samples, posterior_mean, posterior_mean_sampled, PosteriorFit};
pub use prior::HierarchyPrior;
