//! Desk-scale experiments on the decay rates of the predictive probabilities.
//!
//! Zones are indexed by the number of split points `m` relative to the sample
//! size `n`: in the beginning zone (`m <= K`) a non-step truth pays a penalty
//! below `−H(f)`, in the middle zone `n^{-1} ln Z_m → −H(f)`, and in the end
//! zone (`m ≍ αn`) the Poissonized rate `ψ_f(α)` stays strictly below `−H(f)`
//! unless `f ≡ 1/2`. Reports flatten to CSV rows via [`Report`].

mod badset;
mod psi;
mod report;
mod subadditive;
mod zones;

pub use badset::{badset_measure, candidate_mesh, BadSetReport};
pub use psi::{
    end_zone_dominance, psi_estimate, psi_estimate_for, psi_piecewise_check, psi_samples, EndZoneReport, EndZoneRow,
    PiecewiseReport, PsiEstimate, PsiMethod,
};
pub use report::{mean_and_se, write_report_csv, Report, ReportRow};
pub use subadditive::{subadditive_check, SubadditiveReport, SubadditiveRow};
pub use zones::{
    beginning_zone_check, middle_zone_scan, step_jumps, BeginningZoneReport, SplitRow, ZoneRow, ZoneScanResult,
    SPLITS_PER_M,
};
