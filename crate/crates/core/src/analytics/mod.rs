//! Exact predictive computations: moments, the p.g.f. recurrence, zero-count
//! probabilities and diagnostics built on them.

pub mod diagnostics;
mod moments;
pub mod pgf;
mod zero_prob;

pub use diagnostics::{
    check_monotone_in_b, check_monotone_in_t, check_nondecreasing, first_horizon_exceeding, fixed_point_gap_scan,
    fixed_point_lower_bound, tower_crosscheck, GapScan, LowerBoundReport, MonotoneReport, TowerCheck,
};
pub use moments::{predictive_mean, variance_track, MomentTrack};
pub use pgf::{ln_pgf_unit, pgf, pgf_first_fold, pgf_unit, UnitPgfSequence, ZeroProbTriangle};
pub use zero_prob::{zero_prob_table, ZeroProbTable};
