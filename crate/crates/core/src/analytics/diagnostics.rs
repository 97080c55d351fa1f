//! Numerical checks of the zero-count recurrence's qualitative behaviour:
//! monotonicity in `b` and in `t`, the lower bound and strict gap at the
//! fixed point `b*`, convergence to one, and the tower identity linking
//! horizons `t + t0` and `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PgssError, Result};
use crate::model::ModelSpec;
use crate::simulate::{chain_final_state, RngStream};

use super::pgf::{check_gamma, ln_pgf_unit, UnitPgfSequence};

/// Rounding slack for monotonicity checks.
pub const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneViolation {
    /// The pair `(index, index + 1)` decreases.
    pub index: usize,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    /// Nondecreasing up to [`MONOTONE_TOL`].
    pub holds: bool,
    /// Every consecutive pair strictly increases.
    pub strict: bool,
    pub violations: Vec<MonotoneViolation>,
    pub values: Vec<f64>,
}

/// Flags every consecutive pair with `right < left - tol`.
pub fn check_nondecreasing(values: &[f64], tol: f64) -> MonotoneReport {
    let mut violations = Vec::new();
    let mut strict = true;
    for (i, w) in values.windows(2).enumerate() {
        if w[1] < w[0] - tol || w[1].is_nan() || w[0].is_nan() {
            violations.push(MonotoneViolation {
                index: i,
                left: w[0],
                right: w[1],
            });
        }
        if !(w[1] > w[0]) {
            strict = false;
        }
    }
    MonotoneReport {
        holds: violations.is_empty(),
        strict,
        violations,
        values: values.to_vec(),
    }
}

/// `p_t(b)` along an ascending grid of `b`.
pub fn check_monotone_in_b(gamma: f64, t: usize, b_grid: &[f64]) -> Result<MonotoneReport> {
    check_gamma(gamma)?;
    if t == 0 {
        return Err(PgssError::InvalidInput("horizon must be at least 1".into()));
    }
    if b_grid.iter().any(|b| !(*b > 0.0 && b.is_finite())) || b_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(PgssError::InvalidInput("b grid must be ascending, positive and finite".into()));
    }
    let values = b_grid
        .iter()
        .map(|&b| Ok(ln_pgf_unit(0.0, t, b, gamma)?.exp()))
        .collect::<Result<Vec<_>>>()?;
    Ok(check_nondecreasing(&values, MONOTONE_TOL))
}

/// `p_t(b0)` for `t = 1..=horizon`.
pub fn check_monotone_in_t(spec: &ModelSpec, horizon: usize) -> Result<MonotoneReport> {
    let values = UnitPgfSequence::zero_count(spec.b0(), spec.gamma())?
        .take(horizon)?
        .into_iter()
        .map(f64::exp)
        .collect::<Vec<_>>();
    Ok(check_nondecreasing(&values, MONOTONE_TOL))
}

/// `p_t(b*) >= γ^{γ/(1-γ)}` for `t = 1..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub gamma: f64,
    pub bound: f64,
    /// `p_1(b*)`, equal to `γ^γ`.
    pub p1: f64,
    pub min_value: f64,
    pub holds: bool,
}

pub fn fixed_point_lower_bound(gamma: f64, horizon: usize) -> Result<LowerBoundReport> {
    check_gamma(gamma)?;
    let b_star = 1.0 / (1.0 - gamma);
    let bound = gamma.powf(gamma / (1.0 - gamma));
    let seq = UnitPgfSequence::zero_count(b_star, gamma)?.take(horizon.max(1))?;
    let values: Vec<f64> = seq.iter().map(|v| v.exp()).collect();
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LowerBoundReport {
        gamma,
        bound,
        p1: values[0],
        min_value,
        holds: values.iter().all(|&p| p >= bound),
    })
}

/// Scan of `[p γb*/(γb* + 1 - p)]^γ - p` over `p ∈ [γ^{γ/(1-γ)}, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapScan {
    pub gamma: f64,
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    /// Points where the map failed to exceed `p`.
    pub failures: usize,
    /// Smallest `ln LHS - ln p` seen and where.
    pub min_log_gap: f64,
    pub argmin_p: f64,
    pub holds: bool,
}

/// `ln([p γb*/(γb* + 1 - p)]^γ) - ln p` written in `q = 1 - p`:
/// `-(1-γ) ln(1-q) - γ ln(1 + q(1-γ)/γ)`. Both terms are `O(q)` and their
/// difference `O(q²)`, so no quantity near 1 is ever subtracted.
pub fn fixed_point_log_gap(gamma: f64, q: f64) -> f64 {
    let r = (1.0 - gamma) / gamma;
    -(1.0 - gamma) * (-q).ln_1p() - gamma * (q * r).ln_1p()
}

/// Evaluates the gap on `points` equally spaced values of `p` plus `points`
/// values of `1 - p` spaced geometrically down to `1 - upper`.
pub fn fixed_point_gap_scan(gamma: f64, points: usize, upper: f64) -> Result<GapScan> {
    check_gamma(gamma)?;
    let lower = gamma.powf(gamma / (1.0 - gamma));
    if !(upper > lower && upper < 1.0) || points < 2 {
        return Err(PgssError::InvalidInput(format!(
            "gap scan needs lower {lower} < upper {upper} < 1 and at least 2 points"
        )));
    }
    let (q_hi, q_lo) = (1.0 - lower, 1.0 - upper);
    let n = points - 1;
    let linear = (0..=n).map(|i| {
        let p = lower + (upper - lower) * i as f64 / n as f64;
        1.0 - p
    });
    let geometric = (0..=n).map(|i| q_hi * (q_lo / q_hi).powf(i as f64 / n as f64));
    let mut scan = GapScan {
        gamma,
        lower,
        upper,
        points: 0,
        failures: 0,
        min_log_gap: f64::INFINITY,
        argmin_p: f64::NAN,
        holds: true,
    };
    for q in linear.chain(geometric) {
        let gap = fixed_point_log_gap(gamma, q);
        scan.points += 1;
        if !(gap > 0.0) {
            scan.failures += 1;
        }
        if gap < scan.min_log_gap {
            scan.min_log_gap = gap;
            scan.argmin_p = 1.0 - q;
        }
    }
    scan.holds = scan.failures == 0;
    Ok(scan)
}

/// First horizon `t <= t_max` with `P[y_t = 0 | a0, b0] > level`.
pub fn first_horizon_exceeding(spec: &ModelSpec, level: f64, t_max: usize) -> Result<Option<usize>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(PgssError::InvalidParameter {
            name: "level",
            value: level,
            reason: "must lie in (0, 1)",
        });
    }
    let mut seq = UnitPgfSequence::zero_count(spec.b0(), spec.gamma())?;
    let target = 1.0 - level;
    for t in 1..=t_max {
        let ln_p = seq.advance()?;
        if -(spec.a0() * ln_p).exp_m1() < target {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerCheck {
    pub t: usize,
    pub t0: usize,
    /// `P[y_{t+t0} = 0 | a0, b0]` from the recurrence.
    pub lhs: f64,
    /// Monte Carlo mean of `p_t(b_{t0})^{a_{t0}}` over simulated prefixes.
    pub rhs_estimate: f64,
    pub mc_se: f64,
    pub replicates: usize,
}

impl TowerCheck {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.lhs - self.rhs_estimate).abs() <= sigmas * self.mc_se
    }
}

/// Checks `P[y_{t+t0} = 0 | a0, b0] = E[p_t(b_{t0})^{a_{t0}}]`, where
/// `a_{t0}` comes from filtering `y_{1:t0}` simulated by the chained
/// predictive sampler (stream `i` of `seed` for replicate `i`). `b_{t0}` is
/// deterministic, so only `a_{t0}` is random.
pub fn tower_crosscheck(spec: &ModelSpec, t: usize, t0: usize, n: usize, seed: u64) -> Result<TowerCheck> {
    if t == 0 || n == 0 {
        return Err(PgssError::InvalidInput("tower check needs t >= 1 and at least one replicate".into()));
    }
    let g = spec.gamma();
    let lhs = (spec.a0() * ln_pgf_unit(0.0, t + t0, spec.b0(), g)?).exp();
    let b_t0 = spec.b_trajectory(t0)[t0];
    let ln_p = ln_pgf_unit(0.0, t, b_t0, g)?;
    if t0 == 0 {
        return Ok(TowerCheck {
            t,
            t0,
            lhs,
            rhs_estimate: (spec.a0() * ln_p).exp(),
            mc_se: 0.0,
            replicates: n,
        });
    }
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let mut prefix = vec![0u64; t0];
            let state = chain_final_state(spec, &mut rng, &mut prefix)?;
            debug_assert_eq!(state.b.to_bits(), b_t0.to_bits());
            Ok((state.a * ln_p).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    Ok(TowerCheck {
        t,
        t0,
        lhs,
        rhs_estimate: mean,
        mc_se: (var / nf).sqrt(),
        replicates: n,
    })
}
