//! The p.g.f. of the `t`-step marginal predictive, `φ_t(s | a0, b0) = E[s^{y_t}]`.
//!
//! With `b1 = γ b0 + 1`, the unit-shape p.g.f. obeys
//!
//! ```text
//! φ_1(s | 1, b) = (γb / (γb + 1 - s))^γ
//! φ_t(s | 1, b) = [φ_{t-1}(s | 1, γb + 1) · γb / (γb + 1 - φ_{t-1}(s | 1, γb + 1))]^γ
//! ```
//!
//! and a general shape enters only as a power: `φ_t(s | a0, b0) = φ_t(s | 1, b0)^{a0}`.
//! Everything here works with `ln φ`; `1 - φ` is recovered as `-expm1(ln φ)`,
//! which keeps full relative precision as `φ → 1`.

use crate::error::{PgssError, Result};
use crate::model::ModelSpec;

pub(crate) fn check_s(s: f64) -> Result<()> {
    if !(-1.0..1.0).contains(&s) {
        return Err(PgssError::InvalidParameter {
            name: "s",
            value: s,
            reason: "p.g.f. argument must lie in [-1, 1)",
        });
    }
    Ok(())
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(PgssError::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "discount factor must lie in the open interval (0, 1)",
        });
    }
    Ok(())
}

/// `ln φ_1(s | a, b)` for the negative binomial with shape `γ a`, rate `γ b`;
/// `exponent` is `γ a`.
#[inline]
pub(crate) fn ln_base(s: f64, gb: f64, exponent: f64) -> f64 {
    -exponent * ((1.0 - s) / gb).ln_1p()
}

/// `ln [φ · gb / (gb + 1 - φ)]^exponent` from `ln φ`.
#[inline]
pub(crate) fn fold(ln_prev: f64, gb: f64, exponent: f64) -> Result<f64> {
    let complement = -ln_prev.exp_m1();
    if !(complement >= 0.0) || !(gb + complement > 0.0) {
        return Err(PgssError::Internal(format!(
            "p.g.f. recurrence left its domain: ln φ = {ln_prev}, γb = {gb}"
        )));
    }
    Ok(exponent * (ln_prev - (complement / gb).ln_1p()))
}

/// `ln φ_t(s | 1, b0)` by a single backward fold along `b^{(0)}, ..., b^{(t-1)}`.
pub fn ln_pgf_unit(s: f64, t: usize, b0: f64, gamma: f64) -> Result<f64> {
    ln_pgf_with_first_exponent(s, t, b0, gamma, gamma)
}

/// Shared fold; the outermost step (at `b0`) uses `first_exponent`, inner
/// steps use `γ`. `first_exponent = γ a0` gives `ln φ_t(s | a0, b0)` directly.
fn ln_pgf_with_first_exponent(s: f64, t: usize, b0: f64, gamma: f64, first_exponent: f64) -> Result<f64> {
    check_s(s)?;
    check_gamma(gamma)?;
    if !(b0 > 0.0 && b0.is_finite()) {
        return Err(PgssError::InvalidParameter {
            name: "b0",
            value: b0,
            reason: "must be positive and finite",
        });
    }
    if t == 0 {
        return Ok(0.0);
    }
    let mut b = Vec::with_capacity(t);
    b.push(b0);
    for k in 1..t {
        b.push(gamma * b[k - 1] + 1.0);
    }
    let exponent_at = |k: usize| if k == 0 { first_exponent } else { gamma };
    let mut ln_phi = ln_base(s, gamma * b[t - 1], exponent_at(t - 1));
    for k in (0..t - 1).rev() {
        ln_phi = fold(ln_phi, gamma * b[k], exponent_at(k))?;
    }
    Ok(ln_phi)
}

/// `φ_t(s | 1, b0)`.
pub fn pgf_unit(s: f64, t: usize, b0: f64, gamma: f64) -> Result<f64> {
    Ok(ln_pgf_unit(s, t, b0, gamma)?.exp())
}

/// `φ_t(s | a0, b0) = φ_t(s | 1, b0)^{a0}`, exponentiated in log space.
pub fn pgf(s: f64, t: usize, spec: &ModelSpec) -> Result<f64> {
    Ok((spec.a0() * ln_pgf_unit(s, t, spec.b0(), spec.gamma())?).exp())
}

/// `φ_t(s | a0, b0)` with the shape carried through the recurrence instead of
/// applied as a final power: the first fold uses exponent `γ a0`.
pub fn pgf_first_fold(s: f64, t: usize, spec: &ModelSpec) -> Result<f64> {
    let e = spec.gamma() * spec.a0();
    Ok(ln_pgf_with_first_exponent(s, t, spec.b0(), spec.gamma(), e)?.exp())
}

/// Cap on the `b` iteration when searching for its floating-point fixed point.
const MAX_B_ITERATIONS: usize = 1 << 20;

/// Streams `ln φ_t(s | 1, b0)` for `t = 1, 2, ...`, one horizon per call.
///
/// Row `t` of the triangular recurrence holds `ln φ_t(s | 1, b^{(k)})` for
/// every `k`. Since `b^{(k)} = γ b^{(k-1)} + 1` reaches a floating-point fixed
/// point `b^{(K)}` after finitely many steps, all columns `k >= K` coincide
/// and a row is stored as `K + 1` numbers. Each step costs `O(K)` and the
/// values are bit-identical to the full triangle.
#[derive(Debug, Clone)]
pub struct UnitPgfSequence {
    gamma: f64,
    s: f64,
    /// `γ b^{(0)}, ..., γ b^{(K)}`.
    gb: Vec<f64>,
    /// `ln φ_t(s | 1, b^{(k)})` for `k = 0..=K` at the last emitted `t`.
    row: Vec<f64>,
    t: usize,
}

impl UnitPgfSequence {
    pub fn new(s: f64, b0: f64, gamma: f64) -> Result<Self> {
        check_s(s)?;
        check_gamma(gamma)?;
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(PgssError::InvalidParameter {
                name: "b0",
                value: b0,
                reason: "must be positive and finite",
            });
        }
        let mut b = vec![b0];
        loop {
            let last = *b.last().expect("non-empty");
            let next = gamma * last + 1.0;
            if next == last || b.len() >= MAX_B_ITERATIONS {
                break;
            }
            b.push(next);
        }
        Ok(Self {
            gamma,
            s,
            gb: b.iter().map(|x| gamma * x).collect(),
            row: Vec::new(),
            t: 0,
        })
    }

    /// Zero-count probabilities `p_t(b0)`.
    pub fn zero_count(b0: f64, gamma: f64) -> Result<Self> {
        Self::new(0.0, b0, gamma)
    }

    /// Number of distinct columns (`K + 1`).
    pub fn width(&self) -> usize {
        self.gb.len()
    }

    /// The horizon of the most recently emitted value.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Advances to the next horizon and returns `ln φ_t(s | 1, b0)`.
    pub fn advance(&mut self) -> Result<f64> {
        let g = self.gamma;
        if self.t == 0 {
            self.row = self.gb.iter().map(|&gb| ln_base(self.s, gb, g)).collect();
        } else {
            let last = self.row.len() - 1;
            for k in 0..last {
                self.row[k] = fold(self.row[k + 1], self.gb[k], g)?;
            }
            self.row[last] = fold(self.row[last], self.gb[last], g)?;
        }
        self.t += 1;
        Ok(self.row[0])
    }

    /// `ln φ_t(s | 1, b^{(k)})` at the current horizon.
    pub fn ln_at_column(&self, k: usize) -> f64 {
        self.row[k.min(self.row.len() - 1)]
    }

    /// `ln φ_t(s | 1, b0)` for `t = 1..=horizon`.
    pub fn take(mut self, horizon: usize) -> Result<Vec<f64>> {
        (0..horizon).map(|_| self.advance()).collect()
    }
}

/// Fully materialized triangle `p_t(b^{(k)})` for `t + k <= T + 1`, built row
/// by row without any column sharing. `O(T²)` memory; intended for modest `T`.
#[derive(Debug, Clone)]
pub struct ZeroProbTriangle {
    pub gamma: f64,
    /// `b^{(0)}, ..., b^{(T-1)}`
    pub b_traj: Vec<f64>,
    /// `rows[t-1][k] = ln p_t(b^{(k)})`, `k = 0..=T-t`.
    pub rows: Vec<Vec<f64>>,
}

impl ZeroProbTriangle {
    pub fn build(b0: f64, gamma: f64, horizon: usize) -> Result<Self> {
        check_gamma(gamma)?;
        let mut b_traj = vec![b0];
        for k in 1..horizon.max(1) {
            b_traj.push(gamma * b_traj[k - 1] + 1.0);
        }
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(horizon);
        if horizon > 0 {
            rows.push(b_traj.iter().map(|&b| ln_base(0.0, gamma * b, gamma)).collect());
        }
        for t in 2..=horizon {
            let prev = &rows[t - 2];
            let row = (0..=horizon - t)
                .map(|k| fold(prev[k + 1], gamma * b_traj[k], gamma))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { gamma, b_traj, rows })
    }

    pub fn p(&self, t: usize, k: usize) -> f64 {
        self.rows[t - 1][k].exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_case_value() {
        let got = pgf_unit(0.0, 1, 1.2, 0.75).unwrap();
        let want = (0.9f64 / 1.9).powf(0.75);
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.570_974_458_6).abs() < 1e-9);
    }

    #[test]
    fn second_horizon_at_fixed_point() {
        let p1 = 0.75f64.powf(0.75);
        let want = (p1 * 3.0 / (3.0 + 1.0 - p1)).powf(0.75);
        let got = pgf_unit(0.0, 2, 4.0, 0.75).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.811_529_514).abs() < 1e-8);
    }

    #[test]
    fn normalization_near_one() {
        for t in [1, 2, 10, 50] {
            let v = pgf_unit(1.0 - 1e-12, t, 1.2, 0.75).unwrap();
            assert!((v - 1.0).abs() < 1e-9, "t {t}: {v}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(pgf_unit(1.0, 3, 1.0, 0.5).is_err());
        assert!(pgf_unit(-1.5, 3, 1.0, 0.5).is_err());
        assert!(pgf_unit(0.0, 3, 0.0, 0.5).is_err());
        assert!(pgf_unit(0.0, 3, 1.0, 1.0).is_err());
        assert!(UnitPgfSequence::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn fold_guards_domain() {
        assert!(fold(0.1, 1.0, 0.5).is_err());
        assert!(fold(-0.1, 1.0, 0.5).is_ok());
    }

    #[test]
    fn zero_horizon_is_one() {
        assert_eq!(pgf_unit(0.3, 0, 1.0, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn stream_matches_fold_bit_for_bit() {
        for (s, b0, g) in [(0.0, 1.2, 0.75), (-0.5, 0.5, 0.3), (0.99, 20.0, 0.9), (0.5, 2.0, 0.5)] {
            let seq = UnitPgfSequence::new(s, b0, g).unwrap().take(120).unwrap();
            for (i, v) in seq.iter().enumerate() {
                let direct = ln_pgf_unit(s, i + 1, b0, g).unwrap();
                assert_eq!(v.to_bits(), direct.to_bits(), "s {s} b0 {b0} g {g} t {}", i + 1);
            }
        }
    }

    #[test]
    fn stream_matches_full_triangle() {
        let (b0, g, horizon) = (0.5, 0.75, 150);
        let tri = ZeroProbTriangle::build(b0, g, horizon).unwrap();
        let mut seq = UnitPgfSequence::zero_count(b0, g).unwrap();
        for t in 1..=horizon {
            seq.advance().unwrap();
            for k in 0..=horizon - t {
                assert_eq!(seq.ln_at_column(k).to_bits(), tri.rows[t - 1][k].to_bits());
            }
        }
    }

    #[test]
    fn width_is_small() {
        let seq = UnitPgfSequence::zero_count(0.5, 0.9).unwrap();
        assert!(seq.width() < 500, "{}", seq.width());
        let fixed = UnitPgfSequence::zero_count(4.0, 0.75).unwrap();
        assert_eq!(fixed.width(), 1);
    }
}
