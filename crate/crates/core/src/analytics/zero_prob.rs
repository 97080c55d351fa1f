use serde::{Deserialize, Serialize};

use crate::error::{PgssError, Result};
use crate::model::ModelSpec;

use super::pgf::UnitPgfSequence;

/// Zero-count probabilities along one model's horizon.
///
/// Stores `ln p_t(b0)` with `p_t(b0) = P[y_t = 0 | a0 = 1, b0]`, from which
/// `P[y_t = 0 | a0, b0] = p_t(b0)^{a0}`. The complement `1 - p` is derived
/// with `expm1`, so it stays accurate when `p` is within `1e-16` of one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroProbTable {
    pub gamma: f64,
    pub a0: f64,
    /// `b^{(0)} = b0, ..., b^{(T)}`
    pub b_traj: Vec<f64>,
    /// `ln p_t(b0)` for `t = 1..=T`
    pub ln_unit: Vec<f64>,
}

impl ZeroProbTable {
    pub fn build(spec: &ModelSpec, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(PgssError::InvalidInput("horizon must be at least 1".into()));
        }
        let ln_unit = UnitPgfSequence::zero_count(spec.b0(), spec.gamma())?.take(horizon)?;
        Ok(Self {
            gamma: spec.gamma(),
            a0: spec.a0(),
            b_traj: spec.b_trajectory(horizon),
            ln_unit,
        })
    }

    pub fn horizon(&self) -> usize {
        self.ln_unit.len()
    }

    /// `p_t(b0)`
    pub fn unit(&self, t: usize) -> f64 {
        self.ln_unit[t - 1].exp()
    }

    /// `P[y_t = 0 | a0, b0]`
    pub fn zero_prob(&self, t: usize) -> f64 {
        (self.a0 * self.ln_unit[t - 1]).exp()
    }

    /// `1 - P[y_t = 0 | a0, b0]`
    pub fn nonzero_prob(&self, t: usize) -> f64 {
        -(self.a0 * self.ln_unit[t - 1]).exp_m1()
    }

    pub fn zero_probs(&self) -> Vec<f64> {
        (1..=self.horizon()).map(|t| self.zero_prob(t)).collect()
    }
}

pub fn zero_prob_table(spec: &ModelSpec, horizon: usize) -> Result<ZeroProbTable> {
    ZeroProbTable::build(spec, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_first_value() {
        let spec = ModelSpec::new(1.0, 4.0, 0.75).unwrap();
        let table = zero_prob_table(&spec, 200).unwrap();
        assert!((table.unit(1) - 0.75f64.powf(0.75)).abs() < 1e-12);
        assert!(table.unit(200) > table.unit(50));
        assert!(table.unit(50) > table.unit(1));
        let bound = 0.75f64.powf(0.75 / 0.25);
        assert!((bound - 0.421_875).abs() < 1e-15);
        assert!((1..=200).all(|t| table.unit(t) >= bound));
    }

    #[test]
    fn shape_enters_as_power() {
        let spec = ModelSpec::new(6.5, 1.2, 0.75).unwrap();
        let table = zero_prob_table(&spec, 3).unwrap();
        let direct = (0.9f64 / 1.9).powf(4.875);
        assert!((table.zero_prob(1) - direct).abs() < 1e-15);
        assert!((table.zero_prob(2) + table.nonzero_prob(2) - 1.0).abs() < 1e-15);
        assert_eq!(table.b_traj.len(), 4);
    }
}
