//! Model definition, forward filter and the one-step negative binomial predictive.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_positive, PgssError, Result};
use crate::simulate::variates;

/// Hyper-parameters `(a0, b0, γ)` of a PGSS model.
///
/// `θ_0 ~ Gamma(a0, b0)` (shape, rate) and `γ ∈ (0, 1)` is the discount factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    a0: f64,
    b0: f64,
    gamma: f64,
}

impl ModelSpec {
    pub fn new(a0: f64, b0: f64, gamma: f64) -> Result<Self> {
        check_positive("a0", a0)?;
        check_positive("b0", b0)?;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(PgssError::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "discount factor must lie in the open interval (0, 1)",
            });
        }
        Ok(Self { a0, b0, gamma })
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Same discount factor, new initial gamma parameters. Used to restart
    /// forecasting from a filtering posterior.
    pub fn with_initial(&self, a0: f64, b0: f64) -> Result<Self> {
        Self::new(a0, b0, self.gamma)
    }

    /// Fixed point `b* = 1 / (1 - γ)` of `b ↦ γ b + 1`.
    pub fn b_star(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    /// `b_t = (1 - {1 - (1-γ) b0} γ^t) / (1 - γ)`.
    pub fn b_closed_form(&self, t: usize) -> f64 {
        let g = self.gamma;
        let gt = g.powf(t as f64);
        (1.0 - (1.0 - (1.0 - g) * self.b0) * gt) / (1.0 - g)
    }

    /// `b_0, ..., b_horizon` by iterating `b ↦ γ b + 1`.
    pub fn b_trajectory(&self, horizon: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(horizon + 1);
        let mut b = self.b0;
        out.push(b);
        for _ in 0..horizon {
            b = self.gamma * b + 1.0;
            out.push(b);
        }
        out
    }

    /// Prior predictive mean `a0 / b0`, which is also `E[y_t]` for every horizon.
    pub fn mean(&self) -> f64 {
        self.a0 / self.b0
    }
}

pub fn b_star(spec: &ModelSpec) -> f64 {
    spec.b_star()
}

pub fn b_closed_form(spec: &ModelSpec, t: usize) -> f64 {
    spec.b_closed_form(t)
}

/// Whether a [`FilterState`] is a filtering posterior or the prior formed
/// from the previous posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Posterior,
    Prior,
}

/// Gamma summary `(a_t, b_t)` of `θ_t` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub t: usize,
    pub a: f64,
    pub b: f64,
    pub kind: StateKind,
}

impl FilterState {
    pub fn new(t: usize, a: f64, b: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("b", b)?;
        Ok(Self {
            t,
            a,
            b,
            kind: StateKind::Posterior,
        })
    }

    /// The time-0 state `(a0, b0)`.
    pub fn initial(spec: &ModelSpec) -> Self {
        Self {
            t: 0,
            a: spec.a0,
            b: spec.b0,
            kind: StateKind::Posterior,
        }
    }

    /// Prior for `θ_{t+1}` given data to `t`: `Gamma(γ a, γ b)`.
    ///
    /// The time index is left unchanged.
    pub fn propagate_prior(&self, spec: &ModelSpec) -> FilterState {
        FilterState {
            t: self.t,
            a: spec.gamma * self.a,
            b: spec.gamma * self.b,
            kind: StateKind::Prior,
        }
    }

    /// Conjugate update with count `y`: `a ← γ a + y`, `b ← γ b + 1`.
    pub fn update(&self, y: u64, spec: &ModelSpec) -> Result<FilterState> {
        let a = spec.gamma * self.a + y as f64;
        let b = spec.gamma * self.b + 1.0;
        if !(a > 0.0 && a.is_finite()) {
            return Err(PgssError::NumericOverflow {
                t: self.t + 1,
                detail: format!("posterior shape left (0, inf): {a}"),
            });
        }
        Ok(FilterState {
            t: self.t + 1,
            a,
            b,
            kind: StateKind::Posterior,
        })
    }

    /// Negative binomial law of the next observation.
    pub fn one_step_predictive(&self, spec: &ModelSpec) -> NegBinPredictive {
        NegBinPredictive {
            shape: spec.gamma * self.a,
            rate: spec.gamma * self.b,
        }
    }

    pub fn mean(&self) -> f64 {
        self.a / self.b
    }
}

/// Validates a real-valued observation as a count.
pub fn count_from_f64(y: f64) -> Result<u64> {
    if !y.is_finite() || y < 0.0 || y.fract() != 0.0 {
        return Err(PgssError::InvalidInput(format!(
            "observation {y} is not a nonnegative integer"
        )));
    }
    if y > 9.007_199_254_740_992e15 {
        return Err(PgssError::InvalidInput(format!(
            "observation {y} exceeds the exactly representable count range"
        )));
    }
    Ok(y as u64)
}

/// Gamma-Poisson mixture with gamma `shape` and `rate`.
///
/// Parameterized so that `P[y = 0] = (rate / (rate + 1))^shape`, i.e. the
/// success probability is `rate / (rate + 1)`. Its p.g.f. is
/// `(rate / (rate + 1 - s))^shape`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegBinPredictive {
    pub shape: f64,
    pub rate: f64,
}

impl NegBinPredictive {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        check_positive("shape", shape)?;
        check_positive("rate", rate)?;
        Ok(Self { shape, rate })
    }

    pub fn success_prob(&self) -> f64 {
        self.rate / (self.rate + 1.0)
    }

    fn ln_success(&self) -> f64 {
        -(1.0 / self.rate).ln_1p()
    }

    fn ln_failure(&self) -> f64 {
        -self.rate.ln_1p()
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.mean() * (1.0 + 1.0 / self.rate)
    }

    pub fn ln_pmf(&self, y: u64) -> f64 {
        let k = y as f64;
        let r = self.shape;
        let comb = if y == 0 {
            0.0
        } else {
            ln_gamma(k + r) - ln_gamma(r) - ln_gamma(k + 1.0)
        };
        comb + r * self.ln_success() + k * self.ln_failure()
    }

    pub fn pmf(&self, y: u64) -> f64 {
        self.ln_pmf(y).exp()
    }

    pub fn zero_prob(&self) -> f64 {
        (self.shape * self.ln_success()).exp()
    }

    /// `P[y <= upper]`, summed term by term with a log-space ratio recurrence.
    pub fn cdf(&self, upper: u64) -> f64 {
        let mut acc = 0.0;
        self.scan(|k, total| {
            acc = total;
            k >= upper
        });
        acc.min(1.0)
    }

    /// Smallest `y` with `cdf(y) >= q`.
    pub fn quantile(&self, q: f64) -> Result<u64> {
        if !(0.0..1.0).contains(&q) {
            return Err(PgssError::InvalidParameter {
                name: "q",
                value: q,
                reason: "quantile level must lie in [0, 1)",
            });
        }
        let mean = self.mean();
        let mut found = 0;
        self.scan(|k, total| {
            found = k;
            // Past the mode the remaining mass is below rounding once terms vanish.
            total >= q || (k as f64 > mean && total >= 1.0 - 4.0 * f64::EPSILON)
        });
        Ok(found)
    }

    /// Calls `visit(k, cdf(k))` for `k = 0, 1, ...` until it returns true.
    fn scan(&self, mut visit: impl FnMut(u64, f64) -> bool) {
        let ln_fail = self.ln_failure();
        let mut ln_term = self.shape * self.ln_success();
        let mut total = ln_term.exp();
        let mut k = 0u64;
        loop {
            if visit(k, total) {
                return;
            }
            let kf = k as f64;
            ln_term += (self.shape + kf).ln() - (kf + 1.0).ln() + ln_fail;
            total += ln_term.exp();
            k += 1;
        }
    }

    /// Draws `θ ~ Gamma(shape, rate)` then `y ~ Poisson(θ)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        let ln_theta = variates::ln_std_gamma(self.shape, rng) - self.rate.ln();
        variates::poisson_from_ln_mean(ln_theta, rng)
    }
}
