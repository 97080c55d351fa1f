//! Exact samplers for the joint law of `y_1..y_T`.
//!
//! [`sample_path`] simulates the latent state through the beta innovation;
//! [`sample_marginal_chain`] integrates the state out and chains one-step
//! negative binomial predictives through the filter. Both produce the same
//! joint law of the counts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PgssError, Result};
use crate::model::{FilterState, ModelSpec};

use super::variates::{ln_beta_pair, ln_std_gamma, poisson_from_ln_mean, MAX_POISSON_MEAN};

/// Which sampler builds an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerChoice {
    Path,
    Chain,
}

impl std::str::FromStr for SamplerChoice {
    type Err = PgssError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Self::Path),
            "chain" => Ok(Self::Chain),
            other => Err(PgssError::InvalidInput(format!(
                "unknown sampler {other:?} (expected path or chain)"
            ))),
        }
    }
}

impl std::fmt::Display for SamplerChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Path => "path",
            Self::Chain => "chain",
        })
    }
}

/// One simulated trajectory of the state-space model.
///
/// `θ` and `η` are kept on the log scale: once a path's shape statistic has
/// decayed, `η` and `θ` routinely fall below the smallest positive `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    /// `ln θ_0 .. ln θ_T`
    pub ln_theta: Vec<f64>,
    /// `ln η_1 .. ln η_T`
    pub ln_eta: Vec<f64>,
    /// `y_1 .. y_T`
    pub y: Vec<u64>,
    /// `a_0 .. a_T`
    pub a_trace: Vec<f64>,
}

impl PathSample {
    pub fn horizon(&self) -> usize {
        self.y.len()
    }

    pub fn theta(&self, t: usize) -> f64 {
        self.ln_theta[t].exp()
    }

    /// `η_t` for `t >= 1`.
    pub fn eta(&self, t: usize) -> f64 {
        self.ln_eta[t - 1].exp()
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(PgssError::InvalidInput("horizon must be at least 1".into()));
    }
    Ok(())
}

fn check_ln_mean(t: usize, ln_mean: f64) -> Result<()> {
    if ln_mean.is_nan() || ln_mean > MAX_POISSON_MEAN.ln() {
        return Err(PgssError::NumericOverflow {
            t,
            detail: format!("Poisson mean exp({ln_mean}) is not finite or exceeds {MAX_POISSON_MEAN:e}"),
        });
    }
    Ok(())
}

pub fn sample_path<R: Rng + ?Sized>(spec: &ModelSpec, horizon: usize, rng: &mut R) -> Result<PathSample> {
    check_horizon(horizon)?;
    let mut out = PathSample {
        ln_theta: Vec::with_capacity(horizon + 1),
        ln_eta: Vec::with_capacity(horizon),
        y: Vec::with_capacity(horizon),
        a_trace: Vec::with_capacity(horizon + 1),
    };
    run_path(spec, horizon, rng, |step| {
        if let Some((ln_eta, y)) = step.innovation {
            out.ln_eta.push(ln_eta);
            out.y.push(y);
        }
        out.ln_theta.push(step.ln_theta);
        out.a_trace.push(step.a);
    })?;
    Ok(out)
}

/// Path sampler writing only the counts; `out.len()` is the horizon.
pub(crate) fn path_counts_into<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R, out: &mut [u64]) -> Result<()> {
    let mut idx = 0;
    run_path(spec, out.len(), rng, |step| {
        if let Some((_, y)) = step.innovation {
            out[idx] = y;
            idx += 1;
        }
    })
}

struct PathStep {
    ln_theta: f64,
    a: f64,
    innovation: Option<(f64, u64)>,
}

fn run_path<R: Rng + ?Sized>(
    spec: &ModelSpec,
    horizon: usize,
    rng: &mut R,
    mut emit: impl FnMut(PathStep),
) -> Result<()> {
    let g = spec.gamma();
    let ln_g = g.ln();
    let mut a = spec.a0();
    let mut ln_theta = ln_std_gamma(a, rng) - spec.b0().ln();
    emit(PathStep {
        ln_theta,
        a,
        innovation: None,
    });
    for t in 1..=horizon {
        let (ln_eta, _) = ln_beta_pair(g * a, (1.0 - g) * a, rng);
        ln_theta += ln_eta - ln_g;
        check_ln_mean(t, ln_theta)?;
        let y = poisson_from_ln_mean(ln_theta, rng).map_err(|e| PgssError::NumericOverflow {
            t,
            detail: e.to_string(),
        })?;
        a = g * a + y as f64;
        emit(PathStep {
            ln_theta,
            a,
            innovation: Some((ln_eta, y)),
        });
    }
    Ok(())
}

/// Counts from chained one-step predictives: `y_t ~ NB(γ a_{t-1}, γ b_{t-1})`
/// followed by the filter update.
pub fn sample_marginal_chain<R: Rng + ?Sized>(spec: &ModelSpec, horizon: usize, rng: &mut R) -> Result<Vec<u64>> {
    check_horizon(horizon)?;
    let mut out = vec![0; horizon];
    chain_counts_into(spec, rng, &mut out)?;
    Ok(out)
}

pub(crate) fn chain_counts_into<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R, out: &mut [u64]) -> Result<()> {
    chain_final_state(spec, rng, out).map(|_| ())
}

/// Runs the chained sampler over `out.len()` steps and returns the final
/// filter state.
pub(crate) fn chain_final_state<R: Rng + ?Sized>(
    spec: &ModelSpec,
    rng: &mut R,
    out: &mut [u64],
) -> Result<FilterState> {
    let g = spec.gamma();
    let mut state = FilterState::initial(spec);
    for (i, slot) in out.iter_mut().enumerate() {
        let t = i + 1;
        let prior = state.propagate_prior(spec);
        let ln_theta = ln_std_gamma(prior.a, rng) - prior.b.ln();
        check_ln_mean(t, ln_theta)?;
        let y = poisson_from_ln_mean(ln_theta, rng).map_err(|e| PgssError::NumericOverflow {
            t,
            detail: e.to_string(),
        })?;
        *slot = y;
        // The shape may decay below f64 range after thousands of zeros; the
        // filter is then at its absorbing zero-count limit.
        state = FilterState {
            t,
            a: g * state.a + y as f64,
            b: g * state.b + 1.0,
            kind: state.kind,
        };
    }
    Ok(state)
}
