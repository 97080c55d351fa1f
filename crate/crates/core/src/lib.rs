//! Poisson-gamma state space (PGSS) models for count time series.
//!
//! The observation `y_t` is Poisson with mean `θ_t`, and the state evolves by a
//! multiplicative beta innovation `θ_t = θ_{t-1} η_t / γ` with
//! `η_t ~ Beta(γ a_{t-1}, (1-γ) a_{t-1})`. Starting from `θ_0 ~ Gamma(a0, b0)`
//! the filtering posterior stays gamma, which gives:
//!
//! - [`model`]: model parameters, exact filter recursions and the negative
//!   binomial one-step predictive.
//! - [`simulate`]: seeded variate generation, path and chained-predictive
//!   samplers, Monte Carlo ensembles and their summaries.
//! - [`analytics`]: predictive moments, the p.g.f. recurrence, zero-count
//!   probabilities and numerical checks of their monotonicity and convergence.

// Comparisons such as `!(x > 0.0)` are negated on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod error;
pub mod model;
pub mod simulate;

pub use error::{PgssError, Result};
pub use model::{FilterState, ModelSpec, NegBinPredictive};
