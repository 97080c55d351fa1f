//! Marginal predictive moments of `y_t`.
//!
//! With `V[a_0] = 0`,
//!
//! ```text
//! V[a_{t-1}] = (b_{t-1}/b_{t-2})² V[a_{t-2}] + (1/γ)(b_{t-1}/b_{t-2}) a0/b0
//! V[y_t]     = V[a_{t-1}] / b_{t-1}² + (b_t / (γ b_{t-1})) a0/b0
//! ```
//!
//! and `E[y_t] = a0/b0` at every horizon.

use serde::{Deserialize, Serialize};

use crate::error::{PgssError, Result};
use crate::model::ModelSpec;

/// `E[y_t] = a0 / b0` for every `t >= 1`.
pub fn predictive_mean(spec: &ModelSpec, t: usize) -> f64 {
    debug_assert!(t >= 1);
    spec.mean()
}

/// Per-horizon analytic moments; index `t - 1` holds horizon `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTrack {
    pub mean_y: Vec<f64>,
    /// `V[a_{t-1}]`
    pub var_a: Vec<f64>,
    pub var_y: Vec<f64>,
    /// `b_0, ..., b_T`
    pub b_trace: Vec<f64>,
}

impl MomentTrack {
    pub fn horizon(&self) -> usize {
        self.var_y.len()
    }

    pub fn var_y_at(&self, t: usize) -> f64 {
        self.var_y[t - 1]
    }
}

pub fn variance_track(spec: &ModelSpec, horizon: usize) -> Result<MomentTrack> {
    if horizon == 0 {
        return Err(PgssError::InvalidInput("horizon must be at least 1".into()));
    }
    let g = spec.gamma();
    let m = spec.mean();
    let b = spec.b_trajectory(horizon);
    let mut var_a = Vec::with_capacity(horizon);
    let mut var_y = Vec::with_capacity(horizon);
    let mut va = 0.0;
    for t in 1..=horizon {
        if t >= 2 {
            let r = b[t - 1] / b[t - 2];
            va = r * r * va + r * m / g;
        }
        var_a.push(va);
        var_y.push(va / (b[t - 1] * b[t - 1]) + b[t] / (g * b[t - 1]) * m);
    }
    Ok(MomentTrack {
        mean_y: vec![m; horizon],
        var_a,
        var_y,
        b_trace: b,
    })
}
