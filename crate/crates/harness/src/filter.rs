//! Sequential filtering of an observed series followed by `h`-step forecasts
//! from the last posterior.

use pgss::analytics::{variance_track, zero_prob_table};
use pgss::simulate::{HorizonFrequencies, SamplerChoice};
use pgss::{FilterState, ModelSpec};
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, quantile_column, OutputBundle};
use crate::series::ObservedSeries;

pub const FILTER_FILE: &str = "filter.csv";
pub const FORECAST_FILE: &str = "forecast.csv";

/// Monte Carlo settings for the forecast part of the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastSettings {
    pub steps: usize,
    pub replicates: usize,
    pub seed: u64,
    pub quantiles: Vec<f64>,
    pub sampler: SamplerChoice,
}

impl ForecastSettings {
    pub fn new(steps: usize, seed: u64) -> Self {
        Self {
            steps,
            replicates: 10_000,
            seed,
            quantiles: vec![0.1, 0.5, 0.9],
            sampler: SamplerChoice::Path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterStep {
    pub label: String,
    pub y: u64,
    pub prior_a: f64,
    pub prior_b: f64,
    pub post_a: f64,
    pub post_b: f64,
    /// Moments and quantiles of the one-step predictive for `y` given the
    /// preceding observations.
    pub pred_mean: f64,
    pub pred_var: f64,
    pub pred_quantiles: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastRow {
    pub h: usize,
    pub mc_mean: f64,
    pub mc_quantiles: Vec<u64>,
    pub analytic_mean: f64,
    pub analytic_var: f64,
    pub exact_zero_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterReport {
    pub quantile_levels: Vec<f64>,
    pub steps: Vec<FilterStep>,
    pub posterior: FilterState,
    pub forecast: Vec<ForecastRow>,
}

pub fn run_filter(series: &ObservedSeries, spec: &ModelSpec, settings: &ForecastSettings) -> Result<FilterReport> {
    if series.is_empty() {
        return Err(HarnessError::Input("series has no observations".into()));
    }
    if let Some(q) = settings.quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(HarnessError::Usage(format!("quantile {q} outside (0, 1)")));
    }
    let mut state = FilterState::initial(spec);
    let mut steps = Vec::with_capacity(series.len());
    for (i, &y) in series.counts.iter().enumerate() {
        let prior = state.propagate_prior(spec);
        let nb = state.one_step_predictive(spec);
        let pred_quantiles = settings
            .quantiles
            .iter()
            .map(|&q| nb.quantile(q))
            .collect::<pgss::Result<Vec<_>>>()?;
        state = state.update(y, spec)?;
        steps.push(FilterStep {
            label: series.label(i),
            y,
            prior_a: prior.a,
            prior_b: prior.b,
            post_a: state.a,
            post_b: state.b,
            pred_mean: nb.mean(),
            pred_var: nb.variance(),
            pred_quantiles,
        });
    }

    let mut forecast = Vec::new();
    if settings.steps > 0 {
        let fresh = spec.with_initial(state.a, state.b)?;
        let h = settings.steps;
        let mc = HorizonFrequencies::simulate(&fresh, h, settings.replicates, settings.seed, settings.sampler)?
            .summarize(&settings.quantiles)?;
        let moments = variance_track(&fresh, h)?;
        let zeros = zero_prob_table(&fresh, h)?;
        forecast = mc
            .rows
            .into_iter()
            .map(|r| ForecastRow {
                h: r.t,
                mc_mean: r.mean,
                mc_quantiles: r.quantiles,
                analytic_mean: moments.mean_y[r.t - 1],
                analytic_var: moments.var_y[r.t - 1],
                exact_zero_prob: zeros.zero_prob(r.t),
            })
            .collect();
    }
    Ok(FilterReport {
        quantile_levels: settings.quantiles.clone(),
        steps,
        posterior: state,
        forecast,
    })
}

impl FilterReport {
    pub fn filter_csv(&self) -> Vec<u8> {
        let q: Vec<String> = self.quantile_levels.iter().map(|&l| format!("pred_{}", quantile_column(l))).collect();
        let mut out = format!("t,y,prior_a,prior_b,post_a,post_b,pred_mean,pred_var,{}\n", q.join(","));
        for s in &self.steps {
            let qs: Vec<String> = s.pred_quantiles.iter().map(u64::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                csv_field(&s.label),
                s.y,
                fmt_f64(s.prior_a),
                fmt_f64(s.prior_b),
                fmt_f64(s.post_a),
                fmt_f64(s.post_b),
                fmt_f64(s.pred_mean),
                fmt_f64(s.pred_var),
                qs.join(",")
            ));
        }
        out.into_bytes()
    }

    pub fn forecast_csv(&self) -> Vec<u8> {
        let q: Vec<String> = self.quantile_levels.iter().map(|&l| quantile_column(l)).collect();
        let mut out = format!("h,mc_mean,{},analytic_mean,analytic_var,exact_zero_prob\n", q.join(","));
        for r in &self.forecast {
            let qs: Vec<String> = r.mc_quantiles.iter().map(u64::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.h,
                fmt_f64(r.mc_mean),
                qs.join(","),
                fmt_f64(r.analytic_mean),
                fmt_f64(r.analytic_var),
                fmt_f64(r.exact_zero_prob)
            ));
        }
        out.into_bytes()
    }

    /// `filter.csv` always; `forecast.csv` only when forecasts were requested.
    pub fn bundle(&self) -> OutputBundle {
        let mut b = OutputBundle::default();
        b.add(FILTER_FILE, self.filter_csv());
        if !self.forecast.is_empty() {
            b.add(FORECAST_FILE, self.forecast_csv());
        }
        b
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
