//! The reference ensemble experiment: simulate `N` predictive paths, summarize
//! per horizon, and set the summaries beside the exact moments and zero
//! probabilities.

use std::path::PathBuf;
use std::time::Instant;

use pgss::analytics::{variance_track, zero_prob_table};
use pgss::simulate::HorizonFrequencies;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
pub use crate::output::SummaryRow;
use crate::output::{histogram_csv, summary_csv, OutputBundle};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn histogram_file(t: usize) -> String {
    format!("histogram_t{t}.csv")
}

#[derive(Debug, Clone)]
pub struct Figure1Output {
    pub config: ExperimentConfig,
    pub rows: Vec<SummaryRow>,
    /// `(t, [(count, frequency)])` for each requested histogram horizon.
    pub histograms: Vec<(usize, Vec<(u64, u64)>)>,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    version: &'static str,
    wall_time_s: f64,
}

impl Figure1Output {
    pub fn row(&self, t: usize) -> &SummaryRow {
        &self.rows[t - 1]
    }

    pub fn summary_csv(&self) -> Result<Vec<u8>> {
        summary_csv(&self.config.quantiles, &self.rows)
    }

    pub fn manifest_json(&self) -> Result<Vec<u8>> {
        let m = Manifest {
            config: &self.config,
            seed: self.config.seed,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: self.wall_time_s,
        };
        let mut bytes = serde_json::to_vec_pretty(&m)
            .map_err(|e| HarnessError::Input(format!("manifest encoding: {e}")))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn bundle(&self) -> Result<OutputBundle> {
        let mut b = OutputBundle::default();
        b.add(SUMMARY_FILE, self.summary_csv()?);
        for (t, bins) in &self.histograms {
            b.add(histogram_file(*t), histogram_csv(bins));
        }
        b.add(MANIFEST_FILE, self.manifest_json()?);
        Ok(b)
    }
}

/// Runs `f` on a rayon pool with `threads` workers (0 means the rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Summary rows for already simulated frequency tables.
pub fn summary_rows(config: &ExperimentConfig, freq: &HorizonFrequencies) -> Result<Vec<SummaryRow>> {
    let spec = config.spec()?;
    let horizon = freq.horizon();
    let mc = freq.summarize(&config.quantiles)?;
    let moments = variance_track(&spec, horizon)?;
    let zeros = zero_prob_table(&spec, horizon)?;
    Ok(mc
        .rows
        .into_iter()
        .map(|r| SummaryRow {
            t: r.t,
            mean: r.mean,
            quantiles: r.quantiles,
            max: r.max,
            zero_rate: r.zero_rate,
            analytic_mean: moments.mean_y[r.t - 1],
            analytic_var: moments.var_y[r.t - 1],
            exact_zero_prob: zeros.zero_prob(r.t),
        })
        .collect())
}

/// Everything except the file writes.
pub fn compute_figure1(config: &ExperimentConfig) -> Result<Figure1Output> {
    let spec = config.validate()?;
    let start = Instant::now();
    let (rows, histograms) = with_threads(config.threads, || -> Result<_> {
        let freq =
            HorizonFrequencies::simulate(&spec, config.horizon, config.replicates, config.seed, config.sampler)?;
        let rows = summary_rows(config, &freq)?;
        let hist = config
            .histogram_horizons
            .iter()
            .map(|&t| Ok((t, freq.histogram(t)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok((rows, hist))
    })??;
    Ok(Figure1Output {
        config: config.clone(),
        rows,
        histograms,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Computes the experiment and writes the summary CSV, one histogram CSV per
/// requested horizon and `manifest.json` into `config.output_dir`. Nothing
/// is written if the computation fails.
pub fn run_figure1(config: &ExperimentConfig) -> Result<(Figure1Output, Vec<PathBuf>)> {
    let out = compute_figure1(config)?;
    let paths = out.bundle()?.write_to(&config.output_dir)?;
    Ok((out, paths))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            horizon: 30,
            replicates: 2000,
            histogram_horizons: vec![10, 30],
            ..ExperimentConfig::reference(seed)
        }
    }

    #[test]
    fn analytic_columns() {
        let out = compute_figure1(&small(3)).unwrap();
        assert_eq!(out.rows.len(), 30);
        for r in &out.rows {
            assert!((r.analytic_mean - 6.5 / 1.2).abs() < 1e-12);
            assert!(r.quantiles[0] <= r.quantiles[1] && r.quantiles[1] <= r.quantiles[2]);
            assert!(r.quantiles[2] <= r.max);
        }
        assert!((out.row(1).exact_zero_prob - 0.026_182_338_229_165_075).abs() < 1e-15);
        assert!((out.row(1).analytic_var - 11.435_185_185_185_187).abs() < 1e-9);
        let (t, bins) = &out.histograms[1];
        assert_eq!(*t, 30);
        assert_eq!(bins.iter().map(|b| b.1).sum::<u64>(), 2000);
    }

    #[test]
    fn manifest_keys() {
        let out = compute_figure1(&small(3)).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out.manifest_json().unwrap()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 4);
        for k in ["config", "seed", "version", "wall_time_s"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["seed"], 3);
        assert_eq!(v["config"]["gamma"], 0.75);
    }

    #[test]
    fn invalid_config_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(1);
        c.output_dir = dir.path().join("out");
        c.histogram_horizons = vec![31];
        assert!(run_figure1(&c).is_err());
        assert!(!c.output_dir.exists());
    }
}
