use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PgssError, Result};
use crate::model::ModelSpec;

use super::sampler::{chain_counts_into, path_counts_into, SamplerChoice};
use super::variates::RngStream;

/// `N × T` matrix of simulated counts; row `i` is replicate `i` drawn from
/// `RngStream::new(base_seed, i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictiveEnsemble {
    horizon: usize,
    n_replicates: usize,
    base_seed: u64,
    sampler: SamplerChoice,
    counts: Vec<u64>,
}

impl PredictiveEnsemble {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_replicates(&self) -> usize {
        self.n_replicates
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn sampler(&self) -> SamplerChoice {
        self.sampler
    }

    /// Counts `y_1..y_T` of replicate `i`.
    pub fn replicate(&self, i: usize) -> &[u64] {
        &self.counts[i * self.horizon..(i + 1) * self.horizon]
    }

    /// Count of every replicate at horizon `t` (1-based).
    pub fn column(&self, t: usize) -> Vec<u64> {
        assert!(t >= 1 && t <= self.horizon, "horizon {t} out of range");
        self.counts.iter().skip(t - 1).step_by(self.horizon).copied().collect()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

fn fill_replicate(spec: &ModelSpec, base_seed: u64, sampler: SamplerChoice, i: usize, row: &mut [u64]) -> Result<()> {
    let mut rng = RngStream::new(base_seed, i as u64);
    match sampler {
        SamplerChoice::Path => path_counts_into(spec, &mut rng, row),
        SamplerChoice::Chain => chain_counts_into(spec, &mut rng, row),
    }
}

fn check_sizes(horizon: usize, n: usize) -> Result<()> {
    if horizon == 0 || n == 0 {
        return Err(PgssError::InvalidInput(format!(
            "ensemble needs horizon >= 1 and replicates >= 1 (got {horizon}, {n})"
        )));
    }
    Ok(())
}

/// Builds the ensemble on the current rayon pool. Output is identical to
/// [`build_ensemble_sequential`] for any thread count.
pub fn build_ensemble(
    spec: &ModelSpec,
    horizon: usize,
    n: usize,
    base_seed: u64,
    sampler: SamplerChoice,
) -> Result<PredictiveEnsemble> {
    check_sizes(horizon, n)?;
    let mut counts = vec![0u64; horizon * n];
    counts
        .par_chunks_mut(horizon)
        .enumerate()
        .try_for_each(|(i, row)| fill_replicate(spec, base_seed, sampler, i, row))?;
    Ok(PredictiveEnsemble {
        horizon,
        n_replicates: n,
        base_seed,
        sampler,
        counts,
    })
}

pub fn build_ensemble_sequential(
    spec: &ModelSpec,
    horizon: usize,
    n: usize,
    base_seed: u64,
    sampler: SamplerChoice,
) -> Result<PredictiveEnsemble> {
    check_sizes(horizon, n)?;
    let mut counts = vec![0u64; horizon * n];
    for (i, row) in counts.chunks_mut(horizon).enumerate() {
        fill_replicate(spec, base_seed, sampler, i, row)?;
    }
    Ok(PredictiveEnsemble {
        horizon,
        n_replicates: n,
        base_seed,
        sampler,
        counts,
    })
}

/// Sample statistics of the ensemble at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub t: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Lower empirical quantiles, in the order requested.
    pub quantiles: Vec<u64>,
    pub max: u64,
    pub zero_rate: f64,
}

impl HorizonSummary {
    /// Standard error of `mean`.
    pub fn mean_se(&self, n: usize) -> f64 {
        (self.variance / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_replicates: usize,
    pub quantile_levels: Vec<f64>,
    pub rows: Vec<HorizonSummary>,
}

impl EnsembleSummary {
    pub fn row(&self, t: usize) -> &HorizonSummary {
        &self.rows[t - 1]
    }

    /// `max_{s <= t}` of the per-horizon maxima.
    pub fn running_max(&self) -> Vec<u64> {
        self.rows
            .iter()
            .scan(0u64, |acc, r| {
                *acc = (*acc).max(r.max);
                Some(*acc)
            })
            .collect()
    }
}

fn rank_for(n: usize, q: f64) -> usize {
    let nf = n as f64;
    // Slack absorbs q·n landing a rounding step above an integer.
    let rank = (q * nf - 1e-9 * nf.max(1.0)).ceil().max(1.0) as usize;
    rank.min(n)
}

/// Smallest `y` whose empirical cdf reaches `q`, from an ascending sample.
pub fn lower_quantile(sorted: &[u64], q: f64) -> u64 {
    sorted[rank_for(sorted.len(), q) - 1]
}

fn check_levels(quantiles: &[f64]) -> Result<()> {
    if let Some(q) = quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(PgssError::InvalidParameter {
            name: "quantile",
            value: *q,
            reason: "quantile levels must lie in (0, 1)",
        });
    }
    Ok(())
}

/// Per-horizon frequency tables `count -> replicates`. Every statistic of
/// [`HorizonSummary`] is a function of these tables, and integer merges do
/// not depend on the order replicates are folded in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorizonFrequencies {
    n_replicates: usize,
    tables: Vec<BTreeMap<u64, u64>>,
}

const BLOCK: usize = 256;

fn merge_tables(mut a: Vec<BTreeMap<u64, u64>>, b: Vec<BTreeMap<u64, u64>>) -> Vec<BTreeMap<u64, u64>> {
    if a.is_empty() {
        return b;
    }
    for (ta, tb) in a.iter_mut().zip(b) {
        for (y, f) in tb {
            *ta.entry(y).or_insert(0) += f;
        }
    }
    a
}

impl HorizonFrequencies {
    /// Simulates the same replicates as [`build_ensemble`] but keeps only
    /// the frequency tables, so memory is independent of `n`.
    pub fn simulate(spec: &ModelSpec, horizon: usize, n: usize, base_seed: u64, sampler: SamplerChoice) -> Result<Self> {
        check_sizes(horizon, n)?;
        let blocks = n.div_ceil(BLOCK);
        let tables = (0..blocks)
            .into_par_iter()
            .map(|blk| {
                let mut local = vec![BTreeMap::new(); horizon];
                let mut row = vec![0u64; horizon];
                for i in blk * BLOCK..((blk + 1) * BLOCK).min(n) {
                    fill_replicate(spec, base_seed, sampler, i, &mut row)?;
                    for (table, &y) in local.iter_mut().zip(&row) {
                        *table.entry(y).or_insert(0) += 1;
                    }
                }
                Ok(local)
            })
            .try_reduce(Vec::new, |a, b| Ok(merge_tables(a, b)))?;
        Ok(Self { n_replicates: n, tables })
    }

    pub fn from_ensemble(ensemble: &PredictiveEnsemble) -> Self {
        let mut tables = vec![BTreeMap::new(); ensemble.horizon];
        for row in ensemble.counts.chunks(ensemble.horizon) {
            for (table, &y) in tables.iter_mut().zip(row) {
                *table.entry(y).or_insert(0) += 1;
            }
        }
        Self {
            n_replicates: ensemble.n_replicates,
            tables,
        }
    }

    pub fn horizon(&self) -> usize {
        self.tables.len()
    }

    pub fn n_replicates(&self) -> usize {
        self.n_replicates
    }

    /// Frequency table at horizon `t` (1-based).
    pub fn table(&self, t: usize) -> &BTreeMap<u64, u64> {
        &self.tables[t - 1]
    }

    fn row(&self, t: usize, quantiles: &[f64]) -> HorizonSummary {
        let table = self.table(t);
        let n = self.n_replicates;
        let nf = n as f64;
        let total: u128 = table.iter().map(|(&y, &f)| y as u128 * f as u128).sum();
        let mean = total as f64 / nf;
        let variance = if n > 1 {
            table.iter().map(|(&y, &f)| f as f64 * (y as f64 - mean).powi(2)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        let quantiles = quantiles
            .iter()
            .map(|&q| {
                let rank = rank_for(n, q) as u64;
                let mut cum = 0u64;
                for (&y, &f) in table {
                    cum += f;
                    if cum >= rank {
                        return y;
                    }
                }
                unreachable!("frequencies sum to n")
            })
            .collect();
        HorizonSummary {
            t,
            mean,
            variance,
            quantiles,
            max: *table.keys().next_back().expect("non-empty ensemble"),
            zero_rate: table.get(&0).copied().unwrap_or(0) as f64 / nf,
        }
    }

    pub fn summarize(&self, quantiles: &[f64]) -> Result<EnsembleSummary> {
        check_levels(quantiles)?;
        let rows = (1..=self.horizon()).into_par_iter().map(|t| self.row(t, quantiles)).collect();
        Ok(EnsembleSummary {
            n_replicates: self.n_replicates,
            quantile_levels: quantiles.to_vec(),
            rows,
        })
    }

    /// Unit-width histogram `(count, replicates with that count)` at horizon
    /// `t`, covering `0..=max`.
    pub fn histogram(&self, t: usize) -> Result<Vec<(u64, u64)>> {
        if t == 0 || t > self.horizon() {
            return Err(PgssError::InvalidInput(format!(
                "histogram horizon {t} outside 1..={}",
                self.horizon()
            )));
        }
        let table = self.table(t);
        let max = *table.keys().next_back().expect("non-empty ensemble");
        let max_bins = 50_000_000;
        if max > max_bins {
            return Err(PgssError::InvalidInput(format!(
                "histogram at t = {t} would need {max} bins"
            )));
        }
        Ok((0..=max).map(|c| (c, table.get(&c).copied().unwrap_or(0))).collect())
    }
}

pub fn summarize(ensemble: &PredictiveEnsemble, quantiles: &[f64]) -> Result<EnsembleSummary> {
    check_levels(quantiles)?;
    HorizonFrequencies::from_ensemble(ensemble).summarize(quantiles)
}

pub fn histogram(ensemble: &PredictiveEnsemble, t: usize) -> Result<Vec<(u64, u64)>> {
    if t == 0 || t > ensemble.horizon {
        return Err(PgssError::InvalidInput(format!(
            "histogram horizon {t} outside 1..={}",
            ensemble.horizon
        )));
    }
    HorizonFrequencies::from_ensemble(ensemble).histogram(t)
}
