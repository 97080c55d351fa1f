//! Chi-square goodness-of-fit and homogeneity tests over integer samples.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{PgssError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Inclusive lower edge of each pooled bin; the last bin is open above.
    pub bin_edges: Vec<u64>,
}

impl ChiSquareTest {
    pub fn rejects_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

fn p_value(statistic: f64, df: usize) -> Result<f64> {
    let dist = ChiSquared::new(df as f64).map_err(|e| PgssError::Internal(e.to_string()))?;
    Ok(dist.sf(statistic))
}

/// Groups consecutive values `0, 1, 2, ...` into bins whose weight (as judged
/// by `weight(lo, hi)`) reaches `min_weight`; a light tail is merged into the
/// previous bin.
fn pool_bins(max: u64, min_weight: f64, weight: impl Fn(u64, u64) -> f64) -> Vec<u64> {
    let mut edges = vec![0u64];
    let mut lo = 0u64;
    for v in 0..=max {
        if weight(lo, v) >= min_weight && v < max {
            edges.push(v + 1);
            lo = v + 1;
        }
    }
    if edges.len() > 1 && weight(lo, u64::MAX) < min_weight {
        edges.pop();
    }
    edges
}

fn bin_of(edges: &[u64], y: u64) -> usize {
    edges.partition_point(|&e| e <= y) - 1
}

/// Two-sample chi-square test of homogeneity. Bins are pooled until each
/// sample's expected count is at least `min_expected`.
pub fn two_sample_chi_square(x: &[u64], y: &[u64], min_expected: f64) -> Result<ChiSquareTest> {
    if x.is_empty() || y.is_empty() {
        return Err(PgssError::InvalidInput("chi-square test needs two non-empty samples".into()));
    }
    let max = x.iter().chain(y).copied().max().unwrap_or(0);
    let cap = max.min(10_000_000);
    let mut pooled = vec![0u64; cap as usize + 2];
    for &v in x.iter().chain(y) {
        pooled[v.min(cap + 1) as usize] += 1;
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let n = nx + ny;
    let smaller = nx.min(ny);
    let pooled_ref = &pooled;
    let edges = pool_bins(cap, min_expected, |lo, hi| {
        let hi = hi.min(cap + 1);
        let c: u64 = pooled_ref[lo as usize..=hi as usize].iter().sum();
        smaller * c as f64 / n
    });
    if edges.len() < 2 {
        return Err(PgssError::InvalidInput("samples too concentrated for a chi-square test".into()));
    }
    let k = edges.len();
    let mut ox = vec![0f64; k];
    let mut oy = vec![0f64; k];
    for &v in x {
        ox[bin_of(&edges, v)] += 1.0;
    }
    for &v in y {
        oy[bin_of(&edges, v)] += 1.0;
    }
    let mut stat = 0.0;
    for j in 0..k {
        let total = ox[j] + oy[j];
        let ex = nx * total / n;
        let ey = ny * total / n;
        stat += (ox[j] - ex).powi(2) / ex + (oy[j] - ey).powi(2) / ey;
    }
    let df = k - 1;
    Ok(ChiSquareTest {
        statistic: stat,
        df,
        p_value: p_value(stat, df)?,
        bin_edges: edges,
    })
}

/// One-sample chi-square goodness of fit against a p.m.f. on `0, 1, 2, ...`.
pub fn chi_square_gof(sample: &[u64], pmf: impl Fn(u64) -> f64, min_expected: f64) -> Result<ChiSquareTest> {
    if sample.is_empty() {
        return Err(PgssError::InvalidInput("chi-square test needs a non-empty sample".into()));
    }
    let n = sample.len() as f64;
    // Cover the support until the remaining mass is negligible.
    let mut probs = Vec::new();
    let mut acc = 0.0;
    let mut v = 0u64;
    while acc < 1.0 - 1e-12 && v < 10_000_000 {
        let p = pmf(v);
        probs.push(p);
        acc += p;
        v += 1;
    }
    let max = probs.len() as u64 - 1;
    let mass = |lo: u64, hi: u64| -> f64 {
        if hi >= max {
            1.0 - probs[..lo as usize].iter().sum::<f64>()
        } else {
            probs[lo as usize..=hi as usize].iter().sum()
        }
    };
    let edges = pool_bins(max, min_expected / n, mass);
    if edges.len() < 2 {
        return Err(PgssError::InvalidInput("p.m.f. too concentrated for a chi-square test".into()));
    }
    let k = edges.len();
    let mut obs = vec![0f64; k];
    for &y in sample {
        obs[bin_of(&edges, y)] += 1.0;
    }
    let mut stat = 0.0;
    for j in 0..k {
        let hi = if j + 1 < k { edges[j + 1] - 1 } else { u64::MAX };
        let expected = n * mass(edges[j], hi);
        stat += (obs[j] - expected).powi(2) / expected;
    }
    let df = k - 1;
    Ok(ChiSquareTest {
        statistic: stat,
        df,
        p_value: p_value(stat, df)?,
        bin_edges: edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::variates::{draw_poisson, RngStream};

    #[test]
    fn identical_samples_do_not_reject() {
        let x: Vec<u64> = (0..1000).map(|i| i % 7).collect();
        let t = two_sample_chi_square(&x, &x, 5.0).unwrap();
        assert!(t.statistic.abs() < 1e-12);
        assert!(t.p_value > 0.999);
    }

    #[test]
    fn shifted_samples_reject() {
        let x: Vec<u64> = (0..5000).map(|i| i % 7).collect();
        let y: Vec<u64> = (0..5000).map(|i| i % 7 + 1).collect();
        let t = two_sample_chi_square(&x, &y, 5.0).unwrap();
        assert!(t.rejects_at(1e-6));
    }

    #[test]
    fn pooled_bins_meet_minimum() {
        let x: Vec<u64> = (0..300).map(|i| if i < 290 { 0 } else { i }).collect();
        let t = two_sample_chi_square(&x, &x, 5.0).unwrap();
        assert!(t.bin_edges.len() >= 2);
        assert_eq!(t.bin_edges[0], 0);
    }

    #[test]
    fn poisson_draws_fit_pmf() {
        use crate::simulate::variates::ln_poisson_pmf;
        for (seed, mean) in [(1u64, 3.3), (2, 9.99), (3, 10.0), (4, 57.0), (5, 4000.0)] {
            let mut rng = RngStream::new(seed, 0);
            let xs: Vec<u64> = (0..100_000).map(|_| draw_poisson(mean, &mut rng).unwrap()).collect();
            let t = chi_square_gof(&xs, |k| ln_poisson_pmf(k as f64, mean).exp(), 5.0).unwrap();
            assert!(!t.rejects_at(1e-3), "mean {mean}: {t:?}");
        }
    }
}
